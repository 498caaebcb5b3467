"""Robot model definitions and generalized-coordinate packing.

Two model families cover the bundled benchmarks:

* ``FloatingBody`` -- an unactuated 3D rigid body over the flat floor
  z = 0 (the ball and brick drop tests).  Generalized coordinates are
  ordered [mrp(3); position(3)], matching the spatial convention of
  angular-before-linear used throughout.
* ``PlanarHopper`` -- a planar torso with a two-segment leg and a single
  foot contact, coordinates [x, z, pitch, hip, knee], with the two leg
  joints actuated and the three base coordinates unactuated.

Model instances are frozen (hashable) so compiled dynamics can be cached
per model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FloatingBody:
    """Single unactuated rigid body with point contacts against z = 0.

    ``radius > 0`` selects a sphere whose contact point is the lowest
    surface point (always straight below the center); otherwise
    ``contact_offsets`` lists body-fixed contact points.
    """

    mass: float
    inertia: tuple  # principal moments of inertia, body frame
    contact_offsets: tuple = ()
    radius: float = 0.0
    gravity: float = 9.81
    name: str = "body"

    @property
    def n_q(self):
        return 6

    @property
    def n_u(self):
        return 6

    @property
    def n_a(self):
        return 0

    @property
    def n_c(self):
        return 1 if self.radius > 0.0 else len(self.contact_offsets)

    @property
    def unactuated_index(self):
        return tuple(range(6))

    @property
    def actuated_index(self):
        return ()

    @property
    def total_mass(self):
        return self.mass

    @property
    def coordinate_names(self):
        return ("mrp_0", "mrp_1", "mrp_2", "pos_x", "pos_y", "pos_z")

    @property
    def velocity_names(self):
        return ("omega_x", "omega_y", "omega_z", "vel_x", "vel_y", "vel_z")


@dataclass(frozen=True)
class PlanarHopper:
    """Planar torso + two-link leg, foot tip as the single contact point.

    The leg hangs from the torso center; joint angle zero points the link
    straight down, and angles add up the chain (knee angle is relative to
    the thigh).  Link inertias are slender-rod values about the CoM.
    """

    torso_mass: float = 1.0
    torso_inertia: float = 0.02
    link_masses: tuple = (0.1, 0.1)
    link_lengths: tuple = (0.15, 0.15)
    gravity: float = 9.81
    name: str = "hopper"

    @property
    def n_q(self):
        return 5

    @property
    def n_u(self):
        return 3

    @property
    def n_a(self):
        return 2

    @property
    def n_c(self):
        return 1

    @property
    def unactuated_index(self):
        return (0, 1, 2)

    @property
    def actuated_index(self):
        return (3, 4)

    @property
    def total_mass(self):
        return self.torso_mass + sum(self.link_masses)

    @property
    def coordinate_names(self):
        return ("pos_x", "pos_z", "pitch", "hip", "knee")

    @property
    def velocity_names(self):
        return ("vel_x", "vel_z", "pitch_rate", "hip_rate", "knee_rate")


def ball_model(mass=0.2, radius=0.1, gravity=9.81):
    """Solid sphere; the simplest 3D floating model with one contact."""
    moment = 0.4 * mass * radius**2
    return FloatingBody(
        mass=mass,
        inertia=(moment, moment, moment),
        radius=radius,
        gravity=gravity,
        name="ball",
    )


def brick_model(mass=1.0, dimensions=(0.5, 0.3, 0.2), gravity=9.81):
    """Uniform-density box with its eight vertices as contact points."""
    lx, ly, lz = dimensions
    inertia = (
        mass * (ly**2 + lz**2) / 12.0,
        mass * (lx**2 + lz**2) / 12.0,
        mass * (lx**2 + ly**2) / 12.0,
    )
    offsets = tuple(
        (sx * lx / 2.0, sy * ly / 2.0, sz * lz / 2.0)
        for sx in (-1.0, 1.0)
        for sy in (-1.0, 1.0)
        for sz in (-1.0, 1.0)
    )
    return FloatingBody(
        mass=mass,
        inertia=inertia,
        contact_offsets=offsets,
        gravity=gravity,
        name="brick",
    )


def hopper_model(**overrides):
    return PlanarHopper(**overrides)


# --- user-facing state containers -------------------------------------------


@dataclass
class Configuration:
    """Generalized coordinates of a floating-base model."""

    base_position: np.ndarray
    base_orientation: np.ndarray  # MRP vector
    joints: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass
class GeneralizedVelocity:
    """Base angular velocity is body-frame; linear velocity is world-frame.

    This is not the time derivative of ``Configuration``: the MRP rate is
    related to the angular velocity through the MRP kinematic map.
    """

    angular: np.ndarray
    linear: np.ndarray
    joints: np.ndarray = field(default_factory=lambda: np.zeros(0))


def pack_configuration(model, cfg):
    """Flatten a Configuration (or pass an array through) to shape (n_q,)."""
    if isinstance(cfg, Configuration):
        q = np.concatenate(
            [
                np.asarray(cfg.base_orientation, float),
                np.asarray(cfg.base_position, float),
                np.asarray(cfg.joints, float),
            ]
        )
    else:
        q = np.asarray(cfg, dtype=float)
    if q.shape != (model.n_q,):
        raise ValueError(f"configuration has shape {q.shape}, expected ({model.n_q},)")
    return q


def unpack_configuration(model, q):
    q = np.asarray(q, dtype=float)
    if not isinstance(model, FloatingBody):
        raise ValueError("Configuration unpacking is defined for floating-body models")
    return Configuration(base_position=q[3:6].copy(), base_orientation=q[0:3].copy())


def pack_velocity(model, vel):
    """Flatten a GeneralizedVelocity (or pass an array through) to (n_q,)."""
    if isinstance(vel, GeneralizedVelocity):
        v = np.concatenate(
            [
                np.asarray(vel.angular, float),
                np.asarray(vel.linear, float),
                np.asarray(vel.joints, float),
            ]
        )
    else:
        v = np.asarray(vel, dtype=float)
    if v.shape != (model.n_q,):
        raise ValueError(f"velocity has shape {v.shape}, expected ({model.n_q},)")
    return v


def unpack_velocity(model, v):
    v = np.asarray(v, dtype=float)
    if not isinstance(model, FloatingBody):
        raise ValueError("GeneralizedVelocity unpacking is defined for floating-body models")
    return GeneralizedVelocity(angular=v[0:3].copy(), linear=v[3:6].copy())
