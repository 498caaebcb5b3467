"""Floating-base kinematics and dynamics for the bundled models.

Two velocity bases are used side by side:

* the *physical* basis (body-frame angular velocity, world-frame linear
  velocity, joint rates), which is what ``GeneralizedVelocity`` stores and
  what the public operations below speak;
* the *configuration-rate* basis q_dot (plain time derivatives of the
  generalized coordinates, with the MRP rate standing in for angular
  velocity), which is what the discrete dynamics and the transcription
  work in, because there the velocity is eliminated as a plain difference
  of configurations.

For the planar hopper the two bases coincide.  ``velocity_transform``
maps rate to physical, u = T(q) q_dot.

All functions are pure and jax-traceable in the array arguments; the
model argument is static.
"""

from __future__ import annotations

from dataclasses import dataclass

import jax
import jax.numpy as jnp
import numpy as np

from .models import FloatingBody, PlanarHopper, pack_configuration, pack_velocity
from .rotations import (
    angular_velocity_matrix,
    mrp_rate_matrix,
    mrp_to_rotation,
    skew,
)


@dataclass
class ContactKinematics:
    """Gap distances, contact Jacobian, and contact frames at one configuration.

    ``jacobian`` has three rows (t1, t2, n) per contact and maps the
    physical-basis generalized velocity to stacked contact-frame
    velocities.  For the flat floor all frames equal the world axes.
    """

    gap: jnp.ndarray  # (n_c,)
    jacobian: jnp.ndarray  # (3 n_c, n_q)
    frame: jnp.ndarray  # (n_c, 3, 3)


# --- hopper link geometry ----------------------------------------------------


def _hopper_points(model, q):
    """World positions of the torso CoM, link CoMs, and foot tip (planar x-z)."""
    l1, l2 = model.link_lengths
    a1 = q[2] + q[3]
    a2 = a1 + q[4]
    u1 = jnp.array([jnp.sin(a1), -jnp.cos(a1)])
    u2 = jnp.array([jnp.sin(a2), -jnp.cos(a2)])
    hip = q[0:2]
    knee = hip + l1 * u1
    foot = knee + l2 * u2
    com1 = hip + 0.5 * l1 * u1
    com2 = knee + 0.5 * l2 * u2
    return hip, com1, com2, foot


def hopper_foot_position(model, q):
    """Planar (x, z) position of the foot tip."""
    return _hopper_points(model, jnp.asarray(q))[3]


def _hopper_kinetic(model, q, qdot):
    m1, m2 = model.link_masses
    l1, l2 = model.link_lengths
    i1 = m1 * l1**2 / 12.0
    i2 = m2 * l2**2 / 12.0

    def coms(qq):
        _, c1, c2, _ = _hopper_points(model, qq)
        return jnp.concatenate([c1, c2])

    _, dcoms = jax.jvp(coms, (q,), (qdot,))
    v1, v2 = dcoms[0:2], dcoms[2:4]
    w_t = qdot[2]
    w1 = qdot[2] + qdot[3]
    w2 = w1 + qdot[4]
    return (
        0.5 * model.torso_mass * (qdot[0] ** 2 + qdot[1] ** 2)
        + 0.5 * model.torso_inertia * w_t**2
        + 0.5 * m1 * v1 @ v1
        + 0.5 * i1 * w1**2
        + 0.5 * m2 * v2 @ v2
        + 0.5 * i2 * w2**2
    )


def _hopper_potential(model, q):
    _, c1, c2, _ = _hopper_points(model, q)
    m1, m2 = model.link_masses
    return model.gravity * (model.torso_mass * q[1] + m1 * c1[1] + m2 * c2[1])


# --- contact geometry --------------------------------------------------------


def contact_world_offsets(model, q):
    """Vectors from the base origin to each contact point, world frame, (n_c, 3)."""
    if isinstance(model, FloatingBody):
        if model.radius > 0.0:
            return jnp.array([[0.0, 0.0, -model.radius]])
        rot = mrp_to_rotation(q[0:3])
        offs = jnp.asarray(model.contact_offsets)
        return offs @ rot.T
    raise NotImplementedError(model)


def contact_gaps(model, q):
    """Signed distance of every contact point to the floor plane z = 0."""
    q = jnp.asarray(q)
    if isinstance(model, FloatingBody):
        return q[5] + contact_world_offsets(model, q)[:, 2]
    if isinstance(model, PlanarHopper):
        return hopper_foot_position(model, q)[1:2]
    raise NotImplementedError(model)


def _contact_jacobian_phys(model, q):
    if isinstance(model, FloatingBody):
        rot = mrp_to_rotation(q[0:3])
        offs = contact_world_offsets(model, q)

        def one(d):
            return jnp.hstack([-skew(d) @ rot, jnp.eye(3)])

        return jnp.concatenate([one(offs[i]) for i in range(model.n_c)], axis=0)
    if isinstance(model, PlanarHopper):
        jac2 = jax.jacfwd(lambda qq: hopper_foot_position(model, qq))(q)
        return jnp.vstack([jac2[0], jnp.zeros(model.n_q), jac2[1]])
    raise NotImplementedError(model)


def _as_q(model, q):
    """Coerce a Configuration or array to a jnp vector without breaking tracing."""
    if isinstance(q, (jax.Array, jax.core.Tracer)):
        return jnp.asarray(q)
    return jnp.asarray(pack_configuration(model, q))


def _as_v(model, v):
    if isinstance(v, (jax.Array, jax.core.Tracer)):
        return jnp.asarray(v)
    return jnp.asarray(pack_velocity(model, v))


def contact_kinematics(model, q):
    """Gap, Jacobian (physical basis), and frames at a configuration."""
    q = _as_q(model, q)
    gaps = contact_gaps(model, q)
    jac = _contact_jacobian_phys(model, q)
    frames = jnp.broadcast_to(jnp.eye(3), (model.n_c, 3, 3))
    return ContactKinematics(gap=gaps, jacobian=jac, frame=frames)


# --- physical-basis dynamics -------------------------------------------------


def mass_matrix(model, q):
    """Generalized mass matrix in the physical velocity basis."""
    q = _as_q(model, q)
    if isinstance(model, FloatingBody):
        top = jnp.diag(jnp.asarray(model.inertia))
        return jnp.block(
            [
                [top, jnp.zeros((3, 3))],
                [jnp.zeros((3, 3)), model.mass * jnp.eye(3)],
            ]
        )
    if isinstance(model, PlanarHopper):
        return jax.hessian(lambda qd: _hopper_kinetic(model, q, qd))(jnp.zeros(model.n_q))
    raise NotImplementedError(model)


def bias_forces(model, q, v):
    """Coriolis, centrifugal, and gravity wrench in the physical basis.

    At v = 0 this reduces to the gravity terms alone.
    """
    q = _as_q(model, q)
    v = _as_v(model, v)
    if isinstance(model, FloatingBody):
        omega = v[0:3]
        inertia = jnp.asarray(model.inertia)
        gyro = jnp.cross(omega, inertia * omega)
        grav = jnp.array([0.0, 0.0, model.mass * model.gravity])
        return jnp.concatenate([gyro, grav])
    if isinstance(model, PlanarHopper):
        return bias_forces_rate(model, q, v)
    raise NotImplementedError(model)


# --- configuration-rate basis ------------------------------------------------


def velocity_transform(model, q):
    """Matrix T(q) with u_physical = T(q) @ q_dot."""
    q = jnp.asarray(q)
    if isinstance(model, FloatingBody):
        g = angular_velocity_matrix(q[0:3])
        return jnp.block(
            [
                [g, jnp.zeros((3, 3))],
                [jnp.zeros((3, 3)), jnp.eye(3)],
            ]
        )
    if isinstance(model, PlanarHopper):
        return jnp.eye(model.n_q)
    raise NotImplementedError(model)


def rate_from_velocity(model, q, v):
    """Configuration rate q_dot for a physical-basis velocity u.

    Uses the closed-form MRP inverse sigma_dot = 0.25 B(sigma) omega.
    """
    q = jnp.asarray(q)
    v = jnp.asarray(v)
    if isinstance(model, FloatingBody):
        sdot = 0.25 * mrp_rate_matrix(q[0:3]) @ v[0:3]
        return jnp.concatenate([sdot, v[3:6]])
    if isinstance(model, PlanarHopper):
        return v
    raise NotImplementedError(model)


def velocity_from_rate(model, q, qdot):
    """Physical-basis velocity u for a configuration rate q_dot."""
    return velocity_transform(model, jnp.asarray(q)) @ jnp.asarray(qdot)


def mass_matrix_rate(model, q):
    """Mass matrix pulled back to the configuration-rate basis."""
    if isinstance(model, PlanarHopper):
        return mass_matrix(model, q)
    t = velocity_transform(model, q)
    return t.T @ mass_matrix(model, q) @ t


def bias_forces_rate(model, q, qdot):
    """Bias forces in the configuration-rate basis.

    For the floating body this applies the quasi-velocity transformation
    H_rate = T^T (M_phys Tdot q_dot + H_phys); for the hopper it is the
    Euler-Lagrange bias computed from the link energies.
    """
    q = jnp.asarray(q)
    qdot = jnp.asarray(qdot)
    if isinstance(model, FloatingBody):
        sigma, sdot = q[0:3], qdot[0:3]
        _, gdot = jax.jvp(angular_velocity_matrix, (sigma,), (sdot,))
        t = velocity_transform(model, q)
        u = t @ qdot
        tdot_qdot = jnp.concatenate([gdot @ sdot, jnp.zeros(3)])
        return t.T @ (mass_matrix(model, q) @ tdot_qdot + bias_forces(model, q, u))
    if isinstance(model, PlanarHopper):
        dt_dqdot = jax.grad(lambda qq, qd: _hopper_kinetic(model, qq, qd), argnums=1)
        _, conv = jax.jvp(lambda qq: dt_dqdot(qq, qdot), (q,), (qdot,))
        dt_dq = jax.grad(lambda qq: _hopper_kinetic(model, qq, qdot))(q)
        dv_dq = jax.grad(lambda qq: _hopper_potential(model, qq))(q)
        return conv - dt_dq + dv_dq
    raise NotImplementedError(model)


def contact_jacobian_rate(model, q):
    """Contact Jacobian acting on configuration rates, (3 n_c, n_q)."""
    if isinstance(model, PlanarHopper):
        return _contact_jacobian_phys(model, jnp.asarray(q))
    q = jnp.asarray(q)
    return _contact_jacobian_phys(model, q) @ velocity_transform(model, q)


def kinetic_energy_rate(model, q, qdot):
    """Kinetic energy as a function of configuration rate."""
    q = jnp.asarray(q)
    qdot = jnp.asarray(qdot)
    if isinstance(model, FloatingBody):
        u = velocity_transform(model, q) @ qdot
        inertia = jnp.asarray(model.inertia)
        return 0.5 * (u[0:3] @ (inertia * u[0:3]) + model.mass * u[3:6] @ u[3:6])
    if isinstance(model, PlanarHopper):
        return _hopper_kinetic(model, q, qdot)
    raise NotImplementedError(model)


def potential_energy(model, q):
    q = jnp.asarray(q)
    if isinstance(model, FloatingBody):
        return model.mass * model.gravity * q[5]
    if isinstance(model, PlanarHopper):
        return _hopper_potential(model, q)
    raise NotImplementedError(model)


# --- discrete dynamics -------------------------------------------------------


def discrete_step_residual(model, cp_arrays, h, q_prev, q_curr, q_next, tau=None):
    """All rows of the implicit discrete equation of motion at one knot.

    With q_dot_{k+1} = (q_next - q_curr) / h and impulses evaluated from
    the next-step gap and contact velocity,

        M(q_next) (q_next - 2 q_curr + q_prev)
            - h J(q_next)^T lambda - h^2 (S tau - H(q_next, q_dot_{k+1}))

    which vanishes on trajectories of the smoothed contact dynamics.  The
    unactuated rows are the transcription equality constraints; the
    actuated rows divided by h^2 recover the applied joint torques.
    """
    from .contact import stacked_impulses

    q_prev = jnp.asarray(q_prev)
    q_curr = jnp.asarray(q_curr)
    q_next = jnp.asarray(q_next)
    qdot = (q_next - q_curr) / h
    mass = mass_matrix_rate(model, q_next)
    bias = bias_forces_rate(model, q_next, qdot)
    gaps = contact_gaps(model, q_next)
    jac = contact_jacobian_rate(model, q_next)
    cvel = (jac @ qdot).reshape(model.n_c, 3)
    r_n, r_t, mu, eps = cp_arrays
    lam = stacked_impulses(gaps, cvel, r_n, r_t, mu, eps)
    res = mass @ (q_next - 2.0 * q_curr + q_prev) - h * (jac.T @ lam.ravel()) + h * h * bias
    if tau is not None and model.n_a > 0:
        res = res.at[jnp.array(model.actuated_index)].add(-h * h * jnp.asarray(tau))
    return res

