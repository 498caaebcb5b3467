"""Modified Rodrigues parameter (MRP) rotation utilities.

A rotation by angle theta about the unit axis n is stored as
sigma = tan(theta/4) * n, so the only singularity sits at a full
revolution, as far from the identity as a three-parameter chart allows.
The rational expressions below have no trigonometric calls and no unit
constraint, which makes them convenient decision variables.

Conventions: ``mrp_to_rotation`` returns the active body-to-world
rotation R, and angular velocities are body-frame, so Rdot = R [omega x].
"""

from __future__ import annotations

import jax.numpy as jnp
import numpy as np


def skew(v):
    """Cross-product matrix [v x], i.e. skew(v) @ u == cross(v, u)."""
    return jnp.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def mrp_to_rotation(sigma):
    """Body-to-world rotation matrix for an MRP vector."""
    sigma = jnp.asarray(sigma)
    s2 = sigma @ sigma
    sx = skew(sigma)
    return jnp.eye(3) + (4.0 * (1.0 - s2) * sx + 8.0 * sx @ sx) / (1.0 + s2) ** 2


def mrp_from_rotation(rot):
    """MRP vector of a proper rotation matrix (inverse of mrp_to_rotation).

    Quaternion extraction via the numerically dominant component, then
    sigma = q_vec / (1 + q_w) with q_w >= 0, which selects the branch with
    rotation angle <= pi (so ||sigma|| <= 1).  Not differentiable; intended
    for ingestion and testing rather than optimization.
    """
    c = np.asarray(rot, dtype=float)
    tr = c[0, 0] + c[1, 1] + c[2, 2]
    b2 = np.array(
        [
            (1.0 + tr) / 4.0,
            (1.0 + 2.0 * c[0, 0] - tr) / 4.0,
            (1.0 + 2.0 * c[1, 1] - tr) / 4.0,
            (1.0 + 2.0 * c[2, 2] - tr) / 4.0,
        ]
    )
    case = int(np.argmax(b2))
    q = np.zeros(4)  # (w, x, y, z)
    if case == 0:
        q[0] = np.sqrt(b2[0])
        q[1] = (c[2, 1] - c[1, 2]) / (4.0 * q[0])
        q[2] = (c[0, 2] - c[2, 0]) / (4.0 * q[0])
        q[3] = (c[1, 0] - c[0, 1]) / (4.0 * q[0])
    elif case == 1:
        q[1] = np.sqrt(b2[1])
        q[0] = (c[2, 1] - c[1, 2]) / (4.0 * q[1])
        q[2] = (c[1, 0] + c[0, 1]) / (4.0 * q[1])
        q[3] = (c[0, 2] + c[2, 0]) / (4.0 * q[1])
    elif case == 2:
        q[2] = np.sqrt(b2[2])
        q[0] = (c[0, 2] - c[2, 0]) / (4.0 * q[2])
        q[1] = (c[1, 0] + c[0, 1]) / (4.0 * q[2])
        q[3] = (c[2, 1] + c[1, 2]) / (4.0 * q[2])
    else:
        q[3] = np.sqrt(b2[3])
        q[0] = (c[1, 0] - c[0, 1]) / (4.0 * q[3])
        q[1] = (c[0, 2] + c[2, 0]) / (4.0 * q[3])
        q[2] = (c[2, 1] + c[1, 2]) / (4.0 * q[3])
    if q[0] < 0.0:
        q = -q
    return q[1:] / (1.0 + q[0])


def mrp_rate_matrix(sigma):
    """Kinematic matrix B with sigma_dot = 0.25 * B(sigma) @ omega_body."""
    sigma = jnp.asarray(sigma)
    s2 = sigma @ sigma
    return (1.0 - s2) * jnp.eye(3) + 2.0 * skew(sigma) + 2.0 * jnp.outer(sigma, sigma)


def mrp_rate(sigma, omega):
    """Time derivative of the MRP vector for a body-frame angular velocity."""
    return 0.25 * mrp_rate_matrix(sigma) @ jnp.asarray(omega)


def angular_velocity_matrix(sigma):
    """Matrix G with omega_body = G(sigma) @ sigma_dot.

    Uses the identity B^T B = (1 + ||sigma||^2)^2 I, so G = 4 B^T / (1+s2)^2.
    """
    sigma = jnp.asarray(sigma)
    s2 = sigma @ sigma
    return 4.0 * mrp_rate_matrix(sigma).T / (1.0 + s2) ** 2


def angular_velocity(sigma, sigma_dot):
    """Body-frame angular velocity reproducing a given MRP rate."""
    return angular_velocity_matrix(sigma) @ jnp.asarray(sigma_dot)
