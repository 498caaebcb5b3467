"""Closed-form smoothed contact impulse model.

The normal impulse at each contact solves a scalar QP that trades
penetration depth against impulse magnitude; the tangential pair solves a
disc-constrained QP that minimizes the next-step sliding velocity.  Both
solutions collapse to max-expressions,

    lambda_n = r_n * max(-gap_next, 0)
    lambda_t = v_hat * max(-mu * lambda_n, -r_t * ||v_t||),

which are C^1-smoothed with a softmax so the whole impulse map can sit
inside a gradient-based optimizer.  The sliding direction v_hat uses a
regularized norm sqrt(v.v + eps^2) so it stays defined at v = 0; the same
eps controls the softmax.

Everything here is impulse-valued: r_n is impulse per meter of
penetration and r_t impulse per unit sliding velocity.  Larger r_n makes
the ground harder, larger r_t makes it less slippery; as r_t -> 0 the
tangential impulse vanishes (frictionless limit).
"""

from __future__ import annotations

from dataclasses import dataclass

import jax.numpy as jnp
import numpy as np


@dataclass(frozen=True)
class ContactParams:
    """Per-contact ground parameters (hardness, dissipation, friction, smoothing)."""

    r_n: float
    r_t: float
    mu: float
    eps: float = 1e-3

    def __post_init__(self):
        if not self.r_n > 0.0:
            raise ValueError("r_n must be positive")
        if self.r_t < 0.0:
            raise ValueError("r_t must be nonnegative")
        if self.mu < 0.0:
            raise ValueError("mu must be nonnegative")
        if not self.eps > 0.0:
            raise ValueError("eps must be positive")


@dataclass
class ImpulseSet:
    """Per-contact impulses in contact frames, columns (t1, t2, n)."""

    values: np.ndarray  # (n_c, 3)

    @property
    def tangential(self):
        return self.values[:, 0:2]

    @property
    def normal(self):
        return self.values[:, 2]

    @property
    def flat(self):
        return np.ravel(self.values)


def smooth_max(a, b, eps):
    """Softmax (a + b + sqrt((a-b)^2 + eps^2)) / 2; >= max(a, b), exact as eps -> 0."""
    a = jnp.asarray(a)
    b = jnp.asarray(b)
    return 0.5 * (a + b + jnp.sqrt((a - b) ** 2 + eps**2))


def smooth_norm(v, eps):
    """sqrt(v.v + eps^2); a smooth, strictly positive stand-in for ||v||."""
    v = jnp.asarray(v)
    return jnp.sqrt(jnp.sum(v * v, axis=-1) + eps**2)


def normal_impulse(gap_next, params):
    """Normal impulse for the next-step gap distance (negative gap = penetration)."""
    return params.r_n * smooth_max(-jnp.asarray(gap_next), 0.0, params.eps)


def tangential_impulse(v_t_next, lambda_n, params):
    """Tangential impulse pair for the next-step contact-frame sliding velocity.

    Interior regime: -r_t * v (pure velocity penalization).  Boundary
    regime: -mu * lambda_n * v_hat (friction cone).  The softmax blends
    the two; the result always opposes the sliding velocity.
    """
    v = jnp.asarray(v_t_next)
    nrm = smooth_norm(v, params.eps)
    scale = smooth_max(-params.mu * jnp.asarray(lambda_n), -params.r_t * nrm, params.eps)
    return v / nrm * scale


def params_arrays(params, n_c):
    """Broadcast a ContactParams or sequence thereof to per-contact arrays."""
    if isinstance(params, ContactParams):
        params = [params] * n_c
    params = list(params)
    if len(params) != n_c:
        raise ValueError(f"expected {n_c} contact parameter sets, got {len(params)}")
    r_n = jnp.array([p.r_n for p in params])
    r_t = jnp.array([p.r_t for p in params])
    mu = jnp.array([p.mu for p in params])
    eps = jnp.array([p.eps for p in params])
    return r_n, r_t, mu, eps


def stacked_impulses(gaps, contact_velocities, r_n, r_t, mu, eps):
    """Vectorized impulse map over contacts; jax-traceable core.

    ``contact_velocities`` is (n_c, 3) next-step velocity in contact
    frames; returns (n_c, 3) impulses with columns (t1, t2, n).
    """
    gaps = jnp.asarray(gaps)
    cv = jnp.asarray(contact_velocities)
    lam_n = r_n * smooth_max(-gaps, 0.0, eps)
    vt = cv[:, 0:2]
    nrm = jnp.sqrt(jnp.sum(vt * vt, axis=1) + eps**2)
    scale = smooth_max(-mu * lam_n, -r_t * nrm, eps)
    lam_t = vt / nrm[:, None] * scale[:, None]
    return jnp.concatenate([lam_t, lam_n[:, None]], axis=1)


def contact_impulses(kin, v_next, params):
    """Impulses for one knot from its next-step kinematics and velocity.

    ``kin`` must be evaluated at the next-step configuration and
    ``v_next`` is the matching physical-basis generalized velocity; the
    returned frames follow ``kin.frame``.
    """
    from .models import GeneralizedVelocity

    n_c = int(kin.gap.shape[0])
    r_n, r_t, mu, eps = params_arrays(params, n_c)
    if isinstance(v_next, GeneralizedVelocity):
        v = jnp.concatenate(
            [
                jnp.asarray(v_next.angular),
                jnp.asarray(v_next.linear),
                jnp.asarray(v_next.joints),
            ]
        )
    else:
        v = jnp.asarray(v_next)
    cv = (kin.jacobian @ v).reshape(n_c, 3)
    vals = stacked_impulses(kin.gap, cv, r_n, r_t, mu, eps)
    return ImpulseSet(values=np.asarray(vals))
