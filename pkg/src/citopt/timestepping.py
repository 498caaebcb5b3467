"""Reference time-stepping simulation with impulse-based contact.

Discrete contact-space dynamics v+ = A lam + b + v- per step, with three
interchangeable impulse solvers:

* ``ncp``      -- nonlinear complementarity contact with Coulomb friction,
                  solved by Projected Gauss-Seidel (the validation baseline);
* ``convex``   -- the regularized convex forward model, solved by projected
                  block coordinate descent on the same sweep structure;
* ``analytic`` -- the closed-form smoothed model integrated implicitly
                  (per-step Newton solve), matching the transcription
                  dynamics exactly.

Integration is semi-implicit Euler for ``ncp``/``convex`` (velocities
first, positions with the new velocity, MRP coordinates advanced through
their kinematic rate) and implicit Euler for ``analytic``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, replace

import jax
import jax.numpy as jnp
import numpy as np

from . import dynamics
from .contact import ContactParams, ImpulseSet, params_arrays, stacked_impulses
from .models import pack_configuration, pack_velocity
from .solvers import SolveOptions, newton_root


@dataclass
class ContactSpaceSystem:
    """Contact-space dynamics v+ = A lam + b + v- for the active contacts."""

    a: np.ndarray  # (3 n, 3 n) Delassus matrix J M^-1 J^T
    b: np.ndarray  # (3 n,) actuation/bias velocity term h J M^-1 (S tau - H)
    v_minus: np.ndarray  # (3 n,) pre-step contact velocity


@dataclass
class SimState:
    """Configuration, physical-basis generalized velocity, and time."""

    q: np.ndarray
    v: np.ndarray
    t: float = 0.0


@dataclass
class PgsResult:
    """Impulse solve outcome; non-convergence keeps the last iterate."""

    impulses: ImpulseSet
    converged: bool
    iterations: int
    residual: float


@dataclass
class StepOptions:
    pgs_iterations: int = 200
    pgs_tol: float = 1e-10
    activation_margin: float = 1e-3  # [m] predicted-gap threshold for the solve
    correction_cap: float = 0.05  # [m/s] max outward penetration-correction velocity
    newton_tol: float = 1e-11  # analytic implicit step


@functools.lru_cache(maxsize=None)
def _sim_terms(model):
    def terms(q, qdot):
        mass = dynamics.mass_matrix_rate(model, q)
        bias = dynamics.bias_forces_rate(model, q, qdot)
        jac = dynamics.contact_jacobian_rate(model, q)
        gaps = dynamics.contact_gaps(model, q)
        return mass, bias, jac, gaps

    return jax.jit(terms)


@functools.lru_cache(maxsize=None)
def _analytic_step_fns(model):
    def residual(q_next, q_prev, q_curr, tau, cp, h):
        return dynamics.discrete_step_residual(
            model, cp, h, q_prev, q_curr, q_next, tau if model.n_a else None
        )

    jac = jax.jacfwd(residual, argnums=0)
    return jax.jit(residual), jax.jit(jac)


def _tau_full(model, tau):
    if model.n_a == 0:
        return np.zeros(model.n_q)
    full = np.zeros(model.n_q)
    full[list(model.actuated_index)] = np.asarray(tau, dtype=float)
    return full


def project_contact_space(model, q, v, tau, h, active=None):
    """Project the discrete dynamics into contact space.

    ``v`` is a physical-basis generalized velocity; ``active`` optionally
    selects a subset of contacts (default: all).  The result satisfies
    A = J M^-1 J^T (symmetric PSD), b = h J M^-1 (S tau - H),
    v_minus = J qdot.
    """
    q = pack_configuration(model, q)
    v = pack_velocity(model, v)
    qdot = np.asarray(dynamics.rate_from_velocity(model, q, v))
    mass, bias, jac, _ = (np.asarray(t) for t in _sim_terms(model)(q, qdot))
    if active is not None:
        rows = np.concatenate([np.arange(3 * i, 3 * i + 3) for i in active]) if len(active) else np.zeros(0, dtype=int)
        jac = jac[rows]
    minv_jt = np.linalg.solve(mass, jac.T)
    a = jac @ minv_jt
    force = _tau_full(model, np.zeros(model.n_a)) if tau is None else _tau_full(model, tau)
    b = h * (jac @ np.linalg.solve(mass, force - bias))
    v_minus = jac @ qdot
    return ContactSpaceSystem(a=a, b=b, v_minus=v_minus)


def _sweep_tangential(a, rhs, lam, i3, mu_i, ln):
    t_rows = (i3, i3 + 1)
    att = a[np.ix_(t_rows, t_rows)]
    w_t = a[t_rows, :] @ lam + rhs[list(t_rows)]
    det = att[0, 0] * att[1, 1] - att[0, 1] * att[1, 0]
    if abs(det) > 1e-14:
        d0 = (att[1, 1] * w_t[0] - att[0, 1] * w_t[1]) / det
        d1 = (att[0, 0] * w_t[1] - att[1, 0] * w_t[0]) / det
        lt = np.array([lam[i3] - d0, lam[i3 + 1] - d1])
    else:
        lt = np.array(
            [
                lam[i3] - (w_t[0] / att[0, 0] if att[0, 0] > 1e-14 else 0.0),
                lam[i3 + 1] - (w_t[1] / att[1, 1] if att[1, 1] > 1e-14 else 0.0),
            ]
        )
        if att[0, 0] <= 1e-14:
            lt[0] = 0.0
        if att[1, 1] <= 1e-14:
            lt[1] = 0.0
    cap = mu_i * ln
    nrm = float(np.hypot(lt[0], lt[1]))
    if nrm > cap:
        lt *= 0.0 if cap <= 0.0 else cap / nrm
    return lt


def pgs_solve(sys, mu, iterations=200, tol=1e-10):
    """Projected Gauss-Seidel on the NCP contact problem.

    Sweeps contacts in ascending index order (deterministic): the normal
    impulse takes a Gauss-Seidel update clamped to >= 0, then the
    tangential pair takes a 2x2 block update projected onto the friction
    disc of radius mu * lambda_n.  Terminates when the largest impulse
    change in a sweep drops below ``tol``.
    """
    a = np.asarray(sys.a, dtype=float)
    rhs = np.asarray(sys.b, dtype=float) + np.asarray(sys.v_minus, dtype=float)
    n = a.shape[0] // 3
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (n,))
    lam = np.zeros(3 * n)
    delta = np.inf
    sweeps = 0
    for sweeps in range(1, iterations + 1):
        delta = 0.0
        for i in range(n):
            i3 = 3 * i
            k = i3 + 2
            w_n = a[k, :] @ lam + rhs[k]
            ln = lam[k] - w_n / a[k, k] if a[k, k] > 1e-14 else 0.0
            ln = max(0.0, ln)
            delta = max(delta, abs(ln - lam[k]))
            lam[k] = ln
            lt = _sweep_tangential(a, rhs, lam, i3, mu[i], ln)
            delta = max(delta, abs(lt[0] - lam[i3]), abs(lt[1] - lam[i3 + 1]))
            lam[i3], lam[i3 + 1] = lt[0], lt[1]
        if delta < tol:
            break
    w = a @ lam + rhs
    comp = float(sum(lam[3 * i + 2] * max(w[3 * i + 2], 0.0) for i in range(n)))
    return PgsResult(
        impulses=ImpulseSet(values=lam.reshape(n, 3)),
        converged=delta < tol,
        iterations=sweeps,
        residual=max(delta if np.isfinite(delta) else 0.0, comp),
    )


def convex_forward_solve(sys, r_diag, mu, iterations=400, tol=1e-12):
    """Regularized convex forward model, solved by projected coordinate descent.

    Minimizes 0.5 lam^T (A + R) lam + lam^T (b + v-) subject to the
    per-contact friction cones; R positive diagonal makes the solution
    unique.
    """
    r_diag = np.asarray(r_diag, dtype=float)
    if np.any(r_diag <= 0.0):
        raise ValueError("regularization diagonal must be positive")
    reg = replace(sys, a=np.asarray(sys.a, dtype=float) + np.diag(r_diag))
    return pgs_solve(reg, mu, iterations=iterations, tol=tol)


def _contact_params_list(contact, n_c):
    if isinstance(contact, ContactParams):
        return [contact] * n_c
    contact = list(contact)
    if len(contact) != n_c:
        raise ValueError(f"expected {n_c} contact parameter sets, got {len(contact)}")
    return contact


def step(model, state, tau, h, contact, solver="ncp", options=None):
    """Advance one time step; returns (next_state, PgsResult-or-None).

    ``contact`` supplies mu for the ncp solver, the regularization and mu
    for the convex solver, and everything for the analytic solver.  The
    returned impulse set always covers all contacts (zeros where
    inactive).
    """
    opts = options or StepOptions()
    params = _contact_params_list(contact, model.n_c)
    q = pack_configuration(model, state.q)
    v = pack_velocity(model, state.v)
    qdot = np.asarray(dynamics.rate_from_velocity(model, q, v))

    if solver == "analytic":
        return _analytic_step(model, state, q, qdot, tau, h, params, opts)
    if solver not in ("ncp", "convex"):
        raise ValueError(f"unknown solver '{solver}'")

    mass, bias, jac, gaps = (np.asarray(t) for t in _sim_terms(model)(q, qdot))
    force = _tau_full(model, tau) if tau is not None else np.zeros(model.n_q)
    free_dv = np.linalg.solve(mass, h * (force - bias))

    normal_rates = (jac @ qdot)[2::3]
    predicted = gaps + h * normal_rates
    active = [i for i in range(model.n_c) if predicted[i] < opts.activation_margin]

    lam_full = np.zeros((model.n_c, 3))
    info = None
    if active:
        sys = project_contact_space(model, q, v, tau, h, active=active)
        mu = np.array([params[i].mu for i in active])
        if solver == "ncp":
            # fold the gap-stabilization target into the constant term:
            # demanded normal velocity -gap/h, outward correction capped.
            target = np.minimum(-gaps[np.array(active)] / h, opts.correction_cap)
            b_mod = sys.b.copy()
            b_mod[2::3] -= target
            sys = replace(sys, b=b_mod)
            info = pgs_solve(sys, mu, iterations=opts.pgs_iterations, tol=opts.pgs_tol)
        else:
            r_diag = np.concatenate(
                [
                    [1.0 / params[i].r_t if params[i].r_t > 0 else 1e12, ]
                    * 2
                    + [1.0 / params[i].r_n]
                    for i in active
                ]
            )
            info = convex_forward_solve(
                sys, r_diag, mu, iterations=2 * opts.pgs_iterations, tol=opts.pgs_tol
            )
        lam_active = info.impulses.values
        for row, i in enumerate(active):
            lam_full[i] = lam_active[row]
        rows = np.concatenate([np.arange(3 * i, 3 * i + 3) for i in active])
        contact_dv = np.linalg.solve(mass, jac[rows].T @ lam_active.ravel())
    else:
        contact_dv = np.zeros(model.n_q)

    qdot_next = qdot + free_dv + contact_dv
    q_next = q + h * qdot_next
    v_next = np.asarray(dynamics.velocity_from_rate(model, q_next, qdot_next))
    next_state = SimState(q=q_next, v=v_next, t=state.t + h)
    if info is None:
        info = PgsResult(
            impulses=ImpulseSet(values=lam_full), converged=True, iterations=0, residual=0.0
        )
    else:
        info = replace(info, impulses=ImpulseSet(values=lam_full))
    return next_state, info


def _analytic_step(model, state, q, qdot, tau, h, params, opts):
    residual_fn, jac_fn = _analytic_step_fns(model)
    cp = params_arrays(params, model.n_c)
    tau_arr = jnp.zeros(model.n_a) if tau is None else jnp.asarray(tau, dtype=float)
    q_prev = q - h * qdot

    def res(x):
        return np.asarray(residual_fn(x, q_prev, q, tau_arr, cp, h))

    def jac(x):
        return np.asarray(jac_fn(x, q_prev, q, tau_arr, cp, h))

    x0 = q + h * qdot
    sol_opts = SolveOptions(max_iterations=100, residual_tol=opts.newton_tol)
    q_next, report = newton_root(res, jac, x0, sol_opts)
    qdot_next = (q_next - q) / h
    gaps = np.asarray(dynamics.contact_gaps(model, q_next))
    jac_c = np.asarray(dynamics.contact_jacobian_rate(model, q_next))
    cvel = (jac_c @ qdot_next).reshape(model.n_c, 3)
    lam = np.asarray(stacked_impulses(gaps, cvel, *cp))
    v_next = np.asarray(dynamics.velocity_from_rate(model, q_next, qdot_next))
    info = PgsResult(
        impulses=ImpulseSet(values=lam),
        converged=report.converged,
        iterations=report.iterations,
        residual=report.residual_norm,
    )
    return SimState(q=q_next, v=v_next, t=state.t + h), info


def simulate(model, state0, h, n_steps, contact, solver="ncp", tau_fn=None, options=None):
    """Roll out ``n_steps`` steps; returns dict of stacked arrays.

    Impulse rows are stored at the arrival knot (the impulse recorded at
    row k acted during the step from knot k-1), with zeros at row 0, so
    records line up with the implicit transcription convention.
    """
    state = SimState(
        q=pack_configuration(model, state0.q),
        v=pack_velocity(model, state0.v),
        t=state0.t,
    )
    times = [state.t]
    qs = [state.q.copy()]
    vs = [state.v.copy()]
    lams = [np.zeros((model.n_c, 3))]
    all_converged = True
    for k in range(n_steps):
        tau = tau_fn(k, state) if tau_fn is not None else None
        state, info = step(model, state, tau, h, contact, solver=solver, options=options)
        all_converged = all_converged and info.converged
        times.append(state.t)
        qs.append(state.q.copy())
        vs.append(state.v.copy())
        lams.append(info.impulses.values.copy())
    return {
        "t": np.array(times),
        "q": np.array(qs),
        "v": np.array(vs),
        "impulses": np.array(lams),
        "converged": all_converged,
    }
