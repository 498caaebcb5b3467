"""Configuration-only direct transcription of the contact-implicit OCP.

Decision variables are the knot configurations q_0..q_{N-1} alone.
Velocities are eliminated through q_dot_{k+1} = (q_{k+1} - q_k) / h (the
initial condition enters through the ghost knot q_{-1} = q0 - h q_dot0),
actuated torques are recovered from the actuated rows of the discrete
dynamics, and the unactuated rows become equality constraints

    M^u_{k+1} (q_{k+1} - 2 q_k + q_{k-1})
        = h J^u_{k+1}^T lambda_{k+1} - h^2 H^u_{k+1},

with impulses from the closed-form contact model evaluated at the
next-step state.  The constraint Jacobian is banded: block k touches
knots k-1, k, k+1 only.

Derivatives of all callbacks are produced by forward-mode algorithmic
differentiation and are exact to machine precision.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import jax
import jax.numpy as jnp
import numpy as np

from . import dynamics
from .contact import ContactParams, params_arrays, stacked_impulses
from .models import pack_configuration, pack_velocity


@dataclass
class CostSpec:
    """Quadratic cost weights; any part may be absent (weight None or 0).

    Stage tracking and torque-effort terms are scaled by the step h; the
    final-state and waypoint terms are point costs.
    """

    configuration_weight: np.ndarray | None = None
    configuration_target: np.ndarray | None = None
    final_weight: np.ndarray | None = None
    final_target: np.ndarray | None = None
    torque_weight: np.ndarray | float = 0.0
    joint_velocity_weight: float = 0.0

    def validate(self, n_q):
        for name in ("configuration_weight", "final_weight"):
            w = getattr(self, name)
            if w is not None and np.any(np.asarray(w) < 0.0):
                raise ValueError(f"{name} must be nonnegative")
        if np.any(np.asarray(self.torque_weight) < 0.0):
            raise ValueError("torque_weight must be nonnegative")
        if self.joint_velocity_weight < 0.0:
            raise ValueError("joint_velocity_weight must be nonnegative")


@dataclass
class Waypoint:
    """Point cost weight * (q[knot, coordinate] - target)^2."""

    knot: int
    coordinate: int
    target: float
    weight: float


@dataclass
class TrajectoryProblem:
    """Discrete problem data: model, horizon, contact, costs, constraints."""

    model: object
    n_knots: int
    h: float
    contact: ContactParams | tuple
    q0: np.ndarray
    v0: np.ndarray  # physical basis (body angular velocity for 3D bases)
    cost: CostSpec = field(default_factory=CostSpec)
    waypoints: tuple = ()
    torque_limit: float | None = None

    def __post_init__(self):
        if self.n_knots < 2:
            raise ValueError("need at least two knots")
        if self.h <= 0.0:
            raise ValueError("step size must be positive")
        self.q0 = pack_configuration(self.model, self.q0)
        self.v0 = pack_velocity(self.model, self.v0)
        self.cost.validate(self.model.n_q)
        for wp in self.waypoints:
            if not (0 <= wp.knot < self.n_knots):
                raise ValueError(f"waypoint knot {wp.knot} out of range")

    @property
    def n_var(self):
        return self.n_knots * self.model.n_q

    @property
    def ghost(self):
        """Pre-horizon knot encoding the initial velocity, q0 - h * q_dot0."""
        qdot0 = np.asarray(dynamics.rate_from_velocity(self.model, self.q0, self.v0))
        return self.q0 - self.h * qdot0

    @property
    def knot_times(self):
        return self.h * np.arange(self.n_knots)


@dataclass
class DecisionTrajectory:
    """Knot configurations plus the ghost knot fixed at construction."""

    qs: np.ndarray  # (N, n_q)
    ghost: np.ndarray  # (n_q,)

    @classmethod
    def from_knots(cls, problem, qs):
        qs = np.asarray(qs, dtype=float).reshape(problem.n_knots, problem.model.n_q)
        return cls(qs=qs, ghost=problem.ghost)

    @classmethod
    def from_flat(cls, problem, x):
        return cls.from_knots(problem, np.asarray(x))

    @property
    def flat(self):
        return self.qs.ravel()


def eliminate_velocities(traj, h, model=None):
    """Knot velocities from configuration differences, (N, n_q).

    Backward differences against the previous knot (the ghost for knot 0),
    mapped through the MRP-rate inverse to physical-basis velocities when
    a model is given; otherwise plain configuration rates are returned.
    """
    full = np.vstack([traj.ghost[None, :], traj.qs])
    rates = (full[1:] - full[:-1]) / h
    if model is None:
        return rates
    return np.array(
        [np.asarray(dynamics.velocity_from_rate(model, q, qd)) for q, qd in zip(traj.qs, rates)]
    )


def recover_torques(q_prev, q_curr, q_next, problem):
    """Actuated joint torques implied by the discrete dynamics at a triple.

    The actuated rows of the selection matrix are unit rows, so the
    torque is read off without any matrix inversion; unactuated models
    return an empty vector.
    """
    model = problem.model
    if model.n_a == 0:
        return np.zeros(0)
    cp = params_arrays(problem.contact, model.n_c)
    res = dynamics.discrete_step_residual(model, cp, problem.h, q_prev, q_curr, q_next)
    return np.asarray(res)[list(model.actuated_index)] / problem.h**2


def underactuated_residual(traj, problem):
    """Stacked unactuated dynamics residual, shape ((N-1) * n_u,)."""
    fns = _compiled(problem)
    return np.asarray(fns.blocks(jnp.asarray(traj.qs))).ravel()


def objective(traj, problem):
    """Total cost of a decision trajectory."""
    fns = _compiled(problem)
    return float(fns.objective(jnp.asarray(traj.flat)))


@dataclass
class NlpDescription:
    """Callbacks and counts consumed by the solvers.

    Equality order: n_q initial-condition rows (q_0 - q0), then the
    (N-1) * n_u dynamics blocks in knot order.  ``eq_jacobian_coo``
    returns (rows, cols, values) triplets restricted to the banded
    structure; dense callbacks return exact zeros outside the band.
    """

    problem: TrajectoryProblem
    n_var: int
    n_eq: int
    n_ineq: int
    objective: object
    gradient: object
    eq_residual: object
    eq_jacobian: object
    eq_jacobian_coo: object
    inequalities: object
    ineq_jacobian: object
    lagrangian_hessian: object


class _CompiledProblem:
    """Jitted jax callables for one TrajectoryProblem."""

    def __init__(self, problem):
        model = problem.model
        n, nq, h = problem.n_knots, model.n_q, problem.h
        n_a = model.n_a
        cp = params_arrays(problem.contact, model.n_c)
        ghost = jnp.asarray(problem.ghost)
        q0 = jnp.asarray(problem.q0)
        uact = jnp.array(model.unactuated_index)
        act = jnp.array(model.actuated_index) if n_a else None
        cost = problem.cost

        def block_u(qp, qc, qn):
            res = dynamics.discrete_step_residual(model, cp, h, qp, qc, qn)
            return res[uact]

        def block_tau(qp, qc, qn):
            res = dynamics.discrete_step_residual(model, cp, h, qp, qc, qn)
            return res[act] / (h * h)

        def blocks(qs):
            full = jnp.vstack([ghost[None, :], qs])
            return jax.vmap(block_u)(full[:-2], full[1:-1], full[2:])

        def torques(qs):
            full = jnp.vstack([ghost[None, :], qs])
            return jax.vmap(block_tau)(full[:-2], full[1:-1], full[2:])

        def eq_flat(x):
            qs = x.reshape(n, nq)
            return jnp.concatenate([qs[0] - q0, blocks(qs).ravel()])

        def objective_flat(x):
            qs = x.reshape(n, nq)
            stage = 0.0
            if cost.configuration_weight is not None:
                target = (
                    jnp.zeros(nq)
                    if cost.configuration_target is None
                    else jnp.asarray(cost.configuration_target)
                )
                dq = qs[1:] - target
                stage = stage + jnp.sum(dq * dq * jnp.asarray(cost.configuration_weight))
            if n_a and cost.joint_velocity_weight > 0.0:
                full = jnp.vstack([ghost[None, :], qs])
                rates = (full[1:] - full[:-1]) / h
                jv = rates[1:][:, act]
                stage = stage + cost.joint_velocity_weight * jnp.sum(jv * jv)
            if n_a and np.any(np.asarray(cost.torque_weight) > 0.0):
                tq = torques(qs)
                stage = stage + jnp.sum(tq * tq * jnp.asarray(cost.torque_weight))
            total = h * stage
            if cost.final_weight is not None:
                target = (
                    jnp.zeros(nq)
                    if cost.final_target is None
                    else jnp.asarray(cost.final_target)
                )
                df = qs[-1] - target
                total = total + jnp.sum(df * df * jnp.asarray(cost.final_weight))
            for wp in problem.waypoints:
                total = total + wp.weight * (qs[wp.knot, wp.coordinate] - wp.target) ** 2
            return total

        def ineq_flat(x):
            tq = torques(x.reshape(n, nq))
            lim = jnp.broadcast_to(jnp.asarray(problem.torque_limit, dtype=float), (n_a,))
            return jnp.concatenate([(tq - lim).ravel(), (-tq - lim).ravel()])

        has_ineq = problem.torque_limit is not None and n_a > 0

        def lagrangian(x, y, z):
            val = objective_flat(x) + y @ eq_flat(x)
            if has_ineq:
                val = val + z @ ineq_flat(x)
            return val

        self.problem = problem
        self.blocks = jax.jit(blocks)
        self.block_jacs = jax.jit(jax.vmap(jax.jacfwd(block_u, argnums=(0, 1, 2))))
        self.torques = jax.jit(torques) if n_a else None
        self.objective = jax.jit(objective_flat)
        self.gradient = jax.jit(jax.jacfwd(objective_flat))
        self.eq_residual = jax.jit(eq_flat)
        self.eq_jacobian = jax.jit(jax.jacfwd(eq_flat))
        self.has_ineq = has_ineq
        if has_ineq:
            self.inequalities = jax.jit(ineq_flat)
            self.ineq_jacobian = jax.jit(jax.jacfwd(ineq_flat))
        else:
            self.inequalities = None
            self.ineq_jacobian = None
        self.lagrangian_hessian = jax.jit(jax.hessian(lagrangian, argnums=0))


@functools.lru_cache(maxsize=32)
def _compiled_cached(key):
    return _CompiledProblem(key.problem)


class _ProblemKey:
    """Hash a problem by the values that change its compiled callbacks."""

    def __init__(self, problem):
        self.problem = problem
        cp = problem.contact if isinstance(problem.contact, ContactParams) else tuple(problem.contact)
        cost = problem.cost
        self._key = (
            problem.model,
            problem.n_knots,
            problem.h,
            cp,
            _arr_key(problem.q0),
            _arr_key(problem.v0),
            _arr_key(cost.configuration_weight),
            _arr_key(cost.configuration_target),
            _arr_key(cost.final_weight),
            _arr_key(cost.final_target),
            _arr_key(cost.torque_weight),
            cost.joint_velocity_weight,
            tuple((w.knot, w.coordinate, w.target, w.weight) for w in problem.waypoints),
            problem.torque_limit,
        )

    def __hash__(self):
        return hash(self._key)

    def __eq__(self, other):
        return isinstance(other, _ProblemKey) and self._key == other._key


def _arr_key(a):
    if a is None:
        return None
    return tuple(np.ravel(np.asarray(a, dtype=float)).tolist())


def _compiled(problem):
    return _compiled_cached(_ProblemKey(problem))


def assemble_nlp(problem):
    """Build the NLP description: configuration variables only.

    Variables N * n_q; equalities n_q + (N-1) * n_u (initial condition
    plus unactuated dynamics); inequalities 2 * n_a * (N-1) torque box
    rows when a torque limit is set, else none.
    """
    fns = _compiled(problem)
    model = problem.model
    n, nq, n_u, n_a = problem.n_knots, model.n_q, model.n_u, model.n_a
    n_eq = nq + (n - 1) * n_u
    n_ineq = 2 * n_a * (n - 1) if fns.has_ineq else 0

    def objective_cb(x):
        return float(fns.objective(jnp.asarray(x)))

    def gradient_cb(x):
        return np.asarray(fns.gradient(jnp.asarray(x)))

    def eq_cb(x):
        return np.asarray(fns.eq_residual(jnp.asarray(x)))

    def eq_jac_cb(x):
        return np.asarray(fns.eq_jacobian(jnp.asarray(x)))

    def eq_jac_coo_cb(x):
        qs = jnp.asarray(np.asarray(x, dtype=float).reshape(n, nq))
        full = jnp.vstack([jnp.asarray(problem.ghost)[None, :], qs])
        jp, jc, jn = fns.block_jacs(full[:-2], full[1:-1], full[2:])
        rows, cols, vals = [], [], []
        idx = np.arange(nq)
        rows.append(idx)
        cols.append(idx)
        vals.append(np.ones(nq))
        jp, jc, jn = np.asarray(jp), np.asarray(jc), np.asarray(jn)
        for k in range(n - 1):
            row0 = nq + k * n_u
            rr, cc = np.meshgrid(np.arange(n_u), idx, indexing="ij")
            for jmat, var_knot in ((jp, k - 1), (jc, k), (jn, k + 1)):
                if var_knot < 0:
                    continue  # ghost knot is data, not a variable
                rows.append((row0 + rr).ravel())
                cols.append((var_knot * nq + cc).ravel())
                vals.append(jmat[k].ravel())
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)

    if fns.has_ineq:

        def ineq_cb(x):
            return np.asarray(fns.inequalities(jnp.asarray(x)))

        def ineq_jac_cb(x):
            return np.asarray(fns.ineq_jacobian(jnp.asarray(x)))

    else:
        ineq_cb = None
        ineq_jac_cb = None

    def lag_hess_cb(x, y_eq, z_in):
        z = jnp.asarray(z_in) if n_ineq else jnp.zeros(0)
        return np.asarray(fns.lagrangian_hessian(jnp.asarray(x), jnp.asarray(y_eq), z))

    return NlpDescription(
        problem=problem,
        n_var=problem.n_var,
        n_eq=n_eq,
        n_ineq=n_ineq,
        objective=objective_cb,
        gradient=gradient_cb,
        eq_residual=eq_cb,
        eq_jacobian=eq_jac_cb,
        eq_jacobian_coo=eq_jac_coo_cb,
        inequalities=ineq_cb,
        ineq_jacobian=ineq_jac_cb,
        lagrangian_hessian=lag_hess_cb,
    )


def recovered_torque_trajectory(traj, problem):
    """Torques at knots 1..N-1, shape (N, n_a) with a zero row at knot 0."""
    model = problem.model
    if model.n_a == 0:
        return np.zeros((problem.n_knots, 0))
    fns = _compiled(problem)
    tq = np.asarray(fns.torques(jnp.asarray(traj.qs)))
    return np.vstack([np.zeros((1, model.n_a)), tq])


def impulse_trajectory(traj, problem):
    """Contact impulses at each knot, (N, n_c, 3); zeros at knot 0."""
    model = problem.model
    cp = params_arrays(problem.contact, model.n_c)
    full = np.vstack([traj.ghost[None, :], traj.qs])
    out = [np.zeros((model.n_c, 3))]
    for k in range(1, problem.n_knots):
        q_next = full[k + 1]
        qdot = (full[k + 1] - full[k]) / problem.h
        gaps = np.asarray(dynamics.contact_gaps(model, q_next))
        jac = np.asarray(dynamics.contact_jacobian_rate(model, q_next))
        cvel = (jac @ qdot).reshape(model.n_c, 3)
        out.append(np.asarray(stacked_impulses(gaps, cvel, *cp)))
    return np.array(out)
