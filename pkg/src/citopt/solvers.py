"""Newton root-finding and augmented-Lagrangian NLP solvers.

``newton_root`` handles the unactuated problems, where the transcription
reduces to a square system of smooth equations.  ``augmented_lagrangian_solve``
handles actuated problems with equality constraints and torque-box
inequalities.  Both are deterministic: fixed evaluation order, no timing
dependence, so identical inputs give bitwise-identical iterates.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass
class SolveOptions:
    max_iterations: int = 200
    residual_tol: float = 1e-9
    step_tol: float = 1e-14
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 30
    penalty_initial: float = 10.0
    penalty_growth: float = 10.0
    penalty_max: float = 1e12
    reg_floor: float = 1e-8
    max_outer: int = 40

    def __post_init__(self):
        if self.residual_tol <= 0.0 or self.step_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.penalty_growth <= 1.0:
            raise ValueError("penalty growth factor must exceed 1")


@dataclass
class SolveReport:
    status: str  # converged | iteration-limit | line-search-failure
    iterations: int
    residual_norm: float
    wall_time: float
    objective: float | None = None

    @property
    def converged(self):
        return self.status == "converged"

    def summary_lines(self):
        lines = [
            f"status = {self.status}",
            f"iterations = {self.iterations}",
            f"residual_norm = {self.residual_norm:.6e}",
            f"wall_time_s = {self.wall_time:.3f}",
        ]
        if self.objective is not None:
            lines.append(f"objective = {self.objective:.12e}")
        return lines


def _solve_linear(mat, rhs):
    try:
        sol = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(sol)):
        return None
    return sol


def newton_root(residual, jacobian, x0, options=None):
    """Damped Newton for square smooth systems residual(x) = 0.

    Step acceptance combines an Armijo test on 0.5 ||r||^2 (the fast path
    on well-scaled problems) with Deuflhard's affine-covariant natural
    monotonicity test ||J_k^-1 r(x + a d)|| <= (1 - a/2) ||d||, which is
    what actually gets stiff contact residuals through: the plain merit
    has spurious stationary points wherever the Jacobian is near
    singular, while the covariant norm does not.  A Tikhonov-regularized
    least-squares direction replaces the Newton direction whenever the
    factorization fails.
    """
    opts = options or SolveOptions()
    start = time.perf_counter()
    x = np.array(x0, dtype=float)
    r = np.asarray(residual(x), dtype=float)
    status = "iteration-limit"
    it = 0
    alpha_prev = 1.0
    for it in range(1, opts.max_iterations + 1):
        rnorm = np.linalg.norm(r, ord=np.inf)
        if rnorm <= opts.residual_tol:
            status = "converged"
            it -= 1
            break
        jac = np.asarray(jacobian(x), dtype=float)
        lu = None
        direction = None
        try:
            lu = scipy.linalg.lu_factor(jac)
            direction = scipy.linalg.lu_solve(lu, -r)
            if not np.all(np.isfinite(direction)):
                direction = None
        except (scipy.linalg.LinAlgError, ValueError):
            direction = None
        if direction is None:
            lu = None
            sigma = opts.reg_floor
            grad = jac.T @ r
            while direction is None and sigma <= 1e10:
                direction = _solve_linear(jac.T @ jac + sigma * np.eye(x.size), -grad)
                sigma *= 10.0
            if direction is None:
                status = "line-search-failure"
                break

        merit = 0.5 * float(r @ r)
        grad = jac.T @ r
        slope = float(grad @ direction)
        dnorm = float(np.linalg.norm(direction))
        alpha = min(1.0, 2.0 * alpha_prev)
        accepted = False
        for _ in range(opts.max_backtracks):
            x_trial = x + alpha * direction
            r_trial = np.asarray(residual(x_trial), dtype=float)
            if np.all(np.isfinite(r_trial)):
                if slope < 0.0 and 0.5 * float(r_trial @ r_trial) <= merit + opts.armijo * alpha * slope:
                    accepted = True
                    break
                if lu is not None:
                    correction = scipy.linalg.lu_solve(lu, -r_trial)
                    if np.linalg.norm(correction) <= (1.0 - alpha / 2.0) * dnorm:
                        accepted = True
                        break
            alpha *= opts.backtrack
        if not accepted:
            status = "line-search-failure"
            break
        alpha_prev = alpha
        x = x_trial
        r = r_trial
        if alpha * dnorm < opts.step_tol:
            break
    rnorm = float(np.linalg.norm(r, ord=np.inf))
    if rnorm <= opts.residual_tol:
        status = "converged"
    report = SolveReport(
        status=status,
        iterations=it,
        residual_norm=rnorm,
        wall_time=time.perf_counter() - start,
    )
    return x, report


def _al_terms(nlp, x, y, z, rho):
    c = np.asarray(nlp.eq_residual(x), dtype=float)
    if nlp.n_ineq:
        g = np.asarray(nlp.inequalities(x), dtype=float)
        z_shift = np.maximum(0.0, z + rho * g)
    else:
        g = np.zeros(0)
        z_shift = np.zeros(0)
    return c, g, z_shift


def _minimize_regularized_newton(value, grad, hess, x, tol, max_iters, reg_floor):
    """Adaptive-regularization Newton: solve (H + sigma I) d = -g, step control
    by the ratio of actual to predicted reduction (no line search).

    Returns (x, iterations, final gradient inf-norm).  Robust on the
    ill-conditioned penalty landscapes where backtracking stalls.
    """
    sigma = reg_floor
    g = grad(x)
    gnorm = float(np.linalg.norm(g, ord=np.inf))
    val = value(x)
    hess_current = None
    it = 0
    while it < max_iters and gnorm > tol:
        if hess_current is None:
            hess_current = hess(x)
            hess_current = 0.5 * (hess_current + hess_current.T)
        try:
            chol = np.linalg.cholesky(hess_current + sigma * np.eye(x.size))
        except np.linalg.LinAlgError:
            sigma = max(sigma * 10.0, reg_floor)
            if sigma > 1e14:
                break
            continue
        direction = np.linalg.solve(
            chol.T, np.linalg.solve(chol, -g)
        )
        predicted = -float(g @ direction) - 0.5 * float(
            direction @ (hess_current @ direction)
        )
        predicted = max(predicted, 0.5 * sigma * float(direction @ direction))
        x_trial = x + direction
        val_trial = value(x_trial)
        actual = val - val_trial
        it += 1
        if np.isfinite(val_trial) and predicted > 0.0 and actual > 1e-4 * predicted:
            x = x_trial
            val = val_trial
            g = grad(x)
            gnorm = float(np.linalg.norm(g, ord=np.inf))
            hess_current = None
            ratio = actual / predicted
            if ratio > 0.75:
                sigma = max(sigma / 4.0, reg_floor)
        else:
            sigma *= 4.0
            if sigma > 1e14:
                break
    return x, it, gnorm


def augmented_lagrangian_solve(nlp, x0, options=None):
    """Augmented Lagrangian with regularized-Newton inner minimization.

    Equalities use the classic multiplier update y <- y + rho c; the
    inequalities g(x) <= 0 use the Rockafellar shifted penalty
    max(0, z + rho g).  The inner tolerance and the feasibility gate
    follow the usual two-sequence schedule: successful outer iterations
    tighten both, unsuccessful ones grow the penalty.  Inner Hessians
    combine the NLP's Lagrangian-Hessian callback with the Gauss-Newton
    penalty term (Gauss-Newton alone when the callback is missing).
    """
    opts = options or SolveOptions()
    start = time.perf_counter()
    x = np.array(x0, dtype=float)
    y = np.zeros(nlp.n_eq)
    z = np.zeros(nlp.n_ineq)
    rho = opts.penalty_initial
    status = "iteration-limit"
    total_inner = 0
    kkt = np.inf
    omega = 1e-2  # inner stationarity target, tightened per outer round
    eta = 1e-2  # feasibility gate for multiplier updates

    def al_value(xv):
        c = np.asarray(nlp.eq_residual(xv), dtype=float)
        val = float(nlp.objective(xv)) + y @ c + 0.5 * rho * float(c @ c)
        if nlp.n_ineq:
            g = np.asarray(nlp.inequalities(xv), dtype=float)
            shifted = np.maximum(0.0, z + rho * g)
            val += float(shifted @ shifted - z @ z) / (2.0 * rho)
        return val

    def al_grad(xv):
        c = np.asarray(nlp.eq_residual(xv), dtype=float)
        jac_eq = np.asarray(nlp.eq_jacobian(xv), dtype=float)
        grad = np.asarray(nlp.gradient(xv), dtype=float) + jac_eq.T @ (y + rho * c)
        if nlp.n_ineq:
            g = np.asarray(nlp.inequalities(xv), dtype=float)
            jac_in = np.asarray(nlp.ineq_jacobian(xv), dtype=float)
            grad = grad + jac_in.T @ np.maximum(0.0, z + rho * g)
        return grad

    def al_hess(xv):
        c = np.asarray(nlp.eq_residual(xv), dtype=float)
        jac_eq = np.asarray(nlp.eq_jacobian(xv), dtype=float)
        if nlp.n_ineq:
            g = np.asarray(nlp.inequalities(xv), dtype=float)
            jac_in = np.asarray(nlp.ineq_jacobian(xv), dtype=float)
            z_shift = np.maximum(0.0, z + rho * g)
            active = z_shift > 0.0
        else:
            jac_in = np.zeros((0, x.size))
            z_shift = np.zeros(0)
            active = np.zeros(0, dtype=bool)
        hess = rho * (jac_eq.T @ jac_eq)
        if np.any(active):
            ja = jac_in[active]
            hess = hess + rho * (ja.T @ ja)
        if getattr(nlp, "lagrangian_hessian", None) is not None:
            hess = hess + np.asarray(
                nlp.lagrangian_hessian(xv, y + rho * c, z_shift), dtype=float
            )
        return hess

    for _ in range(opts.max_outer):
        x, used, _ = _minimize_regularized_newton(
            al_value,
            al_grad,
            al_hess,
            x,
            max(omega, opts.residual_tol),
            opts.max_iterations,
            opts.reg_floor,
        )
        total_inner += used

        c, g, z_shift = _al_terms(nlp, x, y, z, rho)
        feas = max(
            float(np.linalg.norm(c, ord=np.inf)) if c.size else 0.0,
            float(np.max(np.maximum(g, 0.0))) if g.size else 0.0,
        )
        if feas <= max(eta, opts.residual_tol):
            y = y + rho * c
            z = z_shift
            eta = max(eta / rho**0.9, opts.residual_tol * 0.1)
            omega = max(omega / rho, opts.residual_tol * 0.1)
        else:
            rho *= opts.penalty_growth
            if rho > opts.penalty_max:
                break
            eta = max(rho**-0.1, opts.residual_tol * 0.1)
            omega = max(1.0 / rho, opts.residual_tol * 0.1)
            continue

        stat_grad = np.asarray(nlp.gradient(x), dtype=float)
        stat_grad = stat_grad + np.asarray(nlp.eq_jacobian(x), dtype=float).T @ y
        if nlp.n_ineq:
            g_now = np.asarray(nlp.inequalities(x), dtype=float)
            stat_grad = stat_grad + np.asarray(nlp.ineq_jacobian(x), dtype=float).T @ z
            comp = float(np.max(np.abs(z * g_now)))
        else:
            comp = 0.0
        stationarity = float(np.linalg.norm(stat_grad, ord=np.inf))
        kkt = max(stationarity, feas, comp)
        if kkt <= opts.residual_tol:
            status = "converged"
            break

    report = SolveReport(
        status=status,
        iterations=total_inner,
        residual_norm=float(kkt),
        wall_time=time.perf_counter() - start,
        objective=float(nlp.objective(x)),
    )
    return x, report


def finite_difference_check(fun, jac, point, rel_step=1e-6):
    """Max mixed relative error between an analytic Jacobian and central differences.

    Per-entry error |a - fd| / max(1, |a| + |fd|); works for scalar- or
    vector-valued ``fun``.
    """
    x = np.array(point, dtype=float)
    f0 = np.atleast_1d(np.asarray(fun(x), dtype=float))
    analytic = np.asarray(jac(x), dtype=float).reshape(f0.size, x.size)
    fd = np.zeros_like(analytic)
    for j in range(x.size):
        delta = rel_step * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += delta
        xm[j] -= delta
        fp = np.atleast_1d(np.asarray(fun(xp), dtype=float))
        fm = np.atleast_1d(np.asarray(fun(xm), dtype=float))
        fd[:, j] = (fp - fm) / (2.0 * delta)
    scale = np.maximum(1.0, np.abs(analytic) + np.abs(fd))
    return float(np.max(np.abs(analytic - fd) / scale))
