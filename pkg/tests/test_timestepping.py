import numpy as np
import pytest

from citopt import dynamics, models, timestepping as ts
from citopt.contact import ContactParams

BALL = models.ball_model()
BRICK = models.brick_model()
BALL_PARAMS = ContactParams(r_n=100.0, r_t=1.0, mu=0.5, eps=1e-3)


def resting_ball_state():
    return ts.SimState(q=np.concatenate([np.zeros(3), [0, 0, BALL.radius]]), v=np.zeros(6))


# --- contact-space projection ---------------------------------------------------


def test_ball_delassus_hand_computed():
    # solid sphere: tangential diagonal 1/m + r^2/I = 7/(2m), normal 1/m
    sys = ts.project_contact_space(BALL, resting_ball_state().q, np.zeros(6), None, 0.1)
    m = BALL.mass
    np.testing.assert_allclose(np.diag(sys.a), [3.5 / m, 3.5 / m, 1.0 / m], rtol=1e-12)
    off = sys.a - np.diag(np.diag(sys.a))
    np.testing.assert_allclose(off, np.zeros((3, 3)), atol=1e-12)


def test_gravity_only_bias_term():
    sys = ts.project_contact_space(BALL, resting_ball_state().q, np.zeros(6), None, 0.1)
    np.testing.assert_allclose(sys.b, [0.0, 0.0, -BALL.gravity * 0.1], atol=1e-12)


def test_brick_delassus_psd_and_rank():
    rng = np.random.default_rng(3)
    q = np.concatenate([rng.normal(size=3) * 0.3, [0.0, 0.0, 0.5]])
    v = rng.normal(size=6)
    sys = ts.project_contact_space(BRICK, q, v, None, 0.05)
    assert sys.a.shape == (24, 24)
    eig = np.linalg.eigvalsh(0.5 * (sys.a + sys.a.T))
    assert eig.min() > -1e-10
    assert np.sum(eig > 1e-10) <= 6


def test_delassus_is_velocity_basis_invariant():
    # J M^-1 J^T must agree between the physical and rate bases
    rng = np.random.default_rng(5)
    q = np.concatenate([rng.normal(size=3) * 0.4, [0.1, 0.2, 0.4]])
    m_rate = np.asarray(dynamics.mass_matrix_rate(BRICK, q))
    j_rate = np.asarray(dynamics.contact_jacobian_rate(BRICK, q))
    a_rate = j_rate @ np.linalg.solve(m_rate, j_rate.T)
    sys = ts.project_contact_space(BRICK, q, np.zeros(6), None, 0.05)
    np.testing.assert_allclose(sys.a, a_rate, atol=1e-10)


# --- PGS solver ------------------------------------------------------------------


def test_pgs_zero_system_gives_zero_impulse():
    sys = ts.ContactSpaceSystem(a=np.eye(3), b=np.zeros(3), v_minus=np.zeros(3))
    res = ts.pgs_solve(sys, 0.5)
    assert res.converged
    np.testing.assert_allclose(res.impulses.values, 0.0)


def test_pgs_resting_ball_supports_weight():
    state = resting_ball_state()
    sys = ts.project_contact_space(BALL, state.q, state.v, None, 0.1)
    res = ts.pgs_solve(sys, 0.5)
    assert res.converged
    assert res.impulses.normal[0] == pytest.approx(BALL.mass * BALL.gravity * 0.1, rel=1e-10)
    np.testing.assert_allclose(res.impulses.tangential, 0.0, atol=1e-12)


def test_pgs_frictionless_sliding():
    state = ts.SimState(
        q=resting_ball_state().q, v=np.concatenate([np.zeros(3), [1.0, 0.0, 0.0]])
    )
    sys = ts.project_contact_space(BALL, state.q, state.v, None, 0.1)
    res = ts.pgs_solve(sys, 0.0)
    np.testing.assert_allclose(res.impulses.tangential, 0.0, atol=1e-14)
    assert res.impulses.normal[0] == pytest.approx(BALL.mass * BALL.gravity * 0.1, rel=1e-10)


def test_pgs_cone_feasibility_exact():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = rng.integers(1, 5)
        mat = rng.normal(size=(3 * n, 6))
        sys = ts.ContactSpaceSystem(
            a=mat @ mat.T + 1e-8 * np.eye(3 * n),
            b=rng.normal(size=3 * n),
            v_minus=rng.normal(size=3 * n),
        )
        mu = rng.uniform(0.0, 1.0, size=n)
        res = ts.pgs_solve(sys, mu, iterations=300)
        lam = res.impulses.values
        assert np.all(lam[:, 2] >= 0.0)
        norms = np.linalg.norm(lam[:, 0:2], axis=1)
        assert np.all(norms <= mu * lam[:, 2] + 1e-12)


def test_pgs_nonconvergence_is_flagged():
    mat = np.random.default_rng(0).normal(size=(6, 6))
    sys = ts.ContactSpaceSystem(
        a=mat @ mat.T + 1e-6 * np.eye(6), b=np.ones(6), v_minus=np.zeros(6)
    )
    res = ts.pgs_solve(sys, 0.5, iterations=1, tol=1e-16)
    assert not res.converged
    assert res.iterations == 1
    assert np.isfinite(res.residual)


# --- convex forward model ---------------------------------------------------------


def test_convex_large_regularization_kills_impulses():
    state = resting_ball_state()
    sys = ts.project_contact_space(BALL, state.q, state.v, None, 0.1)
    res = ts.convex_forward_solve(sys, np.full(3, 1e9), 0.5)
    assert np.linalg.norm(res.impulses.values) < 1e-8


def test_convex_small_regularization_matches_pgs_normal():
    state = resting_ball_state()
    sys = ts.project_contact_space(BALL, state.q, state.v, None, 0.1)
    ncp = ts.pgs_solve(sys, 0.5)
    cvx = ts.convex_forward_solve(sys, np.full(3, 1e-9), 0.5)
    assert cvx.impulses.normal[0] == pytest.approx(ncp.impulses.normal[0], abs=1e-6)


def test_convex_solution_optimality_spot_check():
    rng = np.random.default_rng(11)
    mat = rng.normal(size=(6, 6))
    sys = ts.ContactSpaceSystem(
        a=mat @ mat.T, b=rng.normal(size=6), v_minus=rng.normal(size=6)
    )
    r_diag = np.full(6, 0.3)
    mu = np.array([0.4, 0.7])
    res = ts.convex_forward_solve(sys, r_diag, mu, iterations=3000, tol=1e-14)
    lam = res.impulses.flat
    a_reg = sys.a + np.diag(r_diag)
    rhs = sys.b + sys.v_minus

    def objective(l):
        return 0.5 * l @ a_reg @ l + l @ rhs

    best = objective(lam)
    for _ in range(1000):
        cand = rng.normal(size=6)
        for i in range(2):
            cand[3 * i + 2] = abs(cand[3 * i + 2])
            t = cand[3 * i : 3 * i + 2]
            cap = mu[i] * cand[3 * i + 2]
            if np.linalg.norm(t) > cap:
                t *= cap / np.linalg.norm(t)
        assert objective(cand) >= best - 1e-9


def test_convex_rejects_bad_regularization():
    sys = ts.ContactSpaceSystem(a=np.eye(3), b=np.zeros(3), v_minus=np.zeros(3))
    with pytest.raises(ValueError):
        ts.convex_forward_solve(sys, np.zeros(3), 0.5)


# --- stepping ---------------------------------------------------------------------


def test_free_fall_step():
    state = ts.SimState(q=np.concatenate([np.zeros(3), [0, 0, 0.5]]), v=np.zeros(6))
    nxt, info = ts.step(BALL, state, None, 0.1, BALL_PARAMS, solver="ncp")
    assert nxt.v[5] == pytest.approx(-BALL.gravity * 0.1)
    assert nxt.q[5] == pytest.approx(0.5 - BALL.gravity * 0.01)
    assert nxt.q[3] == pytest.approx(0.0)
    np.testing.assert_allclose(info.impulses.values, 0.0)


def test_momentum_consistency_each_step():
    # M (qdot+ - qdot-) - h (S tau - H) - J^T lambda = 0 in the solve basis
    rng = np.random.default_rng(13)
    state = ts.SimState(
        q=np.concatenate([rng.normal(size=3) * 0.2, [0.0, 0.0, 0.12]]),
        v=rng.normal(size=6) * 0.5,
    )
    h = 0.05
    for _ in range(20):
        q, v = state.q.copy(), state.v.copy()
        state, info = ts.step(BALL, state, None, h, BALL_PARAMS, solver="ncp")
        qd_minus = np.asarray(dynamics.rate_from_velocity(BALL, q, v))
        qd_plus = (state.q - q) / h
        mass = np.asarray(dynamics.mass_matrix_rate(BALL, q))
        bias = np.asarray(dynamics.bias_forces_rate(BALL, q, qd_minus))
        jac = np.asarray(dynamics.contact_jacobian_rate(BALL, q))
        residual = mass @ (qd_plus - qd_minus) + h * bias - jac.T @ info.impulses.flat
        assert np.abs(residual).max() < 1e-10


def test_resting_equilibrium_no_drift():
    state = resting_ball_state()
    for _ in range(100):
        state, info = ts.step(BALL, state, None, 0.1, BALL_PARAMS, solver="ncp")
    assert abs(state.q[5] - BALL.radius) < 1e-6
    assert info.impulses.normal[0] == pytest.approx(BALL.mass * BALL.gravity * 0.1, rel=1e-8)


def test_complementarity_residual_at_convergence():
    state = resting_ball_state()
    sys = ts.project_contact_space(BALL, state.q, state.v, None, 0.1)
    res = ts.pgs_solve(sys, 0.5)
    w = sys.a @ res.impulses.flat + sys.b + sys.v_minus
    comp = sum(res.impulses.normal[i] * max(w[3 * i + 2], 0.0) for i in range(1))
    assert comp < 1e-10


def test_analytic_step_matches_discrete_residual():
    # the implicit analytic step satisfies the same equation the
    # transcription enforces, to the per-step Newton tolerance
    from citopt.contact import params_arrays

    state = ts.SimState(
        q=np.concatenate([np.zeros(3), [0.0, 0.0, 0.15]]),
        v=np.concatenate([np.zeros(3), [0.5, 0.0, -0.5]]),
    )
    h = 0.05
    nxt, info = ts.step(BALL, state, None, h, BALL_PARAMS, solver="analytic")
    assert info.converged
    qdot = np.asarray(dynamics.rate_from_velocity(BALL, state.q, state.v))
    cp = params_arrays([BALL_PARAMS], 1)
    res = np.asarray(
        dynamics.discrete_step_residual(
            BALL, cp, h, state.q - h * qdot, state.q, nxt.q
        )
    )
    assert np.abs(res).max() < 1e-10


def test_table1_ball_frictionless_slides_with_constant_spin():
    from citopt.rotations import mrp_to_rotation

    sigma0 = np.array([-0.1617, 0.566, -0.0809])
    w_body = np.array([-0.372, 1.208, -0.834])
    v_world = np.asarray(mrp_to_rotation(sigma0)) @ np.array([-1.379, -1.386, -0.743])
    state = ts.SimState(
        q=np.concatenate([sigma0, [0.1, -0.75, 0.3]]),
        v=np.concatenate([w_body, v_world]),
    )
    frictionless = ContactParams(r_n=100.0, r_t=0.0, mu=0.0, eps=1e-3)
    out = ts.simulate(BALL, state, 0.1, 10, frictionless, solver="ncp")
    assert out["converged"]
    spin0 = np.linalg.norm(out["v"][0][0:3])
    spin_end = np.linalg.norm(out["v"][-1][0:3])
    assert spin_end == pytest.approx(spin0, rel=1e-9)
    # it keeps sliding horizontally after landing
    assert abs(out["q"][-1][3] - out["q"][0][3]) > 0.1


def test_table1_brick_settles_on_large_side():
    state = ts.SimState(
        q=np.concatenate([np.zeros(3), [0.1, -0.75, 1.7]]),
        v=np.concatenate([[-1.0, -0.2, 0.126], np.zeros(3)]),
    )
    params = ContactParams(r_n=1000.0, r_t=10.0, mu=0.6, eps=1e-3)
    out = ts.simulate(BRICK, state, 0.05, 70, params, solver="ncp")
    from citopt.rotations import mrp_to_rotation

    rot = np.asarray(mrp_to_rotation(out["q"][-1][0:3]))
    # body z axis ends parallel to the world vertical: flat on the 0.5 x 0.3 face
    assert abs(abs(rot[2, 2]) - 1.0) < 1e-2
    assert out["q"][-1][5] == pytest.approx(0.1, abs=5e-3)
    normals = np.sort(out["impulses"][-1][:, 2])
    assert np.all(normals[4:] > 0.01)
    assert np.all(normals[:4] < 1e-6)


def test_simulate_impulse_rows_at_arrival_knots():
    state = ts.SimState(q=np.concatenate([np.zeros(3), [0, 0, 0.5]]), v=np.zeros(6))
    out = ts.simulate(BALL, state, 0.1, 3, BALL_PARAMS, solver="ncp")
    assert out["t"].shape == (4,)
    np.testing.assert_allclose(out["impulses"][0], 0.0)


def test_unknown_solver_rejected():
    with pytest.raises(ValueError):
        ts.step(BALL, resting_ball_state(), None, 0.1, BALL_PARAMS, solver="euler")
