import numpy as np
import pytest

from citopt import dynamics, models
from citopt.models import Configuration, GeneralizedVelocity

BALL = models.ball_model()
BRICK = models.brick_model()
HOPPER = models.hopper_model()
ALL_MODELS = [BALL, BRICK, HOPPER]


def random_q(model, rng, height=0.5):
    q = rng.normal(scale=0.4, size=model.n_q)
    if isinstance(model, models.FloatingBody):
        q[5] = height + rng.uniform(0.0, 0.5)
    else:
        q[1] = height + rng.uniform(0.0, 0.3)
    return q


# --- mass matrix --------------------------------------------------------------


def test_ball_mass_matrix_block_diagonal_and_constant():
    rng = np.random.default_rng(0)
    expected = np.diag(list(BALL.inertia) + [BALL.mass] * 3)
    for _ in range(5):
        q = random_q(BALL, rng)
        np.testing.assert_allclose(dynamics.mass_matrix(BALL, q), expected, atol=1e-14)


def test_brick_mass_matrix_structure():
    q = np.concatenate([np.array([0.1, -0.2, 0.3]), np.array([0.0, 0.0, 1.0])])
    expected = np.diag(list(BRICK.inertia) + [BRICK.mass] * 3)
    np.testing.assert_allclose(dynamics.mass_matrix(BRICK, q), expected, atol=1e-14)


def _link_jacobian_mass_oracle(model, q, delta=1e-6):
    """Brute-force M = sum_i J_i^T m_i J_i + Jw_i^T I_i Jw_i for the hopper.

    Link CoM Jacobians come from central differences of an independently
    written forward kinematics, so this never touches the library path.
    """
    m1, m2 = model.link_masses
    l1, l2 = model.link_lengths
    i1, i2 = m1 * l1**2 / 12.0, m2 * l2**2 / 12.0

    def fk(qq):
        x, z, th, q1, q2 = qq
        a1, a2 = th + q1, th + q1 + q2
        hip = np.array([x, z])
        c1 = hip + 0.5 * l1 * np.array([np.sin(a1), -np.cos(a1)])
        knee = hip + l1 * np.array([np.sin(a1), -np.cos(a1)])
        c2 = knee + 0.5 * l2 * np.array([np.sin(a2), -np.cos(a2)])
        return np.concatenate([hip, c1, c2])

    jac = np.zeros((6, 5))
    for j in range(5):
        qp, qm = q.copy(), q.copy()
        qp[j] += delta
        qm[j] -= delta
        jac[:, j] = (fk(qp) - fk(qm)) / (2 * delta)
    j_t, j_1, j_2 = jac[0:2], jac[2:4], jac[4:6]
    w_t = np.array([[0.0, 0.0, 1.0, 0.0, 0.0]])
    w_1 = np.array([[0.0, 0.0, 1.0, 1.0, 0.0]])
    w_2 = np.array([[0.0, 0.0, 1.0, 1.0, 1.0]])
    mass = (
        model.torso_mass * j_t.T @ j_t
        + m1 * j_1.T @ j_1
        + m2 * j_2.T @ j_2
        + model.torso_inertia * w_t.T @ w_t
        + i1 * w_1.T @ w_1
        + i2 * w_2.T @ w_2
    )
    return mass


def test_hopper_mass_matrix_against_jacobian_oracle():
    rng = np.random.default_rng(3)
    for _ in range(10):
        q = random_q(HOPPER, rng)
        oracle = _link_jacobian_mass_oracle(HOPPER, q)
        np.testing.assert_allclose(dynamics.mass_matrix(HOPPER, q), oracle, atol=1e-8)


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.name)
def test_mass_matrix_symmetric_positive_definite(model):
    rng = np.random.default_rng(11)
    for _ in range(100):
        q = random_q(model, rng)
        mass = np.asarray(dynamics.mass_matrix(model, q))
        assert np.abs(mass - mass.T).max() < 1e-12
        assert np.linalg.eigvalsh(mass).min() > 0.0


# --- bias forces ---------------------------------------------------------------


def test_ball_bias_at_rest_is_gravity_only():
    q = np.concatenate([np.zeros(3), [0.0, 0.0, 0.3]])
    h = np.asarray(dynamics.bias_forces(BALL, q, np.zeros(6)))
    expected = np.array([0.0, 0.0, 0.0, 0.0, 0.0, BALL.mass * BALL.gravity])
    np.testing.assert_allclose(h, expected, atol=1e-14)


def test_spinning_ball_has_no_gyroscopic_bias():
    # spherical inertia: omega x I omega = 0 about any axis
    q = np.concatenate([np.zeros(3), [0.0, 0.0, 0.3]])
    v = np.concatenate([[3.0, -2.0, 1.0], np.zeros(3)])
    h = np.asarray(dynamics.bias_forces(BALL, q, v))
    np.testing.assert_allclose(h[0:3], np.zeros(3), atol=1e-14)


def test_brick_gyroscopic_term():
    q = np.concatenate([np.zeros(3), [0.0, 0.0, 1.0]])
    omega = np.array([1.0, 2.0, -0.5])
    v = np.concatenate([omega, np.zeros(3)])
    h = np.asarray(dynamics.bias_forces(BRICK, q, v))
    expected = np.cross(omega, np.array(BRICK.inertia) * omega)
    np.testing.assert_allclose(h[0:3], expected, atol=1e-13)


def _energy_bias_oracle(model, q, qdot, d_in=1e-5, d_out=1e-4):
    """Euler-Lagrange bias via central differences of the energy functions.

    H = d/dt (dT/dqdot) - dT/dq + dV/dq, all derivatives numerical.  The
    inner momentum derivative differences a quadratic (exact), so a small
    step there and a wider outer step keep nested roundoff in check.
    """

    def kin(qq, qd):
        return float(dynamics.kinetic_energy_rate(model, qq, qd))

    def pot(qq):
        return float(dynamics.potential_energy(model, qq))

    n = model.n_q

    def dt_dqdot(qq):
        return np.array(
            [
                (kin(qq, qdot + d_in * e) - kin(qq, qdot - d_in * e)) / (2 * d_in)
                for e in np.eye(n)
            ]
        )

    conv = np.zeros(n)
    for j in range(n):
        e = np.zeros(n)
        e[j] = d_out
        conv += (dt_dqdot(q + e) - dt_dqdot(q - e)) / (2 * d_out) * qdot[j]
    dt_dq = np.array(
        [
            (kin(q + d_out * e, qdot) - kin(q - d_out * e, qdot)) / (2 * d_out)
            for e in np.eye(n)
        ]
    )
    dv_dq = np.array(
        [(pot(q + d_out * e) - pot(q - d_out * e)) / (2 * d_out) for e in np.eye(n)]
    )
    return conv - dt_dq + dv_dq


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.name)
def test_bias_rate_matches_energy_oracle(model):
    rng = np.random.default_rng(17)
    for _ in range(5):
        q = random_q(model, rng)
        qdot = rng.normal(size=model.n_q)
        got = np.asarray(dynamics.bias_forces_rate(model, q, qdot))
        oracle = _energy_bias_oracle(model, q, qdot)
        np.testing.assert_allclose(got, oracle, rtol=1e-5, atol=1e-6)


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.name)
def test_gravity_consistency(model):
    rng = np.random.default_rng(23)
    for _ in range(10):
        q = random_q(model, rng)
        h = np.asarray(dynamics.bias_forces(model, q, np.zeros(model.n_q)))
        linear = h[3:6] if isinstance(model, models.FloatingBody) else h[0:2]
        assert np.linalg.norm(linear) == pytest.approx(
            model.total_mass * model.gravity, rel=1e-12
        )


# --- contact kinematics ---------------------------------------------------------


def test_ball_gap_geometry():
    q = np.concatenate([np.zeros(3), [0.0, 0.0, 0.3]])
    kin = dynamics.contact_kinematics(BALL, q)
    assert np.asarray(kin.gap)[0] == pytest.approx(0.2)


def test_brick_flat_resting_gaps():
    q = np.concatenate([np.zeros(3), [0.0, 0.0, 0.1]])
    gaps = np.sort(np.asarray(dynamics.contact_kinematics(BRICK, q).gap))
    np.testing.assert_allclose(gaps[:4], 0.0, atol=1e-15)
    np.testing.assert_allclose(gaps[4:], 0.2, atol=1e-15)


def test_brick_gaps_match_forward_kinematics_oracle():
    from citopt.rotations import mrp_to_rotation

    rng = np.random.default_rng(31)
    for _ in range(10):
        q = random_q(BRICK, rng)
        rot = np.asarray(mrp_to_rotation(q[0:3]))
        kin = dynamics.contact_kinematics(BRICK, q)
        for i, offset in enumerate(BRICK.contact_offsets):
            world = rot @ np.array(offset) + q[3:6]
            assert np.asarray(kin.gap)[i] == pytest.approx(world[2], abs=1e-12)


def test_contact_frames_are_world_axes():
    q = np.concatenate([np.zeros(3), [0.0, 0.0, 0.3]])
    kin = dynamics.contact_kinematics(BALL, q)
    np.testing.assert_allclose(np.asarray(kin.frame)[0], np.eye(3), atol=1e-15)


def _frozen_point_jacobian_fd(model, q, delta=1e-7):
    """Central differences of contact-point world positions.

    The material point under each contact is frozen (its body-fixed
    coordinates held at the evaluation configuration) before
    differentiating, which is what the contact Jacobian means for the
    rolling sphere.
    """
    from citopt.rotations import mrp_to_rotation

    if isinstance(model, models.FloatingBody):
        rot0 = np.asarray(mrp_to_rotation(q[0:3]))
        offs = np.asarray(dynamics.contact_world_offsets(model, q))
        body_pts = [rot0.T @ off for off in offs]

        def positions(qq):
            rot = np.asarray(mrp_to_rotation(qq[0:3]))
            return np.concatenate([rot @ bp + qq[3:6] for bp in body_pts])

    else:

        def positions(qq):
            foot = np.asarray(dynamics.hopper_foot_position(model, qq))
            return np.array([foot[0], 0.0, foot[1]])

    n = model.n_q
    out = np.zeros((3 * model.n_c, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = delta
        out[:, j] = (positions(q + e) - positions(q - e)) / (2 * delta)
    return out


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.name)
def test_contact_jacobian_matches_finite_differences(model):
    # rate-basis Jacobian against frozen-material-point central differences
    rng = np.random.default_rng(37)
    for _ in range(100):
        q = random_q(model, rng)
        jac = np.asarray(dynamics.contact_jacobian_rate(model, q))
        fd = _frozen_point_jacobian_fd(model, q)
        scale = max(1.0, np.abs(fd).max())
        assert np.abs(jac - fd).max() / scale < 1e-6


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.name)
def test_gap_rate_equals_normal_jacobian_row(model):
    # d(gap)/dt along a trajectory equals the normal row applied to qdot
    rng = np.random.default_rng(41)
    for _ in range(10):
        q = random_q(model, rng)
        qdot = rng.normal(size=model.n_q)
        jac = np.asarray(dynamics.contact_jacobian_rate(model, q))
        normal_rate = (jac @ qdot)[2::3]
        delta = 1e-7
        g_p = np.asarray(dynamics.contact_gaps(model, q + delta * qdot))
        g_m = np.asarray(dynamics.contact_gaps(model, q - delta * qdot))
        np.testing.assert_allclose(normal_rate, (g_p - g_m) / (2 * delta), atol=1e-6)


# --- velocity bases -------------------------------------------------------------


def test_rate_velocity_roundtrip():
    rng = np.random.default_rng(43)
    for model in ALL_MODELS:
        q = random_q(model, rng)
        v = rng.normal(size=model.n_q)
        qdot = np.asarray(dynamics.rate_from_velocity(model, q, v))
        back = np.asarray(dynamics.velocity_from_rate(model, q, qdot))
        np.testing.assert_allclose(back, v, atol=1e-12)


def test_kinetic_energy_agrees_between_bases():
    rng = np.random.default_rng(47)
    q = random_q(BRICK, rng)
    qdot = rng.normal(size=6)
    u = np.asarray(dynamics.velocity_from_rate(BRICK, q, qdot))
    t_phys = 0.5 * u @ (np.asarray(dynamics.mass_matrix(BRICK, q)) @ u)
    t_rate = float(dynamics.kinetic_energy_rate(BRICK, q, qdot))
    assert t_phys == pytest.approx(t_rate, rel=1e-12)


def test_configuration_dataclass_roundtrip():
    cfg = Configuration(
        base_position=np.array([1.0, 2.0, 3.0]), base_orientation=np.array([0.1, 0.0, -0.2])
    )
    q = models.pack_configuration(BALL, cfg)
    np.testing.assert_allclose(q, [0.1, 0.0, -0.2, 1.0, 2.0, 3.0])
    back = models.unpack_configuration(BALL, q)
    np.testing.assert_allclose(back.base_position, cfg.base_position)
    np.testing.assert_allclose(back.base_orientation, cfg.base_orientation)
    vel = GeneralizedVelocity(angular=np.array([1.0, 0, 0]), linear=np.array([0, 2.0, 0]))
    v = models.pack_velocity(BALL, vel)
    np.testing.assert_allclose(v, [1.0, 0, 0, 0, 2.0, 0])


def test_dimension_validation():
    with pytest.raises(ValueError):
        models.pack_configuration(BALL, np.zeros(5))
    with pytest.raises(ValueError):
        models.pack_velocity(BALL, np.zeros(7))
