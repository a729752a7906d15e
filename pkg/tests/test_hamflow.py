import numpy as np
import pytest

from twist_orbits.errors import (
    BoundViolation,
    OpticalityFailure,
    PeriodicityViolation,
    PositivityFailure
)
from twist_orbits.framework import (
    HamiltonianModel,
    OpticalBounds,
    OrbitClass,
    PhasePoint,
    TwistMap,
    catalog_model,
    choose_N,
    decompose,
    estimate_optical_bounds,
    expression_model,
    fd_derivative_check,
    fd_jacobian,
    flow,
    flow_fixed_point,
    flow_twist_map,
    gronwall_check,
    orbit_action,
    relative_error,
    short_time_genfun,
    tangent_flow,
    twist_block,
    verify_md_point
)
from twist_orbits.framework.hamflow import shear_model

FOUR_PI_SQ = 4 * np.pi ** 2


@pytest.fixture
def unit_bounds():
    return OpticalBounds(K=1.0, C=1.0, p_max=2.0, samples=1)


def test_free_motion(free):
    z = flow(free, PhasePoint([0.0], [1.0]), 0.0, 1.0, 8)
    assert z.q.tolist() == pytest.approx([1.0]) and z.p.tolist() == pytest.approx([1.0])


@pytest.mark.parametrize('k, q', [(1.0, 0.0), (1.0, 0.5), (-1.0, 0.5)])
def test_pendulum_equilibria_stay_put(k, q):
    Hm = catalog_model('pendulum', {'k': k})
    z = PhasePoint([q], [0.0])
    assert flow(Hm, z, 0.0, 1.0, 64).distance(z) < 1e-14


def test_rk4_convergence_order(pendulum):
    z = PhasePoint([0.1], [0.5])
    x16, x32, x64 = (flow(pendulum, z, 0.0, 1.0, steps).as_array() for steps in (16, 32, 64))
    order = np.log2(np.linalg.norm(x16 - x32) / np.linalg.norm(x32 - x64))
    assert 3.5 < order < 4.5


def test_free_tangent_flow(free):
    result = tangent_flow(free, PhasePoint([0.3], [0.7]), 0.0, 0.25, 16)
    assert result.final_U == pytest.approx(np.array([[1.0, 0.25], [0.0, 1.0]]))
    assert result.U[0] == pytest.approx(np.eye(2))
    assert result.action == pytest.approx(0.25 * 0.7 ** 2 / 2)


def test_pendulum_tangent_flow(pendulum, rng):
    for _ in range(20):
        z = PhasePoint(rng.random(1), rng.uniform(-1, 1, 1))
        result = tangent_flow(pendulum, z, 0.0, 1.0, 256)
        assert result.symplectic_residual < 1e-8
        fd = fd_jacobian(lambda x: flow(pendulum, PhasePoint.from_array(x), 0.0, 1.0, 256).as_array(),
                         z.as_array(), 1e-6)
        assert relative_error(result.final_U, fd) < 1e-5


def test_orbit_action_at_equilibria(pendulum, free):
    assert orbit_action(pendulum, PhasePoint([0.0], [0.0])) == pytest.approx(1 / FOUR_PI_SQ)
    assert orbit_action(pendulum, PhasePoint([0.5], [0.0])) == pytest.approx(-1 / FOUR_PI_SQ)
    assert orbit_action(free, PhasePoint([0.0], [1.0]), d=2) == pytest.approx(1.0)


def test_optical_bounds(pendulum, free):
    bounds = estimate_optical_bounds(pendulum)
    assert bounds.K == pytest.approx(1.0)
    assert bounds.C == pytest.approx(1.0)
    assert bounds.p_max == 2.0
    assert estimate_optical_bounds(free, [OrbitClass((1,), 2)]).p_max == pytest.approx(4.0)
    with pytest.raises(OpticalityFailure) as info:
        estimate_optical_bounds(shear_model())
    assert 'q' in info.value.witness and 'p' in info.value.witness


def test_gronwall_linear_hamiltonian():
    linear = HamiltonianModel(
        n=1,
        label='linear',
        H=lambda q, p, t: float(p[0]),
        gradH=lambda q, p, t: np.array([0.0, 1.0]),
        hessH=lambda q, p, t: np.zeros((2, 2))
    )
    report = gronwall_check(linear, PhasePoint([0.2], [0.0]), 0.0, 1.0, 1.0)
    assert report.max_ratio == 0.0


def test_gronwall_free(free):
    report = gronwall_check(free, PhasePoint([0.0], [0.3]), 0.0, 1.0, 1.0)
    # |U - I| = t against t exp(t)
    assert np.exp(-1.0) - 1e-9 <= report.max_ratio <= 1.0
    with pytest.raises(BoundViolation):
        gronwall_check(free, PhasePoint([0.0], [0.3]), 0.0, 1.0, 0.01)


def test_gronwall_pendulum(pendulum, rng):
    K = estimate_optical_bounds(pendulum).K
    for _ in range(5):
        z = PhasePoint(rng.random(1), rng.uniform(-1, 1, 1))
        assert gronwall_check(pendulum, z, 0.0, 1.0, K).max_ratio <= 1.0


def test_twist_block_free(free, unit_bounds):
    report = twist_block(free, PhasePoint([0.1], [0.4]), 0.25, unit_bounds)
    assert report.b == pytest.approx(np.array([[0.25]]))
    assert report.admissible and report.within_window
    assert report.inverse_norm == pytest.approx(4.0)


def test_twist_block_pendulum(pendulum, rng):
    bounds = estimate_optical_bounds(pendulum)
    for _ in range(10):
        z = PhasePoint(rng.random(1), rng.uniform(-1, 1, 1))
        report = twist_block(pendulum, z, 0.1, bounds)
        assert report.bound_lo == pytest.approx(0.09)
        assert report.within_window


def test_twist_block_errors(unit_bounds):
    with pytest.raises(PositivityFailure):
        twist_block(shear_model(), PhasePoint([0.3], [1.0]), 0.1, unit_bounds)
    with pytest.raises(ValueError):
        twist_block(shear_model(), PhasePoint([0.3], [1.0]), 0.0, unit_bounds)


@pytest.mark.parametrize('C, K, safety, N', [(0.9, 2.0, 4.0, 9), (1.0, 1.0, 4.0, 4), (1.0, 1.0, 1.0, 2)])
def test_choose_N(C, K, safety, N):
    assert choose_N(OpticalBounds(K=K, C=C, p_max=2.0, samples=1), safety) == N


def test_choose_N_rejects_small_safety(unit_bounds):
    with pytest.raises(ValueError):
        choose_N(unit_bounds, 0.5)


def test_free_short_time_genfun(free):
    eps = 0.25
    S = short_time_genfun(free, 0.0, eps)
    for q in np.linspace(0, 1, 10, endpoint=False):
        for Q in q + np.linspace(-1, 1, 10):
            q_, Q_ = np.array([q]), np.array([Q])
            assert abs(S.eval(q_, Q_) - (Q - q) ** 2 / (2 * eps)) < 1e-8
            assert S.d1(q_, Q_) == pytest.approx(-(Q_ - q_) / eps)
            assert S.d2(q_, Q_) == pytest.approx((Q_ - q_) / eps)
            assert S.d12(q_, Q_) == pytest.approx(np.array([[-1 / eps]]))


def test_short_time_genfun_rejects_large_step(pendulum, unit_bounds):
    with pytest.raises(PositivityFailure):
        short_time_genfun(pendulum, 0.0, 2.0, unit_bounds)
    with pytest.raises(ValueError):
        short_time_genfun(pendulum, 0.0, -0.1)


def test_generating_relations_match_direct_flow(pendulum, rng):
    T = TwistMap(S=short_time_genfun(pendulum, 0.0, 0.1))
    for _ in range(20):
        z = PhasePoint(rng.random(1), rng.uniform(-1, 1, 1))
        assert T.forward(z).distance(flow(pendulum, z, 0.0, 0.1, 64)) < 1e-8


@pytest.mark.parametrize('mode', ['tangent', 'fd'])
def test_numeric_genfun_derivatives(pendulum, mode):
    S = short_time_genfun(pendulum, 0.0, 0.1, hessian_mode=mode)
    report = fd_derivative_check(S, samples=10, tol=1e-4)
    assert report.passed, report.max_errors


def test_flow_twist_map(pendulum, rng):
    T = flow_twist_map(pendulum, 0.5, 0.25)
    z = PhasePoint(rng.random(1), rng.uniform(-1, 1, 1))
    assert T.inverse(T.forward(z)).distance(z) < 1e-9
    assert T.tangent(z) == pytest.approx(tangent_flow(pendulum, z, 0.5, 0.75, 64).final_U)


def test_decompose_free(free):
    plan = decompose(free, estimate_optical_bounds(free))
    assert plan.N == 4 and plan.epsilon == 0.25
    assert plan.composition_residual < 1e-8
    for tc in plan.constants:
        assert tc.a == pytest.approx(4.0)
        assert tc.kprime == pytest.approx(0.25)
    z = PhasePoint([0.2], [0.7])
    assert plan.chain.forward(z).as_array() == pytest.approx([0.9, 0.7])


@pytest.mark.slow
def test_decompose_pendulum(pendulum):
    bounds = estimate_optical_bounds(pendulum)
    plan = decompose(pendulum, bounds)
    assert plan.N == 4
    assert plan.composition_residual < 1e-8
    eps = plan.epsilon
    for tc in plan.constants:
        assert 1 / (eps / bounds.C + bounds.K * eps ** 2) <= tc.a <= 1 / (eps * bounds.C - bounds.K * eps ** 2)
    assert np.isfinite(plan.inverse_twist_bound)


def test_verify_md_point(free, pendulum):
    assert verify_md_point(free, PhasePoint([0.0], [1.0]), OrbitClass((1,), 1)) < 1e-12
    assert verify_md_point(pendulum, PhasePoint([0.0], [0.0]), OrbitClass((0,), 1)) < 1e-14
    assert verify_md_point(pendulum, PhasePoint([0.3], [0.0]), OrbitClass((0,), 1)) > 1e-3


def test_flow_fixed_point(pendulum):
    z = flow_fixed_point(pendulum, PhasePoint([0.02], [0.01]), OrbitClass((0,), 1))
    assert z.distance(PhasePoint([0.0], [0.0])) < 1e-9
    assert verify_md_point(pendulum, z, OrbitClass((0,), 1)) < 1e-10


def test_expression_model_matches_catalog(pendulum, rng):
    Hm = expression_model('p1^2/2 - cos(2*pi*q1)/(4*pi^2)')
    assert Hm.n == 1
    for _ in range(10):
        q, p, t = rng.random(1), rng.uniform(-2, 2, 1), float(rng.random())
        assert Hm.H(q, p, t) == pytest.approx(pendulum.H(q, p, t))
        assert Hm.gradH(q, p, t) == pytest.approx(pendulum.gradH(q, p, t))
        assert Hm.hessH(q, p, t) == pytest.approx(pendulum.hessH(q, p, t))


def test_expression_model_rejects_non_periodic():
    with pytest.raises(PeriodicityViolation):
        expression_model('p1^2/2 + q1')
    assert expression_model('p1^2/2 + q1', check_periodicity=False).n == 1


def test_catalog_models():
    assert catalog_model('free', {'n': 2}).n == 2
    mechanical = catalog_model('mechanical')
    assert mechanical.n == 2 and mechanical.params['K1'] == 0.1
    with pytest.raises(ValueError):
        catalog_model('double-pendulum')
