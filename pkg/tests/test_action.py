import numpy as np
import pytest

from twist_orbits.errors import DimensionMismatch, NotCritical
from twist_orbits.framework import (
    ActionEvaluator,
    MapChain,
    OrbitClass,
    PhasePoint,
    TwistMap,
    action_gradient,
    action_hessian,
    action_value,
    canonicalize,
    catalog_genfun,
    config_to_orbit,
    critical_residual,
    fd_jacobian,
    gaps,
    integrable_genfun,
    reconstruct,
    same_orbit,
    shift_points,
    verify_orbit
)

FOUR_PI_SQ = 4 * np.pi ** 2


@pytest.fixture
def standard_one():
    return catalog_genfun('standard', {'s': 1.0})


def test_integrable_single_segment():
    E = ActionEvaluator([integrable_genfun(1.0)], OrbitClass((1,), 1))
    assert action_value(E, E.configuration([[0.0]])) == pytest.approx(0.5)


def test_standard_action_reduces_to_potential(standard_one, rng):
    E = ActionEvaluator([standard_one], OrbitClass((0,), 1))
    for q in rng.random(10):
        c = E.configuration([[q]])
        assert action_value(E, c) == pytest.approx(np.cos(2 * np.pi * q) / FOUR_PI_SQ, abs=1e-15)
        assert action_hessian(E, c)[0, 0] == pytest.approx(-np.cos(2 * np.pi * q), abs=1e-12)


def test_action_is_deck_invariant(froeschle, rng):
    E = ActionEvaluator([froeschle, froeschle], OrbitClass((1, 0), 2))
    c = E.configuration(rng.normal(size=(4, 2)))
    shifted = c.translated((2, -3))
    assert action_value(E, shifted) == pytest.approx(action_value(E, c), abs=1e-12)
    assert action_value(E, c.shifted(1)) == pytest.approx(action_value(E, c), abs=1e-12)


def test_integrable_rotation_is_critical():
    E = ActionEvaluator([integrable_genfun(1.0)], OrbitClass((1,), 2))
    c = E.configuration([[0.0], [0.5]])
    assert np.allclose(action_gradient(E, c), 0.0, atol=1e-15)
    assert critical_residual(E, c) == pytest.approx(0.0, abs=1e-15)
    assert np.array_equal(action_hessian(E, c), np.array([[2.0, -2.0], [-2.0, 2.0]]))


def test_standard_gradient_and_residual(standard_one):
    E = ActionEvaluator([standard_one], OrbitClass((0,), 1))
    c = E.configuration([[0.25]])
    assert action_gradient(E, c)[0] == pytest.approx(-1 / (2 * np.pi))
    assert critical_residual(E, c) == pytest.approx(1 / (2 * np.pi))
    assert critical_residual(E, E.configuration([[0.0]])) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize('name, m, d, N', [
    ('integrable', (1,), 3, 1),
    ('standard', (1,), 2, 2),
    ('froeschle', (1, 0), 1, 3),
    ('froeschle', (1, 1), 2, 1)
])
def test_gradient_and_hessian_match_finite_differences(name, m, d, N, rng):
    S = catalog_genfun(name)
    E = ActionEvaluator([S] * N, OrbitClass(m, d))
    for _ in range(100):
        x = rng.normal(scale=0.5, size=E.size * E.n)
        grad = E.gradient(x)
        fd = fd_jacobian(E.value, x, 1e-6)
        assert np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1) < 1e-6
        H = E.hessian(x)
        assert np.abs(H - H.T).max() < 1e-10
    fd_hess = fd_jacobian(E.gradient, x, 1e-6)
    assert np.allclose(H, fd_hess, atol=1e-6)


def test_configuration_size_checked(standard_one):
    E = ActionEvaluator([standard_one], OrbitClass((0,), 2))
    with pytest.raises(DimensionMismatch):
        E.configuration([[0.0]])
    with pytest.raises(DimensionMismatch):
        ActionEvaluator([standard_one], OrbitClass((0, 1), 1))


def test_integrable_orbit_has_rotation_momentum():
    chain = MapChain([TwistMap(S=integrable_genfun(1.0))])
    E = ActionEvaluator(chain, OrbitClass((1,), 1))
    orbit = config_to_orbit(E, E.configuration([[0.0]]))
    assert orbit[0].p[0] == pytest.approx(1.0)
    assert orbit[-1].q[0] == pytest.approx(1.0)
    check = verify_orbit(chain, orbit, E.cls)
    assert check.passed(1e-10)


def test_standard_fixed_point_orbit():
    chain = MapChain([TwistMap(S=catalog_genfun('standard', {'s': 0.8}))])
    E = ActionEvaluator(chain, OrbitClass((0,), 1))
    orbit = config_to_orbit(E, E.configuration([[0.5]]))
    assert orbit[0].distance(PhasePoint([0.5], [0.0])) < 1e-12
    with pytest.raises(NotCritical):
        config_to_orbit(E, E.configuration([[0.3]]))


def test_shift_points_wraps_with_m():
    cls = OrbitClass((1,), 3)
    points = np.array([[0.0], [0.3], [0.7]])
    assert shift_points(points, cls, 1).ravel().tolist() == pytest.approx([0.3, 0.7, 1.0])
    assert np.array_equal(shift_points(points, cls, 3), points)


def test_gaps_of_equally_spaced_rotation():
    cls = OrbitClass((1,), 4)
    points = np.arange(4).reshape(4, 1) / 4
    assert np.allclose(gaps(points, cls), 0.0)


def test_canonical_form_is_invariant(rng):
    cls = OrbitClass((1, 2), 3)
    points = np.cumsum(rng.normal(scale=0.3, size=(3, 2)), axis=0)
    E = ActionEvaluator([catalog_genfun('froeschle')], cls)
    form = canonicalize(E.configuration(points))
    for j in range(3):
        moved = E.configuration(shift_points(points, cls, j) + np.array([4, -1]))
        other = canonicalize(moved)
        assert np.allclose(other.t, form.t, atol=1e-12)
        assert np.allclose(other.v, form.v, atol=1e-12)
    rebuilt = reconstruct(form, cls)
    assert same_orbit(rebuilt, points, cls, 1e-10)


def test_canonical_mean_wraps_to_zero():
    cls = OrbitClass((0,), 1)
    E = ActionEvaluator([catalog_genfun('standard')], cls)
    for q in (-1e-11, 3.0 - 1e-11, 0.0, 2.0):
        assert canonicalize(E.configuration([[q]])).v[0] == 0.0
    assert canonicalize(E.configuration([[0.5]])).v[0] == 0.5


def test_same_orbit_distinguishes():
    cls = OrbitClass((0,), 1)
    assert same_orbit(np.array([[0.0]]), np.array([[1.0]]), cls, 1e-8)
    assert not same_orbit(np.array([[0.0]]), np.array([[0.5]]), cls, 1e-8)
