import numpy as np
import pytest

from twist_orbits.errors import DimensionMismatch, NonFiniteState
from twist_orbits.framework import (
    CoverPoint,
    DeckTranslation,
    OrbitClass,
    PhasePoint,
    SymplecticMatrixJ,
    deck_translate,
    reduce_to_torus,
    torus_distance
)


@pytest.mark.parametrize('coords, expected', [
    ([1.25, -0.5], [0.25, 0.5]),
    ([0.0], [0.0]),
    ([3.0, 7.0], [0.0, 0.0])
])
def test_reduce_to_torus(coords, expected):
    reduced = reduce_to_torus(CoverPoint(coords))
    assert reduced.coords.tolist() == pytest.approx(expected)


def test_reduce_to_torus_is_idempotent_with_integer_offset(rng):
    x = rng.uniform(-50, 50, 4)
    once = reduce_to_torus(x)
    assert np.all((once >= 0) & (once < 1))
    assert np.array_equal(reduce_to_torus(once), once)
    offset = x - once
    assert np.allclose(offset, np.round(offset))


def test_reduce_to_torus_half_open_boundary():
    reduced = reduce_to_torus(np.array([-1e-18, 1.0 - 1e-17]))
    assert np.all(reduced < 1.0)


def test_non_finite_cover_point_rejected():
    with pytest.raises(NonFiniteState):
        CoverPoint([0.1, np.nan])
    with pytest.raises(NonFiniteState):
        reduce_to_torus(np.array([np.inf]))


def test_deck_translate():
    z = PhasePoint([0.2, 0.3], [0.7, -1.1])
    w = deck_translate(z, DeckTranslation((1, 0)))
    assert w.q.tolist() == pytest.approx([1.2, 0.3])
    assert np.array_equal(w.p, z.p)


def test_deck_translate_identity_and_group_law(rng):
    z = PhasePoint(rng.random(3), rng.normal(size=3))
    assert deck_translate(z, (0, 0, 0)).distance(z) == 0.0
    m1, m2 = DeckTranslation((1, -2, 3)), DeckTranslation((0, 5, -1))
    stepwise = deck_translate(deck_translate(z, m1), m2)
    assert stepwise.distance(deck_translate(z, m1 + m2)) < 1e-14


def test_deck_translate_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        deck_translate(PhasePoint([0.1], [0.0]), (1, 0))


def test_phase_point_dimensions():
    with pytest.raises(DimensionMismatch):
        PhasePoint([0.0, 0.0], [1.0])
    z = PhasePoint.from_array([0.1, 0.2, 0.3, 0.4])
    assert z.q.tolist() == [0.1, 0.2] and z.p.tolist() == [0.3, 0.4]
    with pytest.raises(DimensionMismatch):
        PhasePoint.from_array([0.1, 0.2, 0.3])


@pytest.mark.parametrize('m, d, prime', [
    ((1, 0), 1, True),
    ((0,), 1, True),
    ((2,), 4, False),
    ((2, 3), 4, True),
    ((2, 4), 6, False)
])
def test_orbit_class_primality(m, d, prime):
    assert OrbitClass(m, d).prime is prime


def test_orbit_class_multiple():
    cls = OrbitClass((1, 0), 2)
    assert cls.multiple(3) == OrbitClass((3, 0), 6)
    assert cls.multiple(3).gcd == 3
    assert not cls.multiple(2).prime
    assert str(cls) == '((1,0),2)'
    assert cls.rotation.tolist() == [0.5, 0.0]


def test_orbit_class_rejects_bad_period():
    with pytest.raises(ValueError):
        OrbitClass((1,), 0)
    with pytest.raises(ValueError):
        OrbitClass((0.5,), 1)


@pytest.mark.parametrize('n', [1, 2, 3])
def test_symplectic_matrix(n):
    J = np.asarray(SymplecticMatrixJ(n))
    eye = np.eye(2 * n)
    assert np.array_equal(J @ J, -eye)
    assert np.array_equal(J.T, -J)
    assert np.linalg.norm(J.T @ J - eye) == 0.0


def test_torus_distance():
    assert torus_distance([0.95], [0.05]) == pytest.approx(0.1)
    assert torus_distance([2.3, -1.0], [0.3, 0.0]) == pytest.approx(0.0)
