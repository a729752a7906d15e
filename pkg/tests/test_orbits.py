import numpy as np
import pytest

from twist_orbits.errors import NonPrimeClass, NotCritical
from twist_orbits.framework import (
    DEGENERATE,
    ActionEvaluator,
    MapChain,
    OrbitClass,
    SearchBudget,
    TwistMap,
    critical_levels,
    distinct,
    find_critical_points,
    integrable_genfun,
    minimize_action,
    morse_census,
    morse_index,
    orbit_table
)

FOUR_PI_SQ = 4 * np.pi ** 2


@pytest.fixture
def standard_search(standard_map):
    E = ActionEvaluator(MapChain([standard_map]), OrbitClass((0,), 1))
    return find_critical_points(E, SearchBudget(random_starts=20), seed=7)


def test_standard_fixed_points_counted(standard_search):
    report, records = standard_search
    assert report.found == 2
    assert report.lower_bound_lyusternik == 2 and report.lower_bound_morse == 2
    assert report.meets_lyusternik and report.meets_morse
    assert report.all_nondegenerate
    assert report.census == {0: 1, 1: 1}
    assert report.census_check


def test_standard_fixed_points_values(standard_search):
    _, records = standard_search
    low, high = records
    assert low.action == pytest.approx(-0.8 / FOUR_PI_SQ, abs=1e-12)
    assert high.action == pytest.approx(0.8 / FOUR_PI_SQ, abs=1e-12)
    assert low.canonical.v[0] == pytest.approx(0.5, abs=1e-10)
    assert high.canonical.v[0] == pytest.approx(0.0, abs=1e-10)
    assert (low.morse_index, high.morse_index) == (0, 1)
    for record in records:
        assert record.residual < 1e-10
        assert record.verification.passed(1e-8)
    assert distinct(low, high)
    assert morse_census(records) == {0: 1, 1: 1}


@pytest.mark.slow
def test_froeschle_orbit_count(froeschle_map):
    E = ActionEvaluator(MapChain([froeschle_map]), OrbitClass((1, 0), 1))
    report, records = find_critical_points(E, seed=0)
    assert report.found >= 3
    assert (report.lower_bound_lyusternik, report.lower_bound_morse) == (3, 4)
    if report.all_nondegenerate:
        assert report.found == 4
    for record in records:
        assert record.verification.step_mismatch < 1e-8
        assert record.verification.closure < 1e-8
    actions = [r.action for r in records]
    assert actions == sorted(actions)


def test_non_prime_class_refused(standard_map):
    E = ActionEvaluator(MapChain([standard_map]), OrbitClass((2,), 4))
    with pytest.raises(NonPrimeClass):
        find_critical_points(E, SearchBudget(random_starts=1))


def test_search_is_independent_of_threads(standard_map):
    E = ActionEvaluator(MapChain([standard_map, standard_map]), OrbitClass((1,), 2))
    budget = SearchBudget(random_starts=12, batch_size=4)
    serial, serial_records = find_critical_points(E, budget, seed=3, threads=1)
    parallel, parallel_records = find_critical_points(E, budget, seed=3, threads=4)
    assert serial.found == parallel.found
    assert [r.action for r in serial_records] == [r.action for r in parallel_records]


def test_minimize_action_finds_a_minimum(standard_map, froeschle_map):
    E = ActionEvaluator(MapChain([standard_map]), OrbitClass((0,), 1))
    record = minimize_action(E, np.array([0.3]))
    assert record.morse_index == 0
    assert record.canonical.v[0] == pytest.approx(0.5, abs=1e-8)

    E2 = ActionEvaluator(MapChain([froeschle_map]), OrbitClass((1, 0), 2))
    record = minimize_action(E2, np.array([[0.1, 0.2], [0.6, 0.1]]))
    assert record.morse_index in (0, DEGENERATE)
    assert record.residual < 1e-10


def test_morse_index_requires_critical_point(standard_map):
    E = ActionEvaluator(MapChain([standard_map]), OrbitClass((0,), 1))
    assert morse_index(E, E.configuration([[0.0]])) == 1
    with pytest.raises(NotCritical):
        morse_index(E, E.configuration([[0.25]]))


def test_integrable_orbits_are_degenerate():
    E = ActionEvaluator(MapChain([TwistMap(S=integrable_genfun(1.0))]), OrbitClass((1,), 1))
    report, records = find_critical_points(E, SearchBudget(grid_per_axis=2, random_starts=4))
    assert report.found >= 1
    assert not report.all_nondegenerate and not report.meets_morse
    assert report.census_check is None
    assert all(r.degenerate for r in records)


def test_minimize_action_leaves_a_saddle(standard_map):
    E = ActionEvaluator(MapChain([standard_map]), OrbitClass((0,), 1))
    assert morse_index(E, E.configuration([[0.0]])) == 1
    record = minimize_action(E, np.array([0.0]))
    assert record.morse_index == 0
    assert record.canonical.v[0] == pytest.approx(0.5, abs=1e-8)
    assert record.action == pytest.approx(-0.8 / FOUR_PI_SQ, abs=1e-12)


def test_minimize_action_from_a_period_two_saddle(standard_map):
    E = ActionEvaluator(MapChain([standard_map]), OrbitClass((1,), 2))
    _, records = find_critical_points(E, SearchBudget(random_starts=20), seed=7)
    saddle = next(r for r in records if not r.degenerate and r.morse_index > 0)
    record = minimize_action(E, saddle.config)
    assert record.morse_index in (0, DEGENERATE)
    assert record.action < saddle.action
    assert record.residual < 1e-10


def test_integrable_points_collapse_to_one_level():
    E = ActionEvaluator(MapChain([TwistMap(S=integrable_genfun(1.0))]), OrbitClass((1,), 1))
    report, records = find_critical_points(E, SearchBudget(random_starts=10))
    assert report.critical_points == len(records) > 1
    assert report.found == 1 and report.degenerate_levels == 1
    assert not report.meets_lyusternik
    assert all(r.action == pytest.approx(0.5) for r in records)


def test_critical_levels_merge_close_actions(standard_search):
    _, records = standard_search
    low, high = records
    assert critical_levels([low, high, low]) == [low.action, high.action]
    assert critical_levels([]) == []


def test_orbit_table(standard_search):
    _, records = standard_search
    table = orbit_table(records)
    assert list(table.columns) == ['orbit', 'class', 'k', 'q1', 'p1']
    assert len(table) == 4
    assert set(table['class']) == {'((0),1)'}
