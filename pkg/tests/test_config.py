import json

import pytest

from twist_orbits import SCHEMA_VERSION
from twist_orbits.config import (
    DEFAULTS,
    ConfigKeys,
    ToleranceKeys,
    apply_overrides,
    build_budget,
    build_classes,
    build_grid,
    build_system,
    load_config,
    parse_config
)
from twist_orbits.errors import ConfigError
from twist_orbits.framework import HamiltonianModel, MapChain, OrbitClass

STANDARD = {'system': {'kind': 'map', 'family': 'standard', 'params': {'s': 0.8}}}


def failing_key(doc):
    with pytest.raises(ConfigError) as info:
        parse_config(doc)
    return info.value.witness['key']


def test_defaults_are_filled_in():
    cfg = parse_config(STANDARD)
    assert cfg.seed == 0 and cfg.threads == 1
    assert cfg.kind == 'map'
    assert cfg.out == 'out'
    assert cfg.document[ConfigKeys.SCHEMA_VERSION] == SCHEMA_VERSION
    assert cfg.tolerances == DEFAULTS[ConfigKeys.TOLERANCES]
    assert cfg.document[ConfigKeys.CLASSES] is None
    assert cfg.system['params'] == {'s': 0.8}


def test_sections_merge_over_defaults():
    cfg = parse_config({**STANDARD, 'tolerances': {'orbit': 1e-6}, 'suspend': {'richardson': 0}})
    assert cfg.tolerances[ToleranceKeys.ORBIT] == 1e-6
    assert cfg.tolerances[ToleranceKeys.NEWTON] == DEFAULTS[ConfigKeys.TOLERANCES][ToleranceKeys.NEWTON]
    assert cfg.suspend['richardson'] == 0


@pytest.mark.parametrize('doc, key', [
    ({**STANDARD, 'colour': 'red'}, 'colour'),
    ({**STANDARD, 'schema_version': 2}, 'schema_version'),
    ({'seed': 1}, 'system'),
    ({**STANDARD, 'seed': -1}, 'seed'),
    ({**STANDARD, 'seed': 1.5}, 'seed'),
    ({**STANDARD, 'threads': 0}, 'threads'),
    ({**STANDARD, 'threads': True}, 'threads'),
    ({**STANDARD, 'budget': {'random_starts': 'many'}}, 'budget.random_starts'),
    ({**STANDARD, 'budget': {'restarts': 3}}, 'budget.restarts'),
    ({**STANDARD, 'tolerances': {'orbit': 0}}, 'tolerances.orbit'),
    ({**STANDARD, 'suspend': {'richardson': 2}}, 'suspend.richardson'),
    ({**STANDARD, 'decompose': {'safety': 0.5}}, 'decompose.safety'),
    ({**STANDARD, 'output': {'dir': ''}}, 'output.dir'),
    ({'system': {'kind': 'flow'}}, 'system.kind'),
    ({'system': {'kind': 'map', 'family': 'henon'}}, 'system.family'),
    ({'system': {'kind': 'map', 'family': 'standard', 'k': 1}}, 'system.k'),
    ({'system': {'kind': 'chain', 'maps': []}}, 'system.maps'),
    ({'system': {'kind': 'chain', 'maps': [{'family': 'x'}]}}, 'system.maps[0].family'),
    ({'system': {'kind': 'hamiltonian', 'catalog': 'duffing'}}, 'system.catalog'),
    ({'system': {'kind': 'hamiltonian', 'expression': ' '}}, 'system.expression'),
    ({**STANDARD, 'classes': [{'m': [0], 'd': 0}]}, 'classes[0].d'),
    ({**STANDARD, 'classes': [{'m': 'one'}]}, 'classes[0].m'),
    ({**STANDARD, 'classes': {'m': 1}}, 'classes')
])
def test_invalid_documents_name_the_key(doc, key):
    assert failing_key(doc) == key


def test_load_config(tmp_path):
    path = tmp_path / 'config.json'
    path.write_text(json.dumps({**STANDARD, 'seed': 3}))
    assert load_config(str(path)).seed == 3
    path.write_text('{"system": ')
    with pytest.raises(ConfigError) as info:
        load_config(str(path))
    assert 'not valid JSON' in info.value.message
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / 'missing.json'))


def test_apply_overrides():
    cfg = apply_overrides(parse_config(STANDARD), seed=9, threads=4, tol=1e-9, out='results')
    assert cfg.seed == 9 and cfg.threads == 4 and cfg.out == 'results'
    assert cfg.tolerances[ToleranceKeys.NEWTON] == 1e-9
    assert cfg.tolerances[ToleranceKeys.CRITICAL] == 1e-9
    with pytest.raises(ConfigError):
        apply_overrides(cfg, threads=0)


def test_build_map_and_chain():
    chain = build_system(parse_config(STANDARD))
    assert isinstance(chain, MapChain) and chain.n == 1
    assert chain.maps[0].tc is None
    chain = build_system(parse_config({'system': {'kind': 'chain', 'maps': [
        {'family': 'froeschle'}, {'family': 'integrable', 'params': {'A': [[1, 0], [0, 2]]}}]}}))
    assert len(chain.maps) == 2 and chain.n == 2


def test_build_rejects_mixed_dimensions():
    cfg = parse_config({'system': {'kind': 'chain', 'maps': [{'family': 'standard'}, {'family': 'froeschle'}]}})
    with pytest.raises(ConfigError):
        build_system(cfg)


def test_build_hamiltonians():
    Hm = build_system(parse_config({'system': {'kind': 'hamiltonian', 'catalog': 'pendulum', 'params': {'k': 2}}}))
    assert isinstance(Hm, HamiltonianModel) and Hm.params['k'] == 2.0
    Hm = build_system(parse_config({'system': {'kind': 'hamiltonian', 'expression': 'p1^2/2 + p2^2/2'}}))
    assert Hm.n == 2
    cfg = parse_config({'system': {'kind': 'hamiltonian', 'expression': 'p1^2/2 +'}})
    with pytest.raises(ConfigError) as info:
        build_system(cfg)
    assert info.value.witness['key'] == 'system.expression'


def test_build_classes():
    cfg = parse_config({**STANDARD, 'classes': [{'m': 1, 'd': 2}, {'m': [0]}]})
    assert build_classes(cfg, 1) == [OrbitClass((1,), 2), OrbitClass((0,), 1)]
    assert build_classes(parse_config(STANDARD), 2) == [OrbitClass((0, 0), 1)]
    with pytest.raises(ConfigError):
        build_classes(cfg, 2)


def test_build_budget_and_grid():
    cfg = parse_config({**STANDARD, 'seed': 5, 'budget': {'random_starts': 12}, 'sampling': {'box': 2}})
    assert build_budget(cfg).random_starts == 12
    assert build_budget(cfg, random_starts=3).random_starts == 3
    grid = build_grid(cfg)
    assert grid.seed == 5 and grid.box == 2.0
