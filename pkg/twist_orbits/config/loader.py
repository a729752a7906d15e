"""
``twist_orbits.config.loader``
==============================
Validate run configurations and build the objects they describe.

A configuration is resolved against `DEFAULTS` before anything is computed:
the resolved document (defaults filled in) is what every report echoes.

"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass
from typing import Any

from twist_orbits import (
    CRITICAL_TOL,
    DEDUP_TOL,
    DEFLATION_RADIUS,
    DEGENERACY_TOL,
    DISPLACEMENT_BOX,
    GENFUN_FAMILIES,
    GRID_PER_AXIS,
    GRID_RANDOM,
    HAMILTONIAN_FAMILIES,
    NEWTON_TOL,
    ORBIT_TOL,
    RANDOM_STARTS,
    SAFETY,
    SCHEMA_VERSION,
    STEPS_PER_STINT
)
from twist_orbits.config._aliases_and_constants import (
    BudgetKeys,
    ClassKeys,
    ConfigDict,
    ConfigKeys,
    DecomposeKeys,
    MapDict,
    OutputKeys,
    SamplingKeys,
    SuspendKeys,
    SystemKeys,
    SystemKinds,
    ToleranceKeys
)
from twist_orbits.errors import ConfigError
from twist_orbits.framework import (
    GeneratingFunction,
    HamiltonianModel,
    MapChain,
    OrbitClass,
    SamplingGrid,
    SearchBudget,
    TwistMap,
    catalog_genfun,
    catalog_model,
    expression_model
)
from twist_orbits.framework.suspension import DELTA_T, SUSPENSION_STEPS
from twist_orbits.hamlang import ExpressionError

__all__ = [
    'DEFAULTS',
    'RunConfig',
    'apply_overrides',
    'build_budget',
    'build_classes',
    'build_genfun',
    'build_grid',
    'build_system',
    'load_config',
    'parse_config'
]

logger = logging.getLogger(__name__)

DEFAULTS: dict[str, dict[str, Any]] = {
    ConfigKeys.BUDGET: {
        BudgetKeys.GRID_PER_AXIS: 3,
        BudgetKeys.RANDOM_STARTS: RANDOM_STARTS,
        BudgetKeys.MAX_ITER: 200,
        BudgetKeys.BATCH_SIZE: 8,
        BudgetKeys.DEFLATION_RADIUS: DEFLATION_RADIUS
    },
    ConfigKeys.TOLERANCES: {
        ToleranceKeys.NEWTON: NEWTON_TOL,
        ToleranceKeys.CRITICAL: CRITICAL_TOL,
        ToleranceKeys.ORBIT: ORBIT_TOL,
        ToleranceKeys.DEGENERACY: DEGENERACY_TOL,
        ToleranceKeys.DEDUP: DEDUP_TOL,
        ToleranceKeys.DERIVATIVE: 1e-6,
        ToleranceKeys.SYMPLECTIC: 1e-8,
        ToleranceKeys.FLOW_ORBIT: 1e-6,
        ToleranceKeys.SUSPENSION: 1e-3
    },
    ConfigKeys.SAMPLING: {
        SamplingKeys.PER_AXIS: GRID_PER_AXIS,
        SamplingKeys.DELTA_PER_AXIS: 5,
        SamplingKeys.RANDOM: GRID_RANDOM,
        SamplingKeys.BOX: DISPLACEMENT_BOX
    },
    ConfigKeys.DECOMPOSE: {
        DecomposeKeys.SAFETY: SAFETY,
        DecomposeKeys.STEPS: STEPS_PER_STINT,
        DecomposeKeys.CHECK_POINTS: 50,
        DecomposeKeys.P_MAX: None,
        DecomposeKeys.RANDOM_STARTS: 16
    },
    ConfigKeys.SUSPEND: {
        SuspendKeys.STEPS: SUSPENSION_STEPS,
        SuspendKeys.DELTA_T: DELTA_T,
        SuspendKeys.RICHARDSON: 1,
        SuspendKeys.POINTS_PER_AXIS: 4,
        SuspendKeys.P_MAX: 1.0
    },
    ConfigKeys.OUTPUT: {
        OutputKeys.DIR: 'out'
    }
}


@dataclass(eq=False, kw_only=True, slots=True)
class RunConfig:
    """A validated configuration; `document` is the resolved JSON object."""

    document: ConfigDict

    @property
    def system(self) -> dict[str, Any]:
        return self.document[ConfigKeys.SYSTEM]

    @property
    def kind(self) -> str:
        return self.system[SystemKeys.KIND]

    @property
    def seed(self) -> int:
        return self.document[ConfigKeys.SEED]

    @property
    def threads(self) -> int:
        return self.document[ConfigKeys.THREADS]

    @property
    def tolerances(self) -> dict[str, float]:
        return self.document[ConfigKeys.TOLERANCES]

    @property
    def decompose(self) -> dict[str, Any]:
        return self.document[ConfigKeys.DECOMPOSE]

    @property
    def suspend(self) -> dict[str, Any]:
        return self.document[ConfigKeys.SUSPEND]

    @property
    def out(self) -> str:
        return self.document[ConfigKeys.OUTPUT][OutputKeys.DIR]


# ========== #
# Validation #
# ========== #


def _fail(path: str, message: str, value: Any = None) -> None:
    raise ConfigError('{}: {}'.format(path, message), key=path, value=value)


def _check_number(path: str, value: Any, *, integer: bool = False, minimum: float | None = None,
                  strict: bool = True) -> None:
    if isinstance(value, bool) or not isinstance(value, int if integer else (int, float)):
        _fail(path, 'expected an integer' if integer else 'expected a number', value)
    if minimum is not None and (value <= minimum if strict else value < minimum):
        _fail(path, 'must be {} {}'.format('greater than' if strict else 'at least', minimum), value)


def _object(path: str, value: Any) -> dict[str, Any]:
    if not isinstance(value, dict):
        _fail(path, 'expected an object', value)
    return value


def _section(doc: dict[str, Any], key: str) -> dict[str, Any]:
    """Merge the section `key` of `doc` over its defaults; every value is a positive number or `None`."""
    defaults = DEFAULTS[key]
    raw = _object(key, doc.get(key, {}))
    for name in sorted(set(raw) - set(defaults)):
        _fail('{}.{}'.format(key, name), 'unknown key')
    section = dict(defaults)
    for name, value in raw.items():
        path = '{}.{}'.format(key, name)
        default = defaults[name]
        if isinstance(default, str):
            if not isinstance(value, str) or not value:
                _fail(path, 'expected a non-empty string', value)
        elif value is not None or default is not None:
            _check_number(path, value, integer=isinstance(default, int) and not isinstance(default, bool),
                          minimum=0, strict=name != SuspendKeys.RICHARDSON)
        section[name] = value
    if key == ConfigKeys.SUSPEND and section[SuspendKeys.RICHARDSON] not in (0, 1):
        _fail('suspend.richardson', 'must be 0 or 1', section[SuspendKeys.RICHARDSON])
    if key == ConfigKeys.DECOMPOSE and section[DecomposeKeys.SAFETY] < 1:
        _fail('decompose.safety', 'must be at least 1', section[DecomposeKeys.SAFETY])
    return section


def _validate_map(path: str, value: Any) -> MapDict:
    spec = _object(path, value)
    family = spec.get(SystemKeys.FAMILY)
    if family not in GENFUN_FAMILIES:
        _fail(path + '.family', 'expected one of {}'.format(GENFUN_FAMILIES), family)
    params = _object(path + '.params', spec.get(SystemKeys.PARAMS, {}))
    for name in sorted(set(spec) - {SystemKeys.FAMILY, SystemKeys.PARAMS}):
        _fail('{}.{}'.format(path, name), 'unknown key')
    return {SystemKeys.FAMILY: family, SystemKeys.PARAMS: copy.deepcopy(params)}


def _validate_system(value: Any) -> dict[str, Any]:
    system = _object('system', value)
    kind = system.get(SystemKeys.KIND)
    match kind:
        case SystemKinds.MAP:
            return {SystemKeys.KIND: kind, **_validate_map('system', {k: v for k, v in system.items()
                                                                      if k != SystemKeys.KIND})}
        case SystemKinds.CHAIN:
            maps = system.get(SystemKeys.MAPS)
            if not isinstance(maps, list) or not maps:
                _fail('system.maps', 'expected a non-empty list', maps)
            return {SystemKeys.KIND: kind,
                    SystemKeys.MAPS: [_validate_map('system.maps[{}]'.format(i), spec) for i, spec in enumerate(maps)]}
        case SystemKinds.HAMILTONIAN:
            if SystemKeys.EXPRESSION in system:
                text = system[SystemKeys.EXPRESSION]
                if not isinstance(text, str) or not text.strip():
                    _fail('system.expression', 'expected a non-empty string', text)
                n = system.get(SystemKeys.N)
                if n is not None:
                    _check_number('system.n', n, integer=True, minimum=0)
                return {SystemKeys.KIND: kind, SystemKeys.EXPRESSION: text, SystemKeys.N: n}
            catalog = system.get(SystemKeys.CATALOG)
            if catalog not in HAMILTONIAN_FAMILIES:
                _fail('system.catalog', 'expected one of {}'.format(HAMILTONIAN_FAMILIES), catalog)
            params = _object('system.params', system.get(SystemKeys.PARAMS, {}))
            return {SystemKeys.KIND: kind, SystemKeys.CATALOG: catalog, SystemKeys.PARAMS: copy.deepcopy(params)}
    _fail('system.kind', 'expected one of {}'.format(SystemKinds.ALL), kind)


def _validate_classes(value: Any) -> list[dict[str, Any]] | None:
    if value is None:
        return None
    if not isinstance(value, list):
        _fail('classes', 'expected a list', value)
    classes = []
    for i, entry in enumerate(value):
        path = 'classes[{}]'.format(i)
        entry = _object(path, entry)
        m, d = entry.get(ClassKeys.M), entry.get(ClassKeys.D, 1)
        m = [m] if isinstance(m, int) and not isinstance(m, bool) else m
        if not isinstance(m, list) or not m:
            _fail(path + '.m', 'expected an integer or a non-empty list of integers', m)
        for k, mk in enumerate(m):
            _check_number('{}.m[{}]'.format(path, k), mk, integer=True)
        _check_number(path + '.d', d, integer=True, minimum=0)
        classes.append({ClassKeys.M: list(m), ClassKeys.D: d})
    return classes


def parse_config(doc: dict[str, Any]) -> RunConfig:
    """Validate `doc` and fill in defaults. Raises `ConfigError` naming the offending key."""
    doc = _object('config', doc)
    for key in sorted(set(doc) - set(ConfigKeys.ALL)):
        _fail(key, 'unknown key')
    version = doc.get(ConfigKeys.SCHEMA_VERSION, SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        _fail('schema_version', 'unsupported version (expected {})'.format(SCHEMA_VERSION), version)
    if ConfigKeys.SYSTEM not in doc:
        _fail('system', 'missing')

    seed = doc.get(ConfigKeys.SEED, 0)
    _check_number('seed', seed, integer=True, minimum=0, strict=False)
    threads = doc.get(ConfigKeys.THREADS, 1)
    _check_number('threads', threads, integer=True, minimum=0)

    resolved = {
        ConfigKeys.SCHEMA_VERSION: SCHEMA_VERSION,
        ConfigKeys.SYSTEM: _validate_system(doc[ConfigKeys.SYSTEM]),
        ConfigKeys.CLASSES: _validate_classes(doc.get(ConfigKeys.CLASSES)),
        ConfigKeys.SEED: seed,
        ConfigKeys.THREADS: threads,
        **{key: _section(doc, key) for key in DEFAULTS}
    }
    return RunConfig(document=resolved)


def load_config(path: str) -> RunConfig:
    """Read the JSON file at `path` and validate it."""
    try:
        with open(path, encoding='utf-8') as f:
            doc = json.load(f)
    except OSError as exc:
        raise ConfigError('cannot read config file {}: {}'.format(path, exc.strerror), key='config', value=path) \
            from None
    except json.JSONDecodeError as exc:
        raise ConfigError('config file {} is not valid JSON: {}'.format(path, exc.msg), key='config',
                          value=path, line=exc.lineno, column=exc.colno) from None
    return parse_config(doc)


def apply_overrides(cfg: RunConfig, *, seed: int | None = None, threads: int | None = None,
                    tol: float | None = None, out: str | None = None) -> RunConfig:
    """Return a copy of `cfg` with the command-line overrides applied and revalidated."""
    doc = copy.deepcopy(cfg.document)
    if seed is not None:
        doc[ConfigKeys.SEED] = seed
    if threads is not None:
        doc[ConfigKeys.THREADS] = threads
    if tol is not None:
        doc[ConfigKeys.TOLERANCES][ToleranceKeys.NEWTON] = tol
        doc[ConfigKeys.TOLERANCES][ToleranceKeys.CRITICAL] = tol
    if out is not None:
        doc[ConfigKeys.OUTPUT][OutputKeys.DIR] = out
    return parse_config(doc)


# ======== #
# Builders #
# ======== #


def build_genfun(spec: MapDict, path: str = 'system') -> GeneratingFunction:
    """Build the catalog generating function described by a validated map entry."""
    try:
        return catalog_genfun(spec[SystemKeys.FAMILY], spec[SystemKeys.PARAMS])
    except (TypeError, ValueError) as exc:
        raise ConfigError('{}.params: {}'.format(path, exc.args[0]), key=path + '.params',
                          value=spec[SystemKeys.PARAMS]) from exc


def build_system(cfg: RunConfig) -> MapChain | HamiltonianModel:
    """Build the map chain or Hamiltonian of `cfg`; maps are not yet certified."""
    system, tol = cfg.system, cfg.tolerances[ToleranceKeys.NEWTON]
    match cfg.kind:
        case SystemKinds.MAP:
            return MapChain([TwistMap(S=build_genfun(system), tol=tol)])
        case SystemKinds.CHAIN:
            maps = [TwistMap(S=build_genfun(spec, 'system.maps[{}]'.format(i)), tol=tol)
                    for i, spec in enumerate(system[SystemKeys.MAPS])]
            try:
                return MapChain(maps)
            except ValueError as exc:
                raise ConfigError('system.maps: {}'.format(exc.args[0]), key='system.maps') from exc
        case SystemKinds.HAMILTONIAN:
            if SystemKeys.EXPRESSION in system:
                try:
                    return expression_model(system[SystemKeys.EXPRESSION], system[SystemKeys.N])
                except ExpressionError as exc:
                    raise ConfigError('system.expression: {}'.format(exc.message), key='system.expression',
                                      **exc.witness) from exc
            try:
                return catalog_model(system[SystemKeys.CATALOG], system[SystemKeys.PARAMS])
            except (TypeError, ValueError) as exc:
                raise ConfigError('system.params: {}'.format(exc.args[0]), key='system.params') from exc


def build_classes(cfg: RunConfig, n: int) -> list[OrbitClass]:
    """The requested orbit classes; defaults to the single class `((0, ..., 0), 1)`."""
    entries = cfg.document[ConfigKeys.CLASSES]
    if entries is None:
        return [OrbitClass((0,) * n, 1)]
    classes = []
    for i, entry in enumerate(entries):
        if len(entry[ClassKeys.M]) != n:
            _fail('classes[{}].m'.format(i), 'expected {} components for a system of dimension {}'.format(n, n),
                  entry[ClassKeys.M])
        classes.append(OrbitClass(tuple(entry[ClassKeys.M]), entry[ClassKeys.D]))
    return classes


def build_budget(cfg: RunConfig, random_starts: int | None = None) -> SearchBudget:
    """The multistart budget, with `random_starts` overriding the configured count."""
    budget, tol = cfg.document[ConfigKeys.BUDGET], cfg.tolerances
    return SearchBudget(
        grid_per_axis=budget[BudgetKeys.GRID_PER_AXIS],
        random_starts=budget[BudgetKeys.RANDOM_STARTS] if random_starts is None else random_starts,
        max_iter=budget[BudgetKeys.MAX_ITER],
        batch_size=budget[BudgetKeys.BATCH_SIZE],
        deflation_radius=budget[BudgetKeys.DEFLATION_RADIUS],
        degeneracy_tol=tol[ToleranceKeys.DEGENERACY],
        dedup_tol=tol[ToleranceKeys.DEDUP],
        critical_tol=tol[ToleranceKeys.CRITICAL]
    )


def build_grid(cfg: RunConfig) -> SamplingGrid:
    sampling = cfg.document[ConfigKeys.SAMPLING]
    return SamplingGrid(
        per_axis=sampling[SamplingKeys.PER_AXIS],
        delta_per_axis=sampling[SamplingKeys.DELTA_PER_AXIS],
        random=sampling[SamplingKeys.RANDOM],
        box=float(sampling[SamplingKeys.BOX]),
        seed=cfg.seed
    )
