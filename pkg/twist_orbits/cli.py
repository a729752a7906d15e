"""
``twist_orbits.cli``
====================
Batch front end: ``twist-orbits {check,orbits,decompose,suspend} --config PATH``.

Each command writes ``<out>/<command>.json``; ``orbits`` and ``decompose``
also write ``orbits.csv`` and ``suspend`` writes ``suspension.csv``. An
orbit through ``dN`` configuration points has ``dN + 1`` rows in
``orbits.csv``, ``k = 0, ..., dN``; the last row is the closing point
``tau_m z_0``. The exit
code is 0 on success, 1 for usage and configuration errors, 2 for failed
certification or verification and 3 for numerical failures.

"""

from __future__ import annotations

import argparse
import datetime as dt
import logging
import os
import sys
from itertools import product
from typing import Any, Callable, Sequence

import numpy as np
import pandas as pd

from twist_orbits import COMMANDS, SCHEMA_VERSION, ExitCodes
from twist_orbits.config import (
    ConfigKeys,
    DecomposeKeys,
    RunConfig,
    SuspendKeys,
    SystemKinds,
    ToleranceKeys,
    apply_overrides,
    build_budget,
    build_classes,
    build_grid,
    build_system,
    load_config
)
from twist_orbits.errors import CertificationError, ConfigError, TwistOrbitsError
from twist_orbits.framework import (
    ActionEvaluator,
    HamiltonianModel,
    MapChain,
    OrbitClass,
    PhasePoint,
    SearchBudget,
    certify_convexity,
    check_periodicity,
    check_symplectic,
    choose_N,
    convexity_audit,
    decompose,
    deck_equivariance_residual,
    encode_document,
    estimate_optical_bounds,
    fd_derivative_check,
    find_critical_points,
    flow_fixed_point,
    gronwall_check,
    lower_bound_cert,
    orbit_table,
    suspension_family,
    tangent_flow,
    twist_block,
    verify_md_point,
    verify_suspension
)

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'
LOG_LEVELS = ['DEBUG', 'INFO', 'WARNING', 'ERROR']
CHECK_POINTS = 20

type Sections = dict[str, Any]


class Status:
    """Values of the `status` field of a report."""
    OK = 'ok'
    FAILED = 'failed'
    CONFIG_ERROR = 'config_error'
    CERTIFICATION_FAILURE = 'certification_failure'
    NUMERIC_FAILURE = 'numeric_failure'


class _ArgumentParser(argparse.ArgumentParser):
    """Exit with the configuration error code on usage errors."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(ExitCodes.CONFIG, '{}: error: {}\n'.format(self.prog, message))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', required=True, help='path to the JSON run configuration')
    common.add_argument('--out', help='output directory (overrides output.dir)')
    common.add_argument('--seed', type=int, help='random seed (overrides seed)')
    common.add_argument('--threads', type=int, help='worker threads for the multistart search')
    common.add_argument('--tol', type=float, help='Newton and critical-point tolerance')
    common.add_argument('--log-level', default='WARNING', choices=LOG_LEVELS, help='logging level (default: WARNING)')

    parser = _ArgumentParser(prog='twist-orbits', description='Periodic orbits of symplectic twist maps.')
    subparsers = parser.add_subparsers(dest='command', required=True, parser_class=_ArgumentParser)
    helps = {
        'check': 'certify the generating functions or the Hamiltonian of the system',
        'orbits': 'find the periodic orbits of each requested class',
        'decompose': 'decompose a Hamiltonian time-1 map and find its periodic orbits',
        'suspend': 'suspend a convex twist map into a Hamiltonian isotopy'
    }
    for command in COMMANDS:
        subparsers.add_parser(command, parents=[common], help=helps[command])
    return parser


# ======== #
# Commands #
# ======== #


def _require_kind(cfg: RunConfig, kinds: Sequence[str], command: str) -> None:
    if cfg.kind not in kinds:
        raise ConfigError('system.kind: {} needs one of {}'.format(command, list(kinds)), key='system.kind',
                          value=cfg.kind)


def _sample_points(rng: np.random.Generator, n: int, p_max: float, count: int = CHECK_POINTS) -> list[PhasePoint]:
    return [PhasePoint(rng.random(n), rng.uniform(-p_max, p_max, n)) for _ in range(count)]


def _check_chain(cfg: RunConfig, chain: MapChain) -> tuple[bool, Sections]:
    grid, tol = build_grid(cfg), cfg.tolerances
    rng = np.random.default_rng(cfg.seed)
    passed, maps = True, []
    for T in chain:
        S = T.S
        periodicity = check_periodicity(S, seed=cfg.seed)
        derivatives = fd_derivative_check(S, tol=tol[ToleranceKeys.DERIVATIVE], seed=cfg.seed)
        T.tc = certify_convexity(S, grid)
        bound = lower_bound_cert(S, T.tc, grid)
        points = _sample_points(rng, S.n, 1.0)
        symplectic = max(check_symplectic(T.tangent(z)) for z in points)
        unit = np.eye(S.n, dtype=int)[0]
        equivariance = max(deck_equivariance_residual(T, z, unit) for z in points)
        ok = derivatives.passed and symplectic <= tol[ToleranceKeys.SYMPLECTIC]
        passed &= ok
        maps.append({
            'label': S.label,
            'passed': ok,
            'periodicity_error': periodicity,
            'derivatives': derivatives,
            'derivative_failures': derivatives.failures,
            'convexity': T.tc,
            'lower_bound': bound,
            'symplectic_residual': symplectic,
            'equivariance_residual': equivariance
        })
    return passed, {'maps': maps}


def _check_hamiltonian(cfg: RunConfig, Hm: HamiltonianModel) -> tuple[bool, Sections]:
    dec, tol = cfg.decompose, cfg.tolerances
    classes = build_classes(cfg, Hm.n)
    bounds = estimate_optical_bounds(Hm, classes, p_max=dec[DecomposeKeys.P_MAX])
    N = choose_N(bounds, dec[DecomposeKeys.SAFETY])
    epsilon = 1.0 / N
    steps = dec[DecomposeKeys.STEPS]
    rng = np.random.default_rng(cfg.seed)
    passed, samples = True, []
    for z in _sample_points(rng, Hm.n, bounds.p_max / 2):
        symplectic = tangent_flow(Hm, z, 0.0, 1.0, N * steps).symplectic_residual
        gronwall = gronwall_check(Hm, z, 0.0, epsilon, bounds.K, steps)
        block = twist_block(Hm, z, epsilon, bounds, steps=steps)
        ok = symplectic <= tol[ToleranceKeys.SYMPLECTIC] and block.within_window
        passed &= ok
        samples.append({
            'point': z,
            'passed': ok,
            'symplectic_residual': symplectic,
            'gronwall_ratio': gronwall.max_ratio,
            'twist_block': {'eig_min': block.eig_min, 'eig_max': block.eig_max, 'bound_lo': block.bound_lo,
                            'bound_hi': block.bound_hi, 'inverse_norm': block.inverse_norm}
        })
    return passed, {'hamiltonian': Hm.label, 'optical_bounds': bounds, 'N': N, 'epsilon': epsilon,
                    'samples': samples}


def cmd_check(cfg: RunConfig, out: str) -> tuple[bool, Sections]:
    """Run the periodicity, derivative, convexity, lower-bound and symplecticity checks."""
    system = build_system(cfg)
    if isinstance(system, HamiltonianModel):
        return _check_hamiltonian(cfg, system)
    return _check_chain(cfg, system)


def _search_orbits(cfg: RunConfig, chain: MapChain, classes: list[OrbitClass],
                   budget: SearchBudget) -> tuple[list[dict[str, Any]], list[dict[str, str]], list]:
    results, skipped, records = [], [], []
    for cls in classes:
        if not cls.prime:
            logger.warning('skipping class %s: not prime', cls)
            skipped.append({'class': str(cls), 'reason': 'not prime: no component of m is coprime to d'})
            continue
        report, found = find_critical_points(ActionEvaluator(chain, cls), budget, seed=cfg.seed,
                                             threads=cfg.threads)
        results.append({
            'class': str(cls),
            'report': report,
            'meets_lyusternik': report.meets_lyusternik,
            'meets_morse': report.meets_morse,
            'orbits': found
        })
        records.extend(found)
    return results, skipped, records


def _write_table(records: list, out: str, name: str = 'orbits.csv') -> None:
    orbit_table(records).to_csv(os.path.join(out, name), index=False)


def cmd_orbits(cfg: RunConfig, out: str) -> tuple[bool, Sections]:
    """Certify the chain, then search every requested prime class."""
    _require_kind(cfg, [SystemKinds.MAP, SystemKinds.CHAIN], 'orbits')
    chain = build_system(cfg)
    grid = build_grid(cfg)
    for T in chain:
        T.tc = certify_convexity(T.S, grid)
    results, skipped, records = _search_orbits(cfg, chain, build_classes(cfg, chain.n), build_budget(cfg))
    _write_table(records, out)
    return True, {'chain': chain, 'classes': results, 'skipped': skipped}


def cmd_decompose(cfg: RunConfig, out: str) -> tuple[bool, Sections]:
    """Decompose the time-1 map, search its orbits and confirm each by direct integration."""
    _require_kind(cfg, [SystemKinds.HAMILTONIAN], 'decompose')
    Hm = build_system(cfg)
    dec, tol = cfg.decompose, cfg.tolerances
    classes = build_classes(cfg, Hm.n)
    bounds = estimate_optical_bounds(Hm, classes, p_max=dec[DecomposeKeys.P_MAX])
    plan = decompose(Hm, bounds, dec[DecomposeKeys.SAFETY], steps=dec[DecomposeKeys.STEPS],
                     check_points=dec[DecomposeKeys.CHECK_POINTS], seed=cfg.seed)
    passed = plan.composition_residual <= tol[ToleranceKeys.ORBIT]
    if not passed:
        logger.warning('composition residual %.3e exceeds %.1e', plan.composition_residual, tol[ToleranceKeys.ORBIT])

    budget = build_budget(cfg, random_starts=dec[DecomposeKeys.RANDOM_STARTS])
    results, skipped, records = _search_orbits(cfg, plan.chain, classes, budget)
    steps = max(4 * dec[DecomposeKeys.STEPS], plan.N * dec[DecomposeKeys.STEPS])
    for result in results:
        checks = []
        for record in result['orbits']:
            z = record.phase_points[0]
            residual = verify_md_point(Hm, z, record.cls, steps)
            direct = flow_fixed_point(Hm, z, record.cls, steps, tol=1e-10)
            passed &= residual <= tol[ToleranceKeys.FLOW_ORBIT]
            checks.append({'point': z, 'md_residual': residual, 'flow_newton_distance': z.distance(direct)})
        result['flow_checks'] = checks
    _write_table(records, out)
    return passed, {'plan': plan, 'classes': results, 'skipped': skipped}


def cmd_suspend(cfg: RunConfig, out: str) -> tuple[bool, Sections]:
    """Certify the target, then integrate the suspension vector field over a grid of points."""
    _require_kind(cfg, [SystemKinds.MAP], 'suspend')
    S = build_system(cfg)[0].S
    # refused before any integration if the target is not convex
    tc = certify_convexity(S, build_grid(cfg))
    fam = suspension_family(S, tc=tc)
    margins = convexity_audit(fam)

    sus = cfg.suspend
    axis_q = np.arange(sus[SuspendKeys.POINTS_PER_AXIS]) / sus[SuspendKeys.POINTS_PER_AXIS]
    axis_p = np.linspace(-sus[SuspendKeys.P_MAX], sus[SuspendKeys.P_MAX], sus[SuspendKeys.POINTS_PER_AXIS])
    points = [PhasePoint(np.array(q), np.array(p)) for q in product(axis_q, repeat=S.n)
              for p in product(axis_p, repeat=S.n)]
    check = verify_suspension(fam, points, sus[SuspendKeys.STEPS], delta_t=sus[SuspendKeys.DELTA_T],
                              richardson=sus[SuspendKeys.RICHARDSON])

    rows = []
    for i, (z, error) in enumerate(zip(check.points, check.errors)):
        row = {'point': i}
        row.update({'q{}'.format(j + 1): x for j, x in enumerate(z.q)})
        row.update({'p{}'.format(j + 1): x for j, x in enumerate(z.p)})
        row['error'] = error
        rows.append(row)
    pd.DataFrame(rows).to_csv(os.path.join(out, 'suspension.csv'), index=False)

    passed = check.max_error <= cfg.tolerances[ToleranceKeys.SUSPENSION]
    return passed, {
        'target': S.label,
        'constants': tc,
        'convexity_audit': [{'t': t, 'margin': margin} for t, margin in margins.items()],
        'max_error': check.max_error,
        'steps': check.steps,
        'delta_t': check.delta_t,
        'richardson': check.richardson
    }


COMMAND_FUNCTIONS: dict[str, Callable[[RunConfig, str], tuple[bool, Sections]]] = {
    'check': cmd_check,
    'orbits': cmd_orbits,
    'decompose': cmd_decompose,
    'suspend': cmd_suspend
}


# ======= #
# Reports #
# ======= #


def _timestamp() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec='seconds')


def write_report(out: str, command: str, doc: dict[str, Any]) -> str:
    """Write `doc` to `<out>/<command>.json` and return the path."""
    path = os.path.join(out, command + '.json')
    with open(path, 'w', encoding='utf-8') as f:
        f.write(encode_document(doc))
    return path


def run(command: str, cfg: RunConfig) -> int:
    """Run `command` on a validated configuration, write its report and return the exit code."""
    out = cfg.out
    os.makedirs(out, exist_ok=True)
    doc = {
        'schema_version': SCHEMA_VERSION,
        'command': command,
        'timestamp': _timestamp(),
        'config': cfg.document
    }
    try:
        passed, sections = COMMAND_FUNCTIONS[command](cfg, out)
    except ConfigError as exc:
        logger.error('%s', exc.message)
        doc.update(status=Status.CONFIG_ERROR, error=exc.as_dict())
        code = ExitCodes.CONFIG
    except CertificationError as exc:
        logger.error('certification failed: %s', exc.message)
        doc.update(status=Status.CERTIFICATION_FAILURE, error=exc.as_dict())
        code = ExitCodes.CERTIFICATION
    except TwistOrbitsError as exc:
        logger.error('numerical failure: %s', exc.message)
        doc.update(status=Status.NUMERIC_FAILURE, error=exc.as_dict())
        code = ExitCodes.NUMERIC
    else:
        doc.update(sections)
        doc['status'] = Status.OK if passed else Status.FAILED
        code = ExitCodes.OK if passed else ExitCodes.CERTIFICATION
    path = write_report(out, command, doc)
    logger.info('%s finished with status %s; report written to %s', command, doc['status'], path)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT)
    try:
        cfg = apply_overrides(load_config(args.config), seed=args.seed, threads=args.threads, tol=args.tol,
                              out=args.out)
    except ConfigError as exc:
        logger.error('%s', exc.message)
        print('twist-orbits: config error: {}'.format(exc.message), file=sys.stderr)
        return ExitCodes.CONFIG
    logger.debug('resolved config: %s', cfg.document[ConfigKeys.SYSTEM])
    return run(args.command, cfg)


if __name__ == '__main__':
    sys.exit(main())
