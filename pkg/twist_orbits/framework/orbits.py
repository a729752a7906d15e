"""
``twist_orbits.framework.orbits``
=================================
Locate and classify critical points of the discrete action.

`minimize_action` finds a minimum, which exists for convex chains.
`find_critical_points` runs Newton's method on the gradient from a grid of
starts plus random starts, deflating known orbits so later starts are pushed
to new ones. Critical points are counted modulo `tau` and `sigma` and
compared with the lower bounds `n + 1` (any critical points) and `2^n` (all
nondegenerate).

"""

from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from math import comb

import numpy as np
import pandas as pd
from scipy.linalg import eigh
from scipy.optimize import minimize

from twist_orbits import (
    CRITICAL_TOL,
    DEDUP_TOL,
    DEFLATION_RADIUS,
    DEGENERACY_TOL,
    ORBIT_TOL,
    RANDOM_STARTS
)
from twist_orbits.errors import IterationCapExceeded, NonPrimeClass, NotCritical
from twist_orbits.framework.action import (
    ActionEvaluator,
    CanonicalForm,
    Configuration,
    OrbitVerification,
    canonicalize,
    config_to_orbit,
    critical_residual,
    nearest_representative,
    same_orbit,
    verify_orbit
)
from twist_orbits.framework.core import OrbitClass, PhasePoint

logger = logging.getLogger(__name__)

DEGENERATE = 'degenerate'

type MorseIndex = int | str


@dataclass(frozen=True, kw_only=True, slots=True)
class SearchBudget:
    """Multistart settings: `grid_per_axis^n * d` grid starts and `random_starts` random ones."""

    grid_per_axis: int = 3
    random_starts: int = RANDOM_STARTS
    max_iter: int = 200
    max_saddle_escapes: int = 10
    batch_size: int = 8
    deflation_radius: float = DEFLATION_RADIUS
    degeneracy_tol: float = DEGENERACY_TOL
    dedup_tol: float = DEDUP_TOL
    critical_tol: float = CRITICAL_TOL


@dataclass(frozen=True, kw_only=True, slots=True)
class OrbitRecord:
    """A certified periodic orbit."""

    canonical: CanonicalForm
    config: Configuration
    phase_points: list[PhasePoint]
    action: float
    residual: float
    morse_index: MorseIndex
    hessian_min_abs_eig: float
    verification: OrbitVerification | None = None

    @property
    def cls(self) -> OrbitClass:
        return self.config.cls

    @property
    def degenerate(self) -> bool:
        return self.morse_index == DEGENERATE


@dataclass(kw_only=True, slots=True)
class OrbitCountReport:
    """
    Number of distinct orbits found against the topological lower bounds.

    Degenerate critical points with the same action lie on one critical
    manifold as far as the search can tell, so `found` counts each such
    level once. `critical_points` is the number of points located.

    """

    cls: OrbitClass
    found: int
    lower_bound_lyusternik: int
    lower_bound_morse: int
    all_nondegenerate: bool
    census: dict[int, int] = field(default_factory=dict)
    starts: int = 0
    critical_points: int = 0
    degenerate_levels: int = 0

    @property
    def meets_lyusternik(self) -> bool:
        return self.found >= self.lower_bound_lyusternik

    @property
    def meets_morse(self) -> bool:
        return self.all_nondegenerate and self.found >= self.lower_bound_morse

    @property
    def census_check(self) -> bool | None:
        """`census[k] >= C(n, k)` for every `k`, or `None` when some orbit is degenerate."""
        if not self.all_nondegenerate:
            return None
        n = self.cls.n
        return all(self.census.get(k, 0) >= comb(n, k) for k in range(n + 1))


def hessian_spectrum(E: ActionEvaluator, c: Configuration | np.ndarray) -> np.ndarray:
    return eigh(E.hessian(c), eigvals_only=True)


def _classify(eigvals: np.ndarray, degeneracy_tol: float) -> tuple[MorseIndex, float]:
    magnitudes = np.abs(eigvals)
    threshold = degeneracy_tol * magnitudes.max()
    if magnitudes.min() <= threshold:
        return DEGENERATE, float(magnitudes.min())
    return int(np.sum(eigvals < -threshold)), float(magnitudes.min())


def morse_index(E: ActionEvaluator, c: Configuration, degeneracy_tol: float = DEGENERACY_TOL,
                tol: float = ORBIT_TOL) -> MorseIndex:
    """
    Number of negative Hessian eigenvalues at a critical configuration, or
    ``'degenerate'`` if some eigenvalue is within `degeneracy_tol` (relative
    to the largest one) of zero.

    """
    residual = critical_residual(E, c)
    if residual > tol:
        raise NotCritical('Morse index requested away from a critical point', residual=residual)
    return _classify(hessian_spectrum(E, c), degeneracy_tol)[0]


def _polish(E: ActionEvaluator, x: np.ndarray, tol: float, max_iter: int = 50) -> np.ndarray:
    """Undeflated Newton on the gradient, least squares for singular Hessians."""
    for _ in range(max_iter):
        if critical_residual(E, x) < tol:
            return x
        x = x - np.linalg.lstsq(E.hessian(x), E.gradient(x), rcond=None)[0]
    if critical_residual(E, x) < tol:
        return x
    raise IterationCapExceeded('Newton polish did not reach residual {:.1e}'.format(tol),
                               residual=critical_residual(E, x))


def _record(E: ActionEvaluator, x: np.ndarray, budget: SearchBudget) -> OrbitRecord:
    c = E.configuration(x.reshape(E.size, E.n))
    index, min_abs = _classify(hessian_spectrum(E, c), budget.degeneracy_tol)
    orbit = config_to_orbit(E, c)
    verification = verify_orbit(E.maps, orbit, E.cls) if E.maps is not None else None
    return OrbitRecord(
        canonical=canonicalize(c),
        config=c,
        phase_points=orbit,
        action=E.value(c),
        residual=critical_residual(E, c),
        morse_index=index,
        hessian_min_abs_eig=min_abs,
        verification=verification
    )


def _leave_saddle(E: ActionEvaluator, x: np.ndarray, step: float = 0.1) -> np.ndarray:
    """Step from a saddle along the eigenvector of the most negative Hessian eigenvalue."""
    _, vectors = eigh(E.hessian(x))
    direction = vectors[:, 0]
    value = E.value(x)
    while step > 1e-8:
        for trial in (x + step * direction, x - step * direction):
            if E.value(trial) < value:
                return trial
        step /= 2
    raise IterationCapExceeded('no descent direction found at a saddle of the action', action=value)


def minimize_action(E: ActionEvaluator, start: Configuration | np.ndarray,
                    budget: SearchBudget | None = None) -> OrbitRecord:
    """
    Minimise the action by BFGS from `start` and polish the minimum with
    Newton's method.

    The returned record has Morse index 0 or is degenerate. When the polish
    lands on a saddle the search restarts from a point just off it along the
    most negative curvature direction, at most `budget.max_saddle_escapes`
    times.

    """
    budget = budget or SearchBudget()
    x = start.flat if isinstance(start, Configuration) else np.asarray(start, dtype=float).ravel()
    for escape in range(budget.max_saddle_escapes + 1):
        result = minimize(E.value, x, jac=E.gradient, method='BFGS', options={'gtol': 1e-9, 'maxiter': 5000})
        logger.debug('BFGS finished after %d iterations: %s', result.nit, result.message)
        x = _polish(E, result.x, budget.critical_tol)
        record = _record(E, x, budget)
        if record.degenerate or record.morse_index == 0:
            logger.info('minimum of %s: W=%.12g index=%s', E, record.action, record.morse_index)
            return record
        logger.debug('saddle of %s with index %d after %d escapes', E, record.morse_index, escape)
        x = _leave_saddle(E, x)
    raise IterationCapExceeded('minimisation still at a saddle after {} escapes'.format(budget.max_saddle_escapes),
                               action=record.action, morse_index=record.morse_index)


def grid_starts(E: ActionEvaluator, per_axis: int = 3) -> list[np.ndarray]:
    """Uniform rotations through `v` on a `per_axis^n` grid, each offset `d` times along the diagonal."""
    cls, size = E.cls, E.size
    ramp = np.arange(size)[:, None] * cls.m_vector / size
    starts = []
    for v in product(np.arange(per_axis) / per_axis, repeat=E.n):
        for j in range(cls.d):
            starts.append((np.asarray(v) + j / (per_axis * cls.d) + ramp).ravel())
    return starts


def random_starts(E: ActionEvaluator, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Random uniform rotations with gap noise of the size of the mean gap."""
    cls, size = E.cls, E.size
    ramp = np.arange(size)[:, None] * cls.m_vector / size
    return [(rng.random(E.n) + ramp + rng.normal(scale=0.25 / size, size=(size, E.n))).ravel()
            for _ in range(count)]


def _deflated_newton(E: ActionEvaluator, x: np.ndarray, known: list[np.ndarray],
                     budget: SearchBudget) -> np.ndarray | None:
    """
    Newton on the gradient, deflated by `prod_j (1 + r0^2 / rho_j^2)` with
    `rho_j` the distance to the nearest translate or shift of known orbit `j`.

    Returns a polished critical point or `None` if the start is abandoned.

    """
    r0_sq = budget.deflation_radius ** 2
    shape = (E.size, E.n)

    def deflation(y: np.ndarray) -> tuple[float, np.ndarray]:
        factor, grad_log = 1.0, np.zeros_like(y)
        for points in known:
            diff = y - nearest_representative(y.reshape(shape), points, E.cls).ravel()
            rho_sq = float(diff @ diff)
            if rho_sq == 0.0:
                return np.inf, grad_log
            factor *= 1 + r0_sq / rho_sq
            grad_log -= 2 * r0_sq * diff / (rho_sq * (rho_sq + r0_sq))
        return factor, grad_log

    for _ in range(budget.max_iter):
        F = E.gradient(x)
        norm_F = float(np.linalg.norm(F))
        if critical_residual(E, x) < budget.critical_tol:
            break
        factor, grad_log = deflation(x)
        if not np.isfinite(factor):
            return None
        delta = -np.linalg.lstsq(E.hessian(x), F, rcond=None)[0]
        denominator = 1 - float(grad_log @ delta)
        step = delta / denominator if abs(denominator) > 1e-12 else delta
        merit = factor * norm_F
        lam = 1.0
        while lam > 1e-8:
            trial = x + lam * step
            trial_factor, _ = deflation(trial)
            trial_merit = trial_factor * float(np.linalg.norm(E.gradient(trial)))
            if np.isfinite(trial_merit) and trial_merit < merit:
                break
            lam /= 2
        else:
            return None
        x = trial
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > 1e6:
            return None
    else:
        return None
    try:
        return _polish(E, x, budget.critical_tol)
    except IterationCapExceeded:
        return None


def find_critical_points(E: ActionEvaluator, budget: SearchBudget | None = None, *, seed: int = 0,
                         threads: int = 1) -> tuple[OrbitCountReport, list[OrbitRecord]]:
    """
    Multistart deflated Newton search for the critical points of the action of
    a prime class. Returns the count report and the records sorted by action.

    """
    cls = E.cls
    if not cls.prime:
        raise NonPrimeClass('class {} is not prime: no component of m is coprime to d'.format(cls), m=cls.m, d=cls.d)
    budget = budget or SearchBudget()
    rng = np.random.default_rng(seed)
    starts = grid_starts(E, budget.grid_per_axis) + random_starts(E, budget.random_starts, rng)
    known: list[np.ndarray] = []
    records: list[OrbitRecord] = []

    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        for begin in range(0, len(starts), budget.batch_size):
            snapshot = list(known)
            batch = starts[begin:begin + budget.batch_size]
            results = list(pool.map(lambda x: _deflated_newton(E, x, snapshot, budget), batch))
            for x in results:
                if x is None:
                    continue
                points = x.reshape(E.size, E.n)
                if any(same_orbit(points, other, cls, budget.dedup_tol) for other in known):
                    continue
                record = _record(E, x, budget)
                if record.verification is not None and not record.verification.passed():
                    logger.warning('dropping critical point of %s failing orbit verification: %s', cls,
                                   record.verification)
                    continue
                known.append(points)
                records.append(record)
                logger.debug('new critical point of %s: W=%.12g index=%s', cls, record.action, record.morse_index)

    records.sort(key=lambda r: r.action)
    census = Counter(r.morse_index for r in records if not r.degenerate)
    levels = critical_levels([r for r in records if r.degenerate], budget.dedup_tol)
    report = OrbitCountReport(
        cls=cls,
        found=sum(census.values()) + len(levels),
        critical_points=len(records),
        degenerate_levels=len(levels),
        lower_bound_lyusternik=cls.n + 1,
        lower_bound_morse=2 ** cls.n,
        all_nondegenerate=bool(records) and not any(r.degenerate for r in records),
        census=dict(sorted(census.items())),
        starts=len(starts)
    )
    logger.info('class %s: %d orbits from %d critical points and %d starts (bounds %d, %d)', cls, report.found,
                report.critical_points, report.starts, report.lower_bound_lyusternik, report.lower_bound_morse)
    if not report.all_nondegenerate:
        logger.warning('class %s has %d degenerate critical points on %d critical levels; the Morse bound '
                       'does not apply', cls, report.critical_points - sum(census.values()), len(levels))
    return report, records


def critical_levels(records: list[OrbitRecord], tol: float = DEDUP_TOL) -> list[float]:
    """Distinct actions of `records`, values within `tol` of the previous level merged."""
    levels: list[float] = []
    for action in sorted(r.action for r in records):
        if not levels or action - levels[-1] > tol:
            levels.append(action)
    return levels


def distinct(a: OrbitRecord, b: OrbitRecord, tol: float = DEDUP_TOL) -> bool:
    """`True` unless the two records are the same orbit modulo `tau` and `sigma`."""
    if a.cls != b.cls:
        raise ValueError('records of different classes:', (str(a.cls), str(b.cls)))
    return not same_orbit(a.config.points, b.config.points, a.cls, tol)


def morse_census(records: list[OrbitRecord]) -> dict[MorseIndex, int]:
    return dict(Counter(r.morse_index for r in records))


def orbit_table(records: list[OrbitRecord]) -> pd.DataFrame:
    """One row per phase point of each orbit, closing point included, for plotting."""
    rows = []
    for i, record in enumerate(records):
        for k, z in enumerate(record.phase_points):
            row = {'orbit': i, 'class': str(record.cls), 'k': k}
            row.update({'q{}'.format(j + 1): x for j, x in enumerate(z.q)})
            row.update({'p{}'.format(j + 1): x for j, x in enumerate(z.p)})
            rows.append(row)
    return pd.DataFrame(rows)
