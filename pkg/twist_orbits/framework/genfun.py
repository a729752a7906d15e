"""
``twist_orbits.framework.genfun``
=================================
Generating functions `S(q, Q)` of twist maps, the built-in catalog, and the
sampled certification of periodicity, derivatives, convexity and the
quadratic lower bound.

A generating function determines its map through `p = -d1 S(q, Q)` and
`P = d2 S(q, Q)`. The convexity condition asks for a constant `a > 0` with
`<d12 S(q, Q) v, v> <= -a |v|^2` for all `(q, Q, v)`.

"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Iterator

import numpy as np
from scipy.optimize import minimize

from twist_orbits import DISPLACEMENT_BOX, GRID_PER_AXIS, GRID_RANDOM
from twist_orbits.errors import (
    BoundViolation,
    ConvexityViolation,
    InternalInconsistency,
    PeriodicityViolation
)
from twist_orbits.framework.core import PhasePoint
from twist_orbits.framework.utils import (
    Matrix,
    MatrixField,
    ScalarField,
    Vector,
    VectorField,
    fd_jacobian,
    relative_error,
    sym
)

logger = logging.getLogger(__name__)

FOUR_PI_SQ = 4 * np.pi ** 2


@dataclass(eq=False, kw_only=True, slots=True)
class GeneratingFunction:
    """
    Evaluators for `S(q, Q)` and its first and second partial derivatives.

    `d12(q, Q)[i, j]` is the mixed partial with respect to `q_i` and `Q_j`.

    """

    n: int
    label: str
    eval: ScalarField
    d1: VectorField
    d2: VectorField
    d11: MatrixField
    d12: MatrixField
    d22: MatrixField
    normalized: bool = False
    params: dict[str, Any] = field(default_factory=dict)

    def __call__(self, q: Vector, Q: Vector) -> float:
        return self.eval(q, Q)

    def __repr__(self) -> str:
        return type(self).__name__ + '({}, n={})'.format(self.label, self.n)


@dataclass(eq=False, frozen=True, slots=True)
class FourierPotential:
    """
    A 1-periodic potential `V(q) = sum_j c_j cos(2 pi <k_j, q> + phi_j)`.

    """

    wavevectors: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray | None = None

    def __post_init__(self) -> None:
        k = np.atleast_2d(np.asarray(self.wavevectors, dtype=float))
        c = np.atleast_1d(np.asarray(self.amplitudes, dtype=float))
        if k.shape[0] != c.shape[0] or np.any(k != np.round(k)):
            raise ValueError('wavevectors must be integer rows matching the amplitudes:', self.wavevectors)
        phi = np.zeros_like(c) if self.phases is None else np.atleast_1d(np.asarray(self.phases, dtype=float))
        object.__setattr__(self, 'wavevectors', k)
        object.__setattr__(self, 'amplitudes', c)
        object.__setattr__(self, 'phases', phi)

    @property
    def n(self) -> int:
        return self.wavevectors.shape[1]

    def _theta(self, q: Vector) -> np.ndarray:
        return 2 * np.pi * (self.wavevectors @ q) + self.phases

    def __call__(self, q: Vector) -> float:
        return float(self.amplitudes @ np.cos(self._theta(q)))

    def gradient(self, q: Vector) -> Vector:
        weights = -2 * np.pi * self.amplitudes * np.sin(self._theta(q))
        return weights @ self.wavevectors

    def hessian(self, q: Vector) -> Matrix:
        weights = -FOUR_PI_SQ * self.amplitudes * np.cos(self._theta(q))
        return (self.wavevectors.T * weights) @ self.wavevectors

    def scaled(self, factor: float) -> FourierPotential:
        return FourierPotential(self.wavevectors, factor * self.amplitudes, self.phases)

    @classmethod
    def zero(cls, n: int) -> FourierPotential:
        return cls(np.zeros((1, n)), np.zeros(1))

    @classmethod
    def standard(cls, s: float, n: int = 1) -> FourierPotential:
        """`V(q) = s/(4 pi^2) sum_i cos(2 pi q_i)`."""
        return cls(np.eye(n), np.full(n, s / FOUR_PI_SQ))

    @classmethod
    def froeschle(cls, K1: float, K2: float, lam: float) -> FourierPotential:
        """`V(q) = (K1 cos 2 pi q1 + K2 cos 2 pi q2 + lam cos 2 pi (q1 + q2)) / (2 pi)^2`."""
        return cls([[1, 0], [0, 1], [1, 1]], np.array([K1, K2, lam]) / FOUR_PI_SQ)


@dataclass(frozen=True, kw_only=True, slots=True)
class SamplingGrid:
    """
    Sample pairs `(q, Q)` for certification: a regular grid of base points in
    `[0, 1)^n` times a regular grid of displacements `Q - q` in
    `[-box, box]^n`, plus uniformly random pairs.

    """

    per_axis: int = GRID_PER_AXIS
    delta_per_axis: int = 5
    random: int = GRID_RANDOM
    box: float = DISPLACEMENT_BOX
    seed: int = 0
    max_grid: int = 4096

    def base_points(self, n: int) -> np.ndarray:
        k = max(self.per_axis, 1)
        while k > 1 and k ** n > self.max_grid:
            k -= 1
        axes = [np.arange(k) / k] * n
        return np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, n)

    def displacements(self, n: int) -> np.ndarray:
        if self.delta_per_axis < 1:
            return np.zeros((0, n))
        axis = np.linspace(-self.box, self.box, self.delta_per_axis) if self.delta_per_axis > 1 else np.zeros(1)
        return np.array(list(product(axis, repeat=n)))

    def pairs(self, n: int) -> Iterator[tuple[Vector, Vector]]:
        """Yield the grid pairs first, then the random pairs."""
        for q in self.base_points(n):
            for delta in self.displacements(n):
                yield q, q + delta
        rng = np.random.default_rng(self.seed)
        for _ in range(self.random):
            q = rng.random(n)
            yield q, q + rng.uniform(-self.box, self.box, n)

    def describe(self, n: int) -> dict[str, Any]:
        return {'q': [[0.0, 1.0]] * n, 'displacement_box': self.box,
                'per_axis': self.per_axis, 'delta_per_axis': self.delta_per_axis,
                'random': self.random, 'seed': self.seed}


@dataclass(frozen=True, kw_only=True, slots=True)
class TwistConstants:
    """Sampled convexity margin `a` and bound `kprime` on `|(d12 S)^-1|`."""

    a: float
    kprime: float
    sample_count: int
    certified_box: dict[str, Any]


@dataclass(frozen=True, kw_only=True, slots=True)
class LowerBoundCert:
    """Constants of `S(q, Q) >= alpha - beta |Q - q| + gamma |Q - q|^2`."""

    alpha: float
    beta: float
    gamma: float
    radius: float
    samples: int

    def bound(self, r: float) -> float:
        return self.alpha - self.beta * r + self.gamma * r ** 2


@dataclass(frozen=True, kw_only=True, slots=True)
class DerivativeReport:
    """Largest relative errors of analytic derivatives against central differences."""

    max_errors: dict[str, float]
    tol: float
    samples: int
    h: float

    @property
    def passed(self) -> bool:
        return all(err < self.tol for err in self.max_errors.values())

    @property
    def failures(self) -> list[str]:
        return [key for key, err in self.max_errors.items() if err >= self.tol]


# ======== #
# Families #
# ======== #


def _symmetric_inverse(A) -> tuple[Matrix, Matrix]:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError('A must be a square matrix:', A)
    if not np.allclose(A, A.T, rtol=0, atol=1e-12):
        raise ValueError('A must be symmetric:', A)
    if np.linalg.cond(A) > 1e12:
        raise ValueError('A must be nonsingular:', A)
    return A, np.linalg.inv(A)


def integrable_genfun(A) -> GeneratingFunction:
    """
    The completely integrable family `S0(q, Q) = <A^-1 (Q - q), Q - q> / 2`,
    generating `(q, p) -> (q + A p, p)`.

    """
    A, Ainv = _symmetric_inverse(A)
    n = A.shape[0]

    def eval_(q, Q):
        delta = Q - q
        return 0.5 * float(delta @ Ainv @ delta)

    return GeneratingFunction(
        n=n,
        label='integrable',
        eval=eval_,
        d1=lambda q, Q: -Ainv @ (Q - q),
        d2=lambda q, Q: Ainv @ (Q - q),
        d11=lambda q, Q: Ainv.copy(),
        d12=lambda q, Q: -Ainv,
        d22=lambda q, Q: Ainv.copy(),
        normalized=True,
        params={'A': A.tolist()}
    )


def check_periodicity(S: GeneratingFunction, samples: int = 64, seed: int = 0, tol: float = 1e-12) -> float:
    """
    Check `S(q + m, Q + m) = S(q, Q)` on random samples and integer shifts.

    Returns the largest discrepancy and raises `PeriodicityViolation` when it
    exceeds `tol`.

    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        q = rng.random(S.n)
        Q = q + rng.uniform(-2, 2, S.n)
        m = rng.integers(-3, 4, S.n).astype(float)
        base = S.eval(q, Q)
        err = abs(S.eval(q + m, Q + m) - base) / max(1.0, abs(base))
        worst = max(worst, err)
        if err > tol:
            raise PeriodicityViolation('{} is not periodic'.format(S.label), q=q, Q=Q, m=m, error=err)
    if S.normalized and abs(S.eval(np.zeros(S.n), np.zeros(S.n))) > tol:
        raise PeriodicityViolation('{} claims S(0, 0) = 0'.format(S.label), value=S.eval(np.zeros(S.n), np.zeros(S.n)))
    return worst


def standard_genfun(A, V: FourierPotential, *, label: str = 'standard') -> GeneratingFunction:
    """
    The standard family `S(q, Q) = S0(q, Q) + V(q)` for a periodic potential
    `V`. The mixed partial is `-A^-1` everywhere.

    """
    A, Ainv = _symmetric_inverse(A)
    n = A.shape[0]
    if V.n != n:
        raise ValueError('potential dimension does not match A:', V.n)

    def eval_(q, Q):
        delta = Q - q
        return 0.5 * float(delta @ Ainv @ delta) + V(q)

    S = GeneratingFunction(
        n=n,
        label=label,
        eval=eval_,
        d1=lambda q, Q: -Ainv @ (Q - q) + V.gradient(q),
        d2=lambda q, Q: Ainv @ (Q - q),
        d11=lambda q, Q: Ainv + V.hessian(q),
        d12=lambda q, Q: -Ainv,
        d22=lambda q, Q: Ainv.copy(),
        normalized=abs(V(np.zeros(n))) == 0.0,
        params={'A': A.tolist()}
    )
    check_periodicity(S)
    return S


def standard_family_map(A, V: FourierPotential, z: PhasePoint) -> PhasePoint:
    """Closed form of the standard-family map: `P = p + grad V(q)`, `Q = q + A P`."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    P = z.p + V.gradient(z.q)
    return PhasePoint(z.q + A @ P, P)


def catalog_genfun(name: str, params: dict[str, Any] | None = None) -> GeneratingFunction:
    """
    Return the catalog family `name` built with `params`.

    - ``integrable``: `A` (matrix or scalar, default 1)
    - ``standard``: `s` (default 1), `A` (default 1); `V = s/(4 pi^2) sum cos(2 pi q_i)`
    - ``froeschle``: `K1`, `K2`, `lam` (defaults 0.1, 0.1, 0.05) with `A = I`
    - ``indefinite``: the quadratic family with `A = diag(1, -1)`

    """
    params = dict(params or {})
    match name:
        case 'integrable':
            S = integrable_genfun(params.get('A', 1.0))
        case 'standard':
            A = np.atleast_2d(np.asarray(params.get('A', 1.0), dtype=float))
            s = float(params.get('s', 1.0))
            S = standard_genfun(A, FourierPotential.standard(s, A.shape[0]), label='standard(s={:g})'.format(s))
            S.params['s'] = s
        case 'froeschle':
            K1, K2, lam = (float(params.get(key, default)) for key, default in [('K1', 0.1), ('K2', 0.1), ('lam', 0.05)])
            S = standard_genfun(np.eye(2), FourierPotential.froeschle(K1, K2, lam),
                                label='froeschle(K1={:g},K2={:g},lam={:g})'.format(K1, K2, lam))
            S.params.update(K1=K1, K2=K2, lam=lam)
        case 'indefinite':
            S = integrable_genfun(np.diag([1.0, -1.0]))
            S.label = 'indefinite'
        case _:
            raise ValueError('unknown generating-function family:', name)
    logger.debug('built generating function %s', S)
    return S


# ============= #
# Certification #
# ============= #


def certify_convexity(S: GeneratingFunction, grid: SamplingGrid | None = None) -> TwistConstants:
    """
    Certify the convexity condition on the samples of `grid`.

    `a` is the smallest eigenvalue of `-sym(d12 S)` over the samples and
    `kprime` the largest operator norm of `(d12 S)^-1`. Raises
    `ConvexityViolation` at the first sample with a non-positive margin.

    """
    grid = grid or SamplingGrid()
    a = np.inf
    smallest_singular = np.inf
    count = 0
    for q, Q in grid.pairs(S.n):
        M = np.asarray(S.d12(q, Q), dtype=float)
        eigvals, eigvecs = np.linalg.eigh(-sym(M))
        if not eigvals[0] > 0:
            raise ConvexityViolation(
                '{} fails the convexity condition'.format(S.label), q=q, Q=Q, v=eigvecs[:, 0], eigenvalue=eigvals[0]
            )
        a = min(a, eigvals[0])
        smallest_singular = min(smallest_singular, np.linalg.svd(M, compute_uv=False)[-1])
        count += 1
    tc = TwistConstants(a=float(a), kprime=float(1 / smallest_singular), sample_count=count,
                        certified_box=grid.describe(S.n))
    if tc.a * tc.kprime > 1 + 1e-9:
        raise InternalInconsistency('convexity margin exceeds the mixed-partial bound', a=tc.a, kprime=tc.kprime)
    logger.info('certified %s: a=%.6g kprime=%.6g on %d samples', S.label, tc.a, tc.kprime, count)
    return tc


def lower_bound_cert(S: GeneratingFunction, tc: TwistConstants, grid: SamplingGrid | None = None,
                     tol: float = 1e-9) -> LowerBoundCert:
    """
    Build and verify `S(q, Q) >= alpha - beta |Q - q| + gamma |Q - q|^2` with
    `alpha = min S(q, q)`, `beta = max |d2 S(q, q)|` and `gamma = a/2`.

    Both extrema are taken over the base grid and then refined by local
    optimisation. The bound is verified on random pairs with displacements up
    to the radius beyond which the quadratic term dominates.

    """
    grid = grid or SamplingGrid()
    diagonal_value = lambda q: S.eval(q, q)
    diagonal_slope = lambda q: -float(np.linalg.norm(S.d2(q, q)))

    base = grid.base_points(S.n)
    values = np.array([diagonal_value(q) for q in base])
    slopes = np.array([diagonal_slope(q) for q in base])
    alpha_start, beta_start = base[values.argmin()], base[slopes.argmin()]
    alpha = min(values.min(), minimize(diagonal_value, alpha_start,
                                       jac=lambda q: S.d1(q, q) + S.d2(q, q), method='BFGS').fun)
    beta = abs(min(slopes.min(), minimize(diagonal_slope, beta_start, method='Nelder-Mead').fun))
    gamma = tc.a / 2

    radius = max(grid.box, (beta + np.sqrt(beta ** 2 + 2 * gamma * abs(alpha))) / gamma)
    cert = LowerBoundCert(alpha=float(alpha), beta=float(beta), gamma=float(gamma), radius=float(radius),
                          samples=grid.random)
    rng = np.random.default_rng(grid.seed + 1)
    for _ in range(grid.random):
        q = rng.random(S.n)
        Q = q + rng.uniform(-radius, radius, S.n)
        value = S.eval(q, Q)
        bound = cert.bound(float(np.linalg.norm(Q - q)))
        if value < bound - tol * max(1.0, abs(value)):
            raise BoundViolation('{} violates its quadratic lower bound'.format(S.label),
                                 q=q, Q=Q, value=value, bound=bound)
    logger.info('lower bound for %s: alpha=%.6g beta=%.6g gamma=%.6g', S.label, cert.alpha, cert.beta, cert.gamma)
    return cert


def fd_derivative_check(S: GeneratingFunction, samples: int = 100, h: float = 1e-5, *, tol: float = 1e-6,
                        seed: int = 0) -> DerivativeReport:
    """Compare the analytic derivatives of `S` with central differences of `S`, `d1` and `d2`."""
    if h <= 0:
        raise ValueError('finite-difference step must be positive:', h)
    rng = np.random.default_rng(seed)
    errors = dict.fromkeys(['d1', 'd2', 'd11', 'd12', 'd22', 'd21'], 0.0)
    for _ in range(samples):
        q = rng.random(S.n)
        Q = q + rng.uniform(-1, 1, S.n)
        checks = {
            'd1': (S.d1(q, Q), fd_jacobian(lambda x: S.eval(x, Q), q, h)),
            'd2': (S.d2(q, Q), fd_jacobian(lambda x: S.eval(q, x), Q, h)),
            'd11': (S.d11(q, Q), fd_jacobian(lambda x: S.d1(x, Q), q, h)),
            'd12': (S.d12(q, Q), fd_jacobian(lambda x: S.d1(q, x), Q, h)),
            'd22': (S.d22(q, Q), fd_jacobian(lambda x: S.d2(q, x), Q, h)),
            'd21': (np.transpose(S.d12(q, Q)), fd_jacobian(lambda x: S.d2(x, Q), q, h))
        }
        for key, (analytic, approx) in checks.items():
            errors[key] = max(errors[key], relative_error(analytic, approx))
    report = DerivativeReport(max_errors=errors, tol=tol, samples=samples, h=h)
    if not report.passed:
        logger.warning('derivative check failed for %s: %s', S.label, report.failures)
    return report
