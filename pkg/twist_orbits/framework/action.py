"""
``twist_orbits.framework.action``
=================================
The discrete action of `(m, d)`-configurations of a chain of generating
functions `S_1, ..., S_N`.

A configuration is the finite list `q_0, ..., q_{dN-1}` of cover points; the
sequence continues by `q_{k+dN} = q_k + m`. Segment `k` uses the generating
function `S_{k mod N}` and

    W = sum_k S_k(q_k, q_{k+1}),   q_dN = q_0 + m.

Critical configurations are exactly the `(m, d)`-orbits of the chain, with
`p_k = -d1 S_k(q_k, q_{k+1})`. Configurations are counted modulo integer
translations `tau` and the shift `sigma` of the sequence by `N` places.

"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from twist_orbits import ORBIT_TOL
from twist_orbits.errors import DimensionMismatch, NotCritical
from twist_orbits.framework.core import (
    OrbitClass,
    PhasePoint,
    deck_translate,
    reduce_to_torus,
    torus_distance
)
from twist_orbits.framework.genfun import GeneratingFunction
from twist_orbits.framework.twistmap import MapChain
from twist_orbits.framework.utils import Matrix, Vector

logger = logging.getLogger(__name__)

LEX_TOL = 1e-9


@dataclass(eq=False, kw_only=True, slots=True)
class Configuration:
    """The `dN` free points of an `(m, d)`-sequence for a chain of `N` generating functions."""

    points: np.ndarray
    cls: OrbitClass
    chain: tuple[GeneratingFunction, ...]

    def __post_init__(self) -> None:
        self.chain = tuple(self.chain)
        self.points = np.array(self.points, dtype=float, ndmin=2).reshape(-1, self.cls.n)
        if self.points.shape[0] != self.cls.d * len(self.chain):
            raise DimensionMismatch('expected {} points for class {} and a chain of {}, got {}'.format(
                self.cls.d * len(self.chain), self.cls, len(self.chain), self.points.shape[0]))

    @property
    def N(self) -> int:
        return len(self.chain)

    @property
    def flat(self) -> Vector:
        return self.points.ravel().copy()

    def translated(self, m: Sequence[int]) -> Configuration:
        """Return `tau_m` of the configuration."""
        return Configuration(points=self.points + np.asarray(m, dtype=float), cls=self.cls, chain=self.chain)

    def shifted(self, j: int = 1) -> Configuration:
        """Return `sigma^j`, the sequence read from position `j N`."""
        return Configuration(points=shift_points(self.points, self.cls, j), cls=self.cls, chain=self.chain)


@dataclass(frozen=True, kw_only=True, slots=True)
class CanonicalForm:
    """Representative of a configuration modulo `tau` and `sigma`."""

    v: Vector
    t: np.ndarray
    shift_index: int


@dataclass(frozen=True, kw_only=True, slots=True)
class OrbitVerification:
    step_mismatch: float
    closure: float

    def passed(self, tol: float = ORBIT_TOL) -> bool:
        return self.step_mismatch < tol and self.closure < tol


class ActionEvaluator:
    """Value, gradient and Hessian of the action for one chain and one orbit class."""

    __slots__ = ['chain', 'cls', 'N', 'size', 'maps']

    def __init__(self, chain: MapChain | Sequence[GeneratingFunction], cls: OrbitClass) -> None:
        genfuns = chain.genfuns if isinstance(chain, MapChain) else list(chain)
        if not genfuns:
            raise ValueError('an action needs at least one generating function:', genfuns)
        if any(S.n != cls.n for S in genfuns):
            raise DimensionMismatch('class {} does not match the chain dimension {}'.format(cls, genfuns[0].n))
        self.chain = tuple(genfuns)
        self.maps = chain if isinstance(chain, MapChain) else None
        self.cls = cls
        self.N = len(genfuns)
        self.size = cls.d * self.N

    @property
    def n(self) -> int:
        return self.cls.n

    def configuration(self, points) -> Configuration:
        return Configuration(points=points, cls=self.cls, chain=self.chain)

    def _points(self, c: Configuration | np.ndarray) -> np.ndarray:
        if isinstance(c, Configuration):
            return c.points
        return np.asarray(c, dtype=float).reshape(self.size, self.n)

    def segments(self, c: Configuration | np.ndarray) -> Iterator[tuple[int, GeneratingFunction, Vector, Vector]]:
        """Yield `(k, S_k, q_k, q_{k+1})` with the wrapped last endpoint `q_0 + m`."""
        points = self._points(c)
        closing = points[0] + self.cls.m_vector
        for k in range(self.size):
            following = points[k + 1] if k + 1 < self.size else closing
            yield k, self.chain[k % self.N], points[k], following

    def value(self, c: Configuration | np.ndarray) -> float:
        return float(sum(S.eval(q, Q) for _, S, q, Q in self.segments(c)))

    def gradient(self, c: Configuration | np.ndarray) -> Vector:
        grad = np.zeros((self.size, self.n))
        for k, S, q, Q in self.segments(c):
            grad[k] += S.d1(q, Q)
            grad[(k + 1) % self.size] += S.d2(q, Q)
        return grad.ravel()

    def hessian(self, c: Configuration | np.ndarray) -> Matrix:
        n = self.n
        hess = np.zeros((self.size * n, self.size * n))
        block = lambda i, j: (slice(i * n, (i + 1) * n), slice(j * n, (j + 1) * n))
        for k, S, q, Q in self.segments(c):
            nxt = (k + 1) % self.size
            S12 = np.asarray(S.d12(q, Q))
            hess[block(k, k)] += S.d11(q, Q)
            hess[block(nxt, nxt)] += S.d22(q, Q)
            hess[block(k, nxt)] += S12
            hess[block(nxt, k)] += S12.T
        return hess

    def momenta(self, c: Configuration | np.ndarray) -> np.ndarray:
        """Return `p_k = -d1 S_k(q_k, q_{k+1})` for every point."""
        return np.array([-S.d1(q, Q) for _, S, q, Q in self.segments(c)])

    def __repr__(self) -> str:
        return type(self).__name__ + '({}, class {})'.format([S.label for S in self.chain], self.cls)


def action_value(E: ActionEvaluator, c: Configuration) -> float:
    """`W = sum_k S_k(q_k, q_{k+1})`."""
    return E.value(c)


def action_gradient(E: ActionEvaluator, c: Configuration) -> Vector:
    """Block `k` is `d2 S_{k-1}(q_{k-1}, q_k) + d1 S_k(q_k, q_{k+1})`."""
    return E.gradient(c)


def action_hessian(E: ActionEvaluator, c: Configuration) -> Matrix:
    """Dense block-cyclic-tridiagonal Hessian of the action."""
    return E.hessian(c)


def critical_residual(E: ActionEvaluator, c: Configuration | np.ndarray) -> float:
    """Largest block norm of the gradient; zero exactly at critical configurations."""
    return float(np.max(np.linalg.norm(E.gradient(c).reshape(E.size, E.n), axis=1)))


def config_to_orbit(E: ActionEvaluator, c: Configuration, tol: float = ORBIT_TOL) -> list[PhasePoint]:
    """
    Return the `dN + 1` phase points of the orbit of a critical configuration.

    The last point is the first one translated by `m`.

    """
    residual = critical_residual(E, c)
    if residual > tol:
        raise NotCritical('configuration is not critical (residual {:.3e})'.format(residual),
                          points=E._points(c), residual=residual)
    points = E._points(c)
    momenta = E.momenta(c)
    orbit = [PhasePoint(q, p) for q, p in zip(points, momenta)]
    orbit.append(deck_translate(orbit[0], E.cls.m))
    return orbit


def verify_orbit(chain: MapChain, orbit: Sequence[PhasePoint], cls: OrbitClass) -> OrbitVerification:
    """
    Step mismatch of consecutive phase points under the chain factors, and the
    closure `|F^d(z_0) - tau_m z_0|`.

    """
    N = len(chain)
    mismatch = max(chain[k % N].forward(orbit[k]).distance(orbit[k + 1]) for k in range(len(orbit) - 1))
    closure = chain.iterate(orbit[0], cls.d).distance(deck_translate(orbit[0], cls.m))
    return OrbitVerification(step_mismatch=float(mismatch), closure=float(closure))


# ========================= #
# Quotient by tau and sigma #
# ========================= #


def shift_points(points: np.ndarray, cls: OrbitClass, j: int) -> np.ndarray:
    """Return the points of `sigma^j`: the sequence read from position `j N`."""
    size = points.shape[0]
    offset = (j * (size // cls.d)) % size
    if offset == 0:
        return points.copy()
    return np.concatenate([points[offset:], points[:offset] + cls.m_vector])


def gaps(points: np.ndarray, cls: OrbitClass) -> np.ndarray:
    """`t_k = q_k - q_{k-1} - m/(dN)`, with `q_{-1} = q_{dN-1} - m`."""
    m = cls.m_vector
    previous = np.concatenate([[points[-1] - m], points[:-1]])
    return points - previous - m / points.shape[0]


def _lex_compare(a: np.ndarray, b: np.ndarray, tol: float = LEX_TOL) -> int:
    for x, y in zip(a.ravel(), b.ravel()):
        if abs(x - y) > tol:
            return -1 if x < y else 1
    return 0


def _wrapped_mean(points: np.ndarray) -> Vector:
    """Reduced mean coordinate in `[0, 1)`, with values within `LEX_TOL` of 1 sent to 0."""
    v = reduce_to_torus(points.mean(axis=0))
    return np.where(v > 1 - LEX_TOL, 0.0, v)


def canonicalize(c: Configuration) -> CanonicalForm:
    """
    Canonical representative modulo `tau` and `sigma`.

    Among the `d` shifts the lexicographically smallest gap sequence wins;
    shifts whose gaps agree within tolerance are ordered by their reduced mean
    coordinate and then by index.

    """
    best = None
    for j in range(c.cls.d):
        shifted = shift_points(c.points, c.cls, j)
        candidate = (gaps(shifted, c.cls), _wrapped_mean(shifted), j)
        if best is None:
            best = candidate
            continue
        order = _lex_compare(candidate[0], best[0]) or _lex_compare(candidate[1], best[1])
        if order < 0:
            best = candidate
    t, v, j = best
    return CanonicalForm(v=v, t=t, shift_index=j)


def reconstruct(form: CanonicalForm, cls: OrbitClass) -> np.ndarray:
    """Return configuration points with mean `v` and gaps `t`."""
    size = form.t.shape[0]
    increments = form.t + cls.m_vector / size
    increments[0] = 0.0
    offsets = np.cumsum(increments, axis=0)
    return form.v - offsets.mean(axis=0) + offsets


def representatives(points: np.ndarray, cls: OrbitClass) -> Iterator[np.ndarray]:
    """Yield the `d` shifts of `points`."""
    for j in range(cls.d):
        yield shift_points(points, cls, j)


def nearest_representative(x: np.ndarray, known: np.ndarray, cls: OrbitClass) -> np.ndarray:
    """The `tau`/`sigma` image of `known` closest to `x` (both of shape `(dN, n)`)."""
    best, best_dist = None, np.inf
    for rep in representatives(known, cls):
        rep = rep + np.round(x.mean(axis=0) - rep.mean(axis=0))
        dist = float(np.linalg.norm(x - rep))
        if dist < best_dist:
            best, best_dist = rep, dist
    return best


def same_orbit(a: np.ndarray, b: np.ndarray, cls: OrbitClass, tol: float) -> bool:
    """`True` if some shift of `b` matches `a` in mean coordinate (mod 1) and gaps within `tol`."""
    v_a, t_a = a.mean(axis=0), gaps(a, cls)
    for rep in representatives(b, cls):
        if torus_distance(v_a, rep.mean(axis=0)) <= tol and np.max(np.abs(t_a - gaps(rep, cls))) <= tol:
            return True
    return False
