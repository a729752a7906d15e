"""
``twist_orbits.framework.core``
===============================
Points of the torus, of its universal cover and of phase space, deck
translations, orbit classes and the standard symplectic matrix.

"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import gcd

import numpy as np

from twist_orbits.errors import DimensionMismatch
from twist_orbits.framework.utils import Matrix, Vector, as_vector


@dataclass(frozen=True, slots=True)
class CoverPoint:
    """A point of `R^n`, the universal cover of `T^n`."""

    coords: Vector

    def __post_init__(self) -> None:
        object.__setattr__(self, 'coords', as_vector(self.coords, name='cover point'))

    @property
    def n(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True, slots=True)
class PhasePoint:
    """
    A point `(q, p)` of the covering phase space `R^n x R^n`.

    `q` holds the cover-point coordinates and `p` the fiber (momentum)
    coordinates, both as float arrays of the same length.

    """

    q: Vector
    p: Vector

    def __post_init__(self) -> None:
        q = as_vector(self.q, name='q')
        object.__setattr__(self, 'q', q)
        object.__setattr__(self, 'p', as_vector(self.p, q.shape[0], name='p'))

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def cover_point(self) -> CoverPoint:
        return CoverPoint(self.q)

    def as_array(self) -> Vector:
        """Return the concatenation `(q, p)`."""
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_array(cls, z) -> PhasePoint:
        """Split a `2n` vector into `(q, p)`."""
        z = as_vector(z, name='phase vector')
        if z.shape[0] % 2:
            raise DimensionMismatch('phase vector must have even length, got {}'.format(z.shape[0]))
        n = z.shape[0] // 2
        return cls(z[:n], z[n:])

    def distance(self, other: PhasePoint) -> float:
        """Euclidean distance in the cover."""
        return float(np.linalg.norm(self.as_array() - other.as_array()))

    def __repr__(self) -> str:
        return 'PhasePoint(q={}, p={})'.format(self.q.tolist(), self.p.tolist())


@dataclass(frozen=True, slots=True)
class DeckTranslation:
    """The translation `tau_m: (q, p) -> (q + m, p)` by an integer vector `m`."""

    m: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, 'm', _integer_tuple(self.m))

    @property
    def n(self) -> int:
        return len(self.m)

    def __add__(self, other: DeckTranslation) -> DeckTranslation:
        return DeckTranslation(tuple(a + b for a, b in zip(self.m, other.m, strict=True)))


@dataclass(frozen=True, slots=True)
class OrbitClass:
    """
    The type `(m, d)` of a periodic orbit: `d` iterates of the lifted map
    send the starting point to its translate by `m`.

    """

    m: tuple[int, ...]
    d: int = 1
    _rotation: Vector = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, 'm', _integer_tuple(self.m))
        if int(self.d) != self.d or self.d < 1:
            raise ValueError('d must be a positive integer:', self.d)
        object.__setattr__(self, 'd', int(self.d))
        object.__setattr__(self, '_rotation', np.array(self.m, dtype=float) / self.d)

    @property
    def n(self) -> int:
        return len(self.m)

    @property
    def m_vector(self) -> Vector:
        return np.array(self.m, dtype=float)

    @property
    def rotation(self) -> Vector:
        """Return the rotation vector `m/d`."""
        return self._rotation.copy()

    @property
    def gcd(self) -> int:
        """Greatest common divisor of `d` and all components of `m`."""
        return gcd(self.d, *self.m)

    @property
    def prime(self) -> bool:
        """Return `True` if some component `m_k` is coprime to `d`."""
        return any(gcd(mk, self.d) == 1 for mk in self.m)

    def multiple(self, k: int) -> OrbitClass:
        """Return the class `(k m, k d)` realised by `k`-fold repeats of `(m, d)`-orbits."""
        return OrbitClass(tuple(k * mk for mk in self.m), k * self.d)

    def __str__(self) -> str:
        return '(({}),{})'.format(','.join(str(mk) for mk in self.m), self.d)


class SymplecticMatrixJ:
    """The `2n x 2n` matrix `J = [[0, -I], [I, 0]]`."""

    __slots__ = ['n', 'matrix']

    def __init__(self, n: int) -> None:
        if n < 1:
            raise ValueError('dimension must be positive:', n)
        self.n = n
        eye = np.eye(n)
        zero = np.zeros((n, n))
        self.matrix = np.block([[zero, -eye], [eye, zero]])
        self.matrix.flags.writeable = False

    def __array__(self, dtype=None, copy=None) -> Matrix:
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __matmul__(self, other) -> Matrix:
        return self.matrix @ other

    def __rmatmul__(self, other) -> Matrix:
        return other @ self.matrix


def _integer_tuple(m) -> tuple[int, ...]:
    values = tuple(np.atleast_1d(m).tolist())
    if not values or any(int(v) != v for v in values):
        raise ValueError('expected a non-empty integer vector:', m)
    return tuple(int(v) for v in values)


def reduce_to_torus(x: CoverPoint | Vector) -> CoverPoint | Vector:
    """Return the representative of `x` in the fundamental domain `[0, 1)^n`."""
    coords = x.coords if isinstance(x, CoverPoint) else as_vector(x, name='cover point')
    reduced = coords - np.floor(coords)
    reduced[reduced >= 1.0] = 0.0
    return CoverPoint(reduced) if isinstance(x, CoverPoint) else reduced


def torus_distance(u, v) -> float:
    """Sup-norm distance between the images of `u` and `v` on the torus."""
    delta = np.asarray(u, dtype=float) - np.asarray(v, dtype=float)
    return float(np.max(np.abs(delta - np.round(delta)))) if delta.size else 0.0


def deck_translate(z: PhasePoint, t: DeckTranslation | tuple[int, ...]) -> PhasePoint:
    """Return `tau_m(z) = (q + m, p)`."""
    if not isinstance(t, DeckTranslation):
        t = DeckTranslation(t)
    if t.n != z.n:
        raise DimensionMismatch('translation of length {} applied to a point of dimension {}'.format(t.n, z.n))
    return PhasePoint(z.q + np.array(t.m, dtype=float), z.p)
