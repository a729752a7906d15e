"""
``twist_orbits.framework.twistmap``
===================================
Twist maps generated by generating functions, their inverses and tangent
maps, and finite compositions of them.

Given `(q, p)`, the image `(Q, P)` solves `p = -d1 S(q, Q)` for `Q` and then
sets `P = d2 S(q, Q)`. Certification of the convexity condition guarantees
the solution is unique and that `d12 S` is invertible along the way.

"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from twist_orbits import NEWTON_MAX_ITER, NEWTON_TOL
from twist_orbits.errors import (
    DimensionMismatch,
    InternalInconsistency,
    NewtonDivergence
)
from twist_orbits.framework.core import (
    DeckTranslation,
    PhasePoint,
    SymplecticMatrixJ,
    deck_translate
)
from twist_orbits.framework.genfun import (
    GeneratingFunction,
    SamplingGrid,
    TwistConstants,
    certify_convexity
)
from twist_orbits.framework.utils import Matrix, Vector, newton_solve, sym

logger = logging.getLogger(__name__)


@dataclass(eq=False, kw_only=True, slots=True)
class TwistMap:
    """
    The twist map generated by `S`.

    `tc` holds the certified convexity constants when the map has been
    certified; solvers use `tol` (scaled by the size of the momentum) and
    `max_iter`.

    """

    S: GeneratingFunction
    tc: TwistConstants | None = None
    tol: float = NEWTON_TOL
    max_iter: int = NEWTON_MAX_ITER

    @classmethod
    def certified(cls, S: GeneratingFunction, grid: SamplingGrid | None = None, **kwargs) -> TwistMap:
        """Certify the convexity condition of `S` and return its map."""
        return cls(S=S, tc=certify_convexity(S, grid), **kwargs)

    @property
    def n(self) -> int:
        return self.S.n

    @property
    def label(self) -> str:
        return self.S.label

    def _check(self, z: PhasePoint) -> None:
        if z.n != self.n:
            raise DimensionMismatch('point of dimension {} for a map of dimension {}'.format(z.n, self.n))

    def _effective_shear(self, x: Vector, v: Vector) -> Vector:
        """Return `-(d12 S(x, x))^-1 v`, the image displacement of the quadratic approximation."""
        return -np.linalg.solve(self.S.d12(x, x), v)

    def forward(self, z: PhasePoint) -> PhasePoint:
        """Return `(Q, P)` with `p = -d1 S(q, Q)` and `P = d2 S(q, Q)`."""
        self._check(z)
        q, p = z.q, z.p
        tol = self.tol * max(1.0, float(np.linalg.norm(p)))
        starts = [q + self._effective_shear(q, p), q.copy()]
        for i, Q0 in enumerate(starts):
            try:
                Q = newton_solve(lambda Q: -self.S.d1(q, Q) - p, lambda Q: -self.S.d12(q, Q), Q0,
                                 tol=tol, max_iter=self.max_iter, what='forward solve of ' + self.label)
            except NewtonDivergence:
                if i == len(starts) - 1:
                    raise
                logger.warning('forward solve of %s failed from the quadratic guess at %s; retrying from Q=q',
                               self.label, z)
                continue
            return PhasePoint(Q, self.S.d2(q, Q))

    def inverse(self, z: PhasePoint) -> PhasePoint:
        """Return `(q, p)` whose image is `z = (Q, P)`."""
        self._check(z)
        Q, P = z.q, z.p
        tol = self.tol * max(1.0, float(np.linalg.norm(P)))
        starts = [Q - self._effective_shear(Q, P), Q.copy()]
        for i, q0 in enumerate(starts):
            try:
                q = newton_solve(lambda q: self.S.d2(q, Q) - P, lambda q: np.transpose(self.S.d12(q, Q)), q0,
                                 tol=tol, max_iter=self.max_iter, what='inverse solve of ' + self.label)
            except NewtonDivergence:
                if i == len(starts) - 1:
                    raise
                logger.warning('inverse solve of %s failed from the quadratic guess at %s; retrying from q=Q',
                               self.label, z)
                continue
            return PhasePoint(q, -self.S.d1(q, Q))

    def tangent(self, z: PhasePoint) -> Matrix:
        """Return the `2n x 2n` Jacobian of the map at `z` by implicit differentiation."""
        w = self.forward(z)
        q, Q = z.q, w.q
        S11, S12, S22 = self.S.d11(q, Q), self.S.d12(q, Q), self.S.d22(q, Q)
        try:
            S12_inv = np.linalg.inv(S12)
        except np.linalg.LinAlgError:
            raise InternalInconsistency('singular mixed partial of ' + self.label, q=q, Q=Q) from None
        dQ_dq = -S12_inv @ S11
        dQ_dp = -S12_inv
        dP_dq = S12.T - S22 @ S12_inv @ S11
        dP_dp = -S22 @ S12_inv
        return np.block([[dQ_dq, dQ_dp], [dP_dq, dP_dp]])

    def generating_residual(self, z: PhasePoint, w: PhasePoint) -> float:
        """Largest violation of `p = -d1 S(q, Q)` and `P = d2 S(q, Q)` for `w` the image of `z`."""
        return max(float(np.linalg.norm(z.p + self.S.d1(z.q, w.q))),
                   float(np.linalg.norm(w.p - self.S.d2(z.q, w.q))))

    def __repr__(self) -> str:
        return type(self).__name__ + '({})'.format(self.label)


def check_symplectic(DF: Matrix) -> float:
    """Return the Frobenius norm of `DF^T J DF - J`."""
    DF = np.asarray(DF, dtype=float)
    if DF.ndim != 2 or DF.shape[0] != DF.shape[1] or DF.shape[0] % 2:
        raise ValueError('expected a square matrix of even size:', DF.shape)
    J = SymplecticMatrixJ(DF.shape[0] // 2).matrix
    return float(np.linalg.norm(DF.T @ J @ DF - J))


def twist_margin(T: TwistMap, z: PhasePoint) -> float:
    """Smallest eigenvalue of `sym((dQ/dp)^-1) = sym(-d12 S)` at `z`."""
    Q = T.forward(z).q
    return float(np.linalg.eigvalsh(sym(-np.asarray(T.S.d12(z.q, Q))))[0])


def deck_equivariance_residual(T: TwistMap, z: PhasePoint, m: Sequence[int]) -> float:
    """Return `|F(tau_m z) - tau_m F(z)|`."""
    t = DeckTranslation(tuple(m))
    return T.forward(deck_translate(z, t)).distance(deck_translate(T.forward(z), t))


@dataclass(eq=False, slots=True)
class MapChain:
    """The composition `F_N o ... o F_1` of twist maps applied in list order."""

    maps: list[TwistMap] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.maps:
            raise ValueError('a map chain needs at least one map:', self.maps)
        dims = {T.n for T in self.maps}
        if len(dims) != 1:
            raise DimensionMismatch('maps of different dimensions in one chain: {}'.format(sorted(dims)))

    @property
    def n(self) -> int:
        return self.maps[0].n

    @property
    def genfuns(self) -> list[GeneratingFunction]:
        return [T.S for T in self.maps]

    def forward(self, z: PhasePoint) -> PhasePoint:
        for T in self.maps:
            z = T.forward(z)
        return z

    def inverse(self, z: PhasePoint) -> PhasePoint:
        for T in reversed(self.maps):
            z = T.inverse(z)
        return z

    def tangent(self, z: PhasePoint) -> Matrix:
        """Chain rule: the product of the factor tangents along the trajectory of `z`."""
        DF = np.eye(2 * self.n)
        for T in self.maps:
            DF = T.tangent(z) @ DF
            z = T.forward(z)
        return DF

    def steps(self, z: PhasePoint) -> list[PhasePoint]:
        """Return `z` followed by its image under each factor in turn."""
        points = [z]
        for T in self.maps:
            points.append(T.forward(points[-1]))
        return points

    def iterate(self, z: PhasePoint, times: int) -> PhasePoint:
        for _ in range(times):
            z = self.forward(z)
        return z

    def __getitem__(self, k: int) -> TwistMap:
        return self.maps[k]

    def __iter__(self) -> Iterator[TwistMap]:
        return iter(self.maps)

    def __len__(self) -> int:
        return len(self.maps)


def compose(maps: Sequence[TwistMap]) -> MapChain:
    """Return the chain applying `maps` in order."""
    return MapChain(list(maps))
