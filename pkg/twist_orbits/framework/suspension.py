"""
``twist_orbits.framework.suspension``
=====================================
Suspension of a convex twist map into a Hamiltonian isotopy.

For a target generating function `S` with convexity constant `a` and the
cutoff `f`, the family

    S_t(q, Q) = a f(t) |Q - q|^2 / 2                        0 < t <= 1/2
    S_t(q, Q) = a f(t) |Q - q|^2 / 2 + (1 - f(t)) S(q, Q)   1/2 <= t <= 1

generates twist maps `g_t` with `g_t -> Id` as `t -> 0` and `g_1` the
target. The isotopy is the flow of `X_t = (d/dt g_t) o g_t^-1`, which is
Hamiltonian with `H_t = <p, X_t^q> - (d/dt S~_t) o g_t^-1`, where
`S~_t(q, p) = S_t(q, Q_t(q, p))` is the primitive of the isotopy.

"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from twist_orbits import NEWTON_TOL
from twist_orbits.errors import ConvexityViolation
from twist_orbits.framework.core import PhasePoint
from twist_orbits.framework.genfun import (
    GeneratingFunction,
    SamplingGrid,
    TwistConstants,
    certify_convexity
)
from twist_orbits.framework.twistmap import TwistMap
from twist_orbits.framework.utils import Vector, rk4

logger = logging.getLogger(__name__)

DELTA_T = 1e-4
SUSPENSION_STEPS = 1000


class CutoffFunction:
    """
    `f(t) = 1/sin^2(pi t)` on `(0, 1/2]` and `sin^2(pi t)` on `[1/2, 1]`.

    `f(1/2) = 1`, `f'(1/2) = 0`, `f(1) = 0` and `f -> +inf` as `t -> 0`;
    `phi = 1/f` is smooth at 0 with `phi(0) = 0`.

    """

    __slots__ = []

    def f(self, t: float) -> float:
        s = np.sin(np.pi * t) ** 2
        if t <= 0.5:
            return np.inf if s == 0 else 1 / s
        return s

    def df(self, t: float) -> float:
        if t <= 0.5:
            return -2 * np.pi * np.cos(np.pi * t) / np.sin(np.pi * t) ** 3
        return np.pi * np.sin(2 * np.pi * t)

    def phi(self, t: float) -> float:
        if t <= 0.5:
            return np.sin(np.pi * t) ** 2
        return 1 / np.sin(np.pi * t) ** 2

    def dphi(self, t: float) -> float:
        if t <= 0.5:
            return np.pi * np.sin(2 * np.pi * t)
        return -2 * np.pi * np.cos(np.pi * t) / np.sin(np.pi * t) ** 3


def make_cutoff() -> CutoffFunction:
    return CutoffFunction()


@dataclass(eq=False, kw_only=True, slots=True)
class SuspensionFamily:
    """The interpolating family for a convexity-certified target."""

    S: GeneratingFunction
    tc: TwistConstants
    cutoff: CutoffFunction = field(default_factory=make_cutoff)
    tol: float = NEWTON_TOL

    @property
    def a(self) -> float:
        return self.tc.a

    @property
    def n(self) -> int:
        return self.S.n

    @property
    def target(self) -> TwistMap:
        return TwistMap(S=self.S, tc=self.tc, tol=self.tol)

    def map_at(self, t: float) -> TwistMap:
        return TwistMap(S=family_genfun(self, t), tol=self.tol)


@dataclass(frozen=True, kw_only=True, slots=True)
class SuspensionCheck:
    """Distances between the time-1 flow of `X_t` and the target map."""

    points: list[PhasePoint]
    errors: np.ndarray
    steps: int
    delta_t: float
    richardson: int

    @property
    def max_error(self) -> float:
        return float(np.max(self.errors)) if len(self.errors) else 0.0


def suspension_family(S: GeneratingFunction, grid: SamplingGrid | None = None,
                      tc: TwistConstants | None = None) -> SuspensionFamily:
    """Certify `S` (unless `tc` is given) and build its suspension family."""
    tc = tc or certify_convexity(S, grid)
    return SuspensionFamily(S=S, tc=tc)


def family_genfun(fam: SuspensionFamily, t: float) -> GeneratingFunction:
    """The generating function `S_t` with analytic derivatives."""
    if not 0 < t <= 1:
        raise ValueError('the family is defined for t in (0, 1]:', t)
    af = fam.a * fam.cutoff.f(t)
    eye = np.eye(fam.n)
    label = '{}_t={:g}'.format(fam.S.label, t)
    if t <= 0.5:
        return GeneratingFunction(
            n=fam.n,
            label=label,
            eval=lambda q, Q: 0.5 * af * float((Q - q) @ (Q - q)),
            d1=lambda q, Q: -af * (Q - q),
            d2=lambda q, Q: af * (Q - q),
            d11=lambda q, Q: af * eye,
            d12=lambda q, Q: -af * eye,
            d22=lambda q, Q: af * eye,
            normalized=True,
            params={'t': t}
        )
    S, w = fam.S, 1 - fam.cutoff.f(t)
    return GeneratingFunction(
        n=fam.n,
        label=label,
        eval=lambda q, Q: 0.5 * af * float((Q - q) @ (Q - q)) + w * S.eval(q, Q),
        d1=lambda q, Q: -af * (Q - q) + w * S.d1(q, Q),
        d2=lambda q, Q: af * (Q - q) + w * S.d2(q, Q),
        d11=lambda q, Q: af * eye + w * S.d11(q, Q),
        d12=lambda q, Q: -af * eye + w * np.asarray(S.d12(q, Q)),
        d22=lambda q, Q: af * eye + w * S.d22(q, Q),
        normalized=S.normalized,
        params={'t': t}
    )


def isotopy_map(fam: SuspensionFamily, t: float, z: PhasePoint) -> PhasePoint:
    """`g_t(z)`: the identity at `t = 0`, `(q + phi(t) p / a, p)` up to `t = 1/2`, then the map of `S_t`."""
    if not 0 <= t <= 1:
        raise ValueError('isotopy parameter outside [0, 1]:', t)
    if t == 0:
        return z
    if t <= 0.5:
        return PhasePoint(z.q + fam.cutoff.phi(t) * z.p / fam.a, z.p)
    return fam.map_at(t).forward(z)


def inverse_isotopy_map(fam: SuspensionFamily, t: float, z: PhasePoint) -> PhasePoint:
    """`g_t^-1(z)`."""
    if not 0 <= t <= 1:
        raise ValueError('isotopy parameter outside [0, 1]:', t)
    if t == 0:
        return z
    if t <= 0.5:
        return PhasePoint(z.q - fam.cutoff.phi(t) * z.p / fam.a, z.p)
    return fam.map_at(t).inverse(z)


def _stencil_side(t: float, delta_t: float) -> int:
    """
    0 for a central stencil, +1 forward, -1 backward, chosen so that the
    stencil stays inside the piece of `[0, 1/2]`, `[1/2, 1]` containing `t`.

    """
    lo, hi = (0.0, 0.5) if t <= 0.5 else (0.5, 1.0)
    if t - delta_t >= lo and t + delta_t <= hi:
        return 0
    if t + 2 * delta_t <= hi:
        return 1
    if t - 2 * delta_t >= lo:
        return -1
    raise ValueError('difference stencil of width {:g} does not fit around t={:g}'.format(delta_t, t), t)


def _time_derivative(g: Callable[[float], np.ndarray], t: float, delta_t: float, richardson: int) -> np.ndarray:
    """Second-order difference quotient of `g` at `t`, with optional Richardson extrapolation."""
    if richardson not in (0, 1):
        raise ValueError('richardson level must be 0 or 1:', richardson)
    side = _stencil_side(t, delta_t)

    def quotient(h: float) -> np.ndarray:
        if side == 0:
            return (g(t + h) - g(t - h)) / (2 * h)
        return side * (-3 * g(t) + 4 * g(t + side * h) - g(t + 2 * side * h)) / (2 * h)

    coarse = quotient(delta_t)
    if richardson == 0:
        return coarse
    return (4 * quotient(delta_t / 2) - coarse) / 3


def vector_field(fam: SuspensionFamily, t: float, z: PhasePoint, *, delta_t: float = DELTA_T,
                 richardson: int = 1) -> Vector:
    """`X_t(z) = (d/dt g_t)(g_t^-1 z)` by finite differences in `t`."""
    w = inverse_isotopy_map(fam, t, z)
    return _time_derivative(lambda s: isotopy_map(fam, s, w).as_array(), t, delta_t, richardson)


def primitive(fam: SuspensionFamily, t: float, w: PhasePoint) -> float:
    """`S~_t(w) = S_t(q, Q_t(w))`; in closed form `phi(t) |p|^2 / (2a)` up to `t = 1/2`."""
    if t == 0:
        return 0.0
    if t <= 0.5:
        return fam.cutoff.phi(t) * float(w.p @ w.p) / (2 * fam.a)
    return family_genfun(fam, t).eval(w.q, isotopy_map(fam, t, w).q)


def hamiltonian(fam: SuspensionFamily, t: float, z: PhasePoint, *, delta_t: float = DELTA_T,
                richardson: int = 1) -> float:
    """`H_t(z) = <p, X_t^q(z)> - (d/dt S~_t)(g_t^-1 z)`."""
    n = fam.n
    X = vector_field(fam, t, z, delta_t=delta_t, richardson=richardson)
    w = inverse_isotopy_map(fam, t, z)
    if t <= 0.5:
        dS = fam.cutoff.dphi(t) * float(w.p @ w.p) / (2 * fam.a)
    else:
        dS = float(_time_derivative(lambda s: np.array([primitive(fam, s, w)]), t, delta_t, richardson)[0])
    return float(z.p @ X[:n]) - dS


def verify_suspension(fam: SuspensionFamily, points: Sequence[PhasePoint], steps: int = SUSPENSION_STEPS, *,
                      delta_t: float = DELTA_T, richardson: int = 1) -> SuspensionCheck:
    """Integrate `z' = X_t(z)` over `[0, 1]` from each point and compare with the target map."""
    target = fam.target
    n = fam.n

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return vector_field(fam, t, PhasePoint(y[:n], y[n:]), delta_t=delta_t, richardson=richardson)

    errors = []
    for z in points:
        end = PhasePoint.from_array(rk4(rhs, z.as_array(), 0.0, 1.0, steps))
        errors.append(end.distance(target.forward(z)))
    check = SuspensionCheck(points=list(points), errors=np.array(errors), steps=steps, delta_t=delta_t,
                            richardson=richardson)
    logger.info('suspension of %s: max error %.3e over %d points', fam.S.label, check.max_error, len(errors))
    return check


def convexity_audit(fam: SuspensionFamily, times: Sequence[float] = (0.1, 0.25, 0.5, 0.75, 1.0),
                    grid: SamplingGrid | None = None) -> dict[float, float]:
    """Convexity margin of `S_t` at each `t`; each must be at least the target's `a`."""
    grid = grid or SamplingGrid(per_axis=8, delta_per_axis=3, random=256)
    margins = {}
    for t in times:
        margin = certify_convexity(family_genfun(fam, t), grid).a
        if margin < fam.a * (1 - 1e-9):
            raise ConvexityViolation('S_t at t={:g} has margin {:.6g} below a={:.6g}'.format(t, margin, fam.a),
                                     t=t, margin=margin, a=fam.a)
        margins[t] = margin
    return margins
