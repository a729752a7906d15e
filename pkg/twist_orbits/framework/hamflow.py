"""
``twist_orbits.framework.hamflow``
==================================
Optical Hamiltonian flows and their decomposition into convex twist maps.

Hamilton's equations are `q' = H_p`, `p' = -H_q`; the tangent flow solves
`U' = -J hess(H) U` with `U(t0) = I`, so `U` is the Jacobian of the flow map.
For short times `eps` the flow map is a twist map whose twist block (the
upper right `n x n` block of `U`) is close to `eps * H_pp`, and whose
generating function is the action `int p dq - H dt` along the trajectory
joining `q` to `Q`. The time-1 map is decomposed into `N` such short-time
maps.

"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from itertools import product
from math import ceil
from typing import Any, Callable, Sequence

import numpy as np

from twist_orbits import NEWTON_MAX_ITER, SAFETY, STEPS_PER_STINT
from twist_orbits.errors import (
    BoundViolation,
    ConvexityViolation,
    InternalInconsistency,
    OpticalityFailure,
    PeriodicityViolation,
    PositivityFailure,
    ShootingDivergence
)
from twist_orbits.framework.core import OrbitClass, PhasePoint, deck_translate
from twist_orbits.framework.genfun import (
    FourierPotential,
    GeneratingFunction,
    SamplingGrid,
    TwistConstants,
    certify_convexity
)
from twist_orbits.framework.twistmap import MapChain, TwistMap, check_symplectic
from twist_orbits.framework.utils import Matrix, Vector, fd_jacobian, newton_solve, opnorm, rk4, sym
from twist_orbits.hamlang import evaluate, evaluate_with_derivatives, infer_dimension, parse

logger = logging.getLogger(__name__)

type HamiltonianValue = Callable[[Vector, Vector, float], float]
type HamiltonianGradient = Callable[[Vector, Vector, float], Vector]
type HamiltonianHessian = Callable[[Vector, Vector, float], Matrix]


@dataclass(eq=False, kw_only=True, slots=True)
class HamiltonianModel:
    """
    `H(q, p, t)`, 1-periodic in `q`, with gradient ordered `(H_q, H_p)` and
    the matching `2n x 2n` Hessian.

    """

    n: int
    label: str
    H: HamiltonianValue
    gradH: HamiltonianGradient
    hessH: HamiltonianHessian
    params: dict[str, Any] = field(default_factory=dict)

    def vector_field(self, t: float, z: Vector) -> Vector:
        n = self.n
        g = self.gradH(z[:n], z[n:], t)
        return np.concatenate([g[n:], -g[:n]])

    def fiber_hessian(self, q: Vector, p: Vector, t: float) -> Matrix:
        n = self.n
        return np.asarray(self.hessH(q, p, t))[n:, n:]

    def __repr__(self) -> str:
        return type(self).__name__ + '({}, n={})'.format(self.label, self.n)


@dataclass(frozen=True, kw_only=True, slots=True)
class OpticalBounds:
    """Sampled `K > |hess H|` and `C` with `C <= eig(H_pp) <= 1/C`."""

    K: float
    C: float
    p_max: float
    samples: int


@dataclass(frozen=True, kw_only=True, slots=True)
class TangentFlowResult:
    times: np.ndarray
    points: np.ndarray
    U: np.ndarray
    action: float

    @property
    def final_point(self) -> PhasePoint:
        return PhasePoint.from_array(self.points[-1])

    @property
    def final_U(self) -> Matrix:
        return self.U[-1]

    @property
    def symplectic_residual(self) -> float:
        """Largest `|U^T J U - J|` along the stored samples."""
        return max(check_symplectic(U) for U in self.U)


@dataclass(frozen=True, kw_only=True, slots=True)
class GronwallReport:
    K: float
    max_ratio: float
    samples: int


@dataclass(frozen=True, kw_only=True, slots=True)
class TwistBlockReport:
    epsilon: float
    b: Matrix
    eig_min: float
    eig_max: float
    bound_lo: float
    bound_hi: float
    inverse_norm: float

    @property
    def admissible(self) -> bool:
        return self.bound_lo > 0

    @property
    def within_window(self) -> bool:
        slack = 1e-12
        return self.bound_lo - slack <= self.eig_min and self.eig_max <= self.bound_hi + slack


@dataclass(eq=False, kw_only=True, slots=True)
class DecompositionPlan:
    """The time-1 map as the chain of `N` short-time twist maps."""

    N: int
    epsilon: float
    chain: MapChain
    constants: list[TwistConstants]
    bounds: OpticalBounds
    composition_residual: float
    inverse_twist_bound: float


# ======= #
# Catalog #
# ======= #


def free_model(n: int = 1) -> HamiltonianModel:
    """`H = |p|^2 / 2`."""
    hess = np.zeros((2 * n, 2 * n))
    hess[n:, n:] = np.eye(n)
    return HamiltonianModel(
        n=n,
        label='free',
        H=lambda q, p, t: 0.5 * float(p @ p),
        gradH=lambda q, p, t: np.concatenate([np.zeros(n), p]),
        hessH=lambda q, p, t: hess.copy(),
        params={'n': n}
    )


def mechanical_model(V: FourierPotential, *, label: str = 'mechanical') -> HamiltonianModel:
    """`H = |p|^2 / 2 + V(q)`."""
    n = V.n

    def hessH(q, p, t):
        hess = np.zeros((2 * n, 2 * n))
        hess[:n, :n] = V.hessian(q)
        hess[n:, n:] = np.eye(n)
        return hess

    return HamiltonianModel(
        n=n,
        label=label,
        H=lambda q, p, t: 0.5 * float(p @ p) + V(q),
        gradH=lambda q, p, t: np.concatenate([V.gradient(q), p]),
        hessH=hessH
    )


def pendulum_model(k: float = 1.0) -> HamiltonianModel:
    """`H = p^2/2 - k/(4 pi^2) cos(2 pi q)`; `k = -1` puts the elliptic equilibrium at `q = 1/2`."""
    model = mechanical_model(FourierPotential([[1]], [-k / (4 * np.pi ** 2)]), label='pendulum(k={:g})'.format(k))
    model.params['k'] = k
    return model


def shear_model() -> HamiltonianModel:
    """`H = p sin(2 pi q) / (2 pi)`: periodic, with `H_pp = 0`, so never optical."""
    two_pi = 2 * np.pi
    return HamiltonianModel(
        n=1,
        label='shear',
        H=lambda q, p, t: float(p[0] * np.sin(two_pi * q[0]) / two_pi),
        gradH=lambda q, p, t: np.array([p[0] * np.cos(two_pi * q[0]), np.sin(two_pi * q[0]) / two_pi]),
        hessH=lambda q, p, t: np.array([[-two_pi * p[0] * np.sin(two_pi * q[0]), np.cos(two_pi * q[0])],
                                        [np.cos(two_pi * q[0]), 0.0]])
    )


def expression_model(text: str, n: int | None = None, *, check_periodicity: bool = True) -> HamiltonianModel:
    """A Hamiltonian given as expression text, differentiated by second-order jets."""
    ast = parse(text, n)
    n = n or infer_dimension(ast)
    model = HamiltonianModel(
        n=n,
        label=text,
        H=lambda q, p, t: evaluate(ast, q, p, t),
        gradH=lambda q, p, t: evaluate_with_derivatives(ast, q, p, t)[1],
        hessH=lambda q, p, t: evaluate_with_derivatives(ast, q, p, t)[2],
        params={'expression': text}
    )
    if check_periodicity:
        _check_periodic(model)
    return model


def _check_periodic(model: HamiltonianModel, samples: int = 16, tol: float = 1e-9) -> None:
    rng = np.random.default_rng(0)
    for _ in range(samples):
        q, p, t = rng.random(model.n), rng.uniform(-2, 2, model.n), float(rng.random())
        base = model.H(q, p, t)
        for i in range(model.n):
            shifted = model.H(q + np.eye(model.n)[i], p, t)
            if abs(shifted - base) > tol * max(1.0, abs(base)):
                raise PeriodicityViolation('Hamiltonian is not 1-periodic in q{}'.format(i + 1), q=q, p=p, t=t)


def catalog_model(name: str, params: dict[str, Any] | None = None) -> HamiltonianModel:
    """
    Return the catalog Hamiltonian `name`.

    - ``free``: `n` (default 1)
    - ``pendulum``: `k` (default 1)
    - ``mechanical``: `K1`, `K2`, `lam` as for the Froeschle potential
    - ``shear``: non-optical negative control

    """
    params = dict(params or {})
    match name:
        case 'free':
            return free_model(int(params.get('n', 1)))
        case 'pendulum':
            return pendulum_model(float(params.get('k', 1.0)))
        case 'mechanical':
            K1, K2, lam = (float(params.get(key, default)) for key, default in [('K1', 0.1), ('K2', 0.1), ('lam', 0.05)])
            model = mechanical_model(FourierPotential.froeschle(K1, K2, lam))
            model.params.update(K1=K1, K2=K2, lam=lam)
            return model
        case 'shear':
            return shear_model()
    raise ValueError('unknown Hamiltonian:', name)


# ================ #
# Flow integration #
# ================ #


def flow(Hm: HamiltonianModel, z: PhasePoint, t0: float, t1: float, steps: int) -> PhasePoint:
    """Fourth-order Runge-Kutta integration of Hamilton's equations from `t0` to `t1`."""
    return PhasePoint.from_array(rk4(Hm.vector_field, z.as_array(), t0, t1, steps))


def _combined_rhs(Hm: HamiltonianModel) -> Callable[[float, np.ndarray], np.ndarray]:
    """Right-hand side for the state `(z, U, action)`."""
    n = Hm.n
    m = 2 * n

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        q, p = y[:n], y[n:m]
        U = y[m:m + m * m].reshape(m, m)
        g = Hm.gradH(q, p, t)
        hess = np.asarray(Hm.hessH(q, p, t))
        A = np.block([[hess[n:, :n], hess[n:, n:]], [-hess[:n, :n], -hess[:n, n:]]])
        dS = float(p @ g[n:]) - Hm.H(q, p, t)
        return np.concatenate([g[n:], -g[:n], (A @ U).ravel(), [dS]])

    return rhs


def tangent_flow(Hm: HamiltonianModel, z: PhasePoint, t0: float, t1: float, steps: int) -> TangentFlowResult:
    """Integrate the trajectory, the tangent flow `U` and the action together."""
    m = 2 * Hm.n
    y0 = np.concatenate([z.as_array(), np.eye(m).ravel(), [0.0]])
    times, states = rk4(_combined_rhs(Hm), y0, t0, t1, steps, record=True)
    return TangentFlowResult(
        times=times,
        points=states[:, :m],
        U=states[:, m:m + m * m].reshape(-1, m, m),
        action=float(states[-1, -1])
    )


def orbit_action(Hm: HamiltonianModel, z: PhasePoint, d: int = 1, steps: int = 4 * STEPS_PER_STINT) -> float:
    """`int p dq - H dt` along the trajectory of `z` over `d` unit time intervals."""
    total = 0.0
    for _ in range(d):
        result = tangent_flow(Hm, z, 0.0, 1.0, steps)
        total += result.action
        z = result.final_point
    return total


# ============= #
# Certification #
# ============= #


def estimate_optical_bounds(Hm: HamiltonianModel, classes: Sequence[OrbitClass] = (), *,
                            p_max: float | None = None, per_axis: int = 8, p_per_axis: int = 9,
                            times: Sequence[float] = (0.0, 0.5, 1.0)) -> OpticalBounds:
    """
    Sample `hess H` over the torus times the momentum box `[-p_max, p_max]^n`.

    `p_max` defaults to `4 max |m/d| + 2` over `classes`. Raises
    `OpticalityFailure` at a sample where `H_pp` is not positive definite.

    """
    if p_max is None:
        p_max = 4 * max((float(np.max(np.abs(c.rotation))) for c in classes), default=0.0) + 2
    n = Hm.n
    q_axis = np.arange(per_axis) / per_axis
    p_axis = np.linspace(-p_max, p_max, p_per_axis)
    K, C, count = 0.0, np.inf, 0
    for q in product(q_axis, repeat=n):
        for p in product(p_axis, repeat=n):
            for t in times:
                q_, p_ = np.array(q), np.array(p)
                hess = np.asarray(Hm.hessH(q_, p_, t))
                eigvals = np.linalg.eigvalsh(sym(hess[n:, n:]))
                if eigvals[0] <= 0:
                    raise OpticalityFailure('{} is not optical: H_pp has eigenvalue {:.3g}'.format(Hm.label, eigvals[0]),
                                            q=q_, p=p_, t=t, eigenvalue=eigvals[0])
                K = max(K, opnorm(hess))
                C = min(C, eigvals[0], 1 / eigvals[-1])
                count += 1
    bounds = OpticalBounds(K=float(K), C=float(C), p_max=float(p_max), samples=count)
    logger.info('optical bounds of %s: K=%.6g C=%.6g (p_max=%g, %d samples)', Hm.label, K, C, p_max, count)
    return bounds


def gronwall_check(Hm: HamiltonianModel, z: PhasePoint, t0: float, t1: float, Kbound: float,
                   steps: int = STEPS_PER_STINT) -> GronwallReport:
    """Check `|U(t) - I| <= K |t - t0| exp(K |t - t0|)` at every integrator sample."""
    result = tangent_flow(Hm, z, t0, t1, steps)
    eye = np.eye(2 * Hm.n)
    max_ratio = 0.0
    for t, U in zip(result.times[1:], result.U[1:]):
        elapsed = abs(t - t0)
        lhs = opnorm(U - eye)
        rhs = Kbound * elapsed * np.exp(Kbound * elapsed)
        if lhs > rhs * (1 + 1e-12) + 1e-14:
            raise BoundViolation('Gronwall bound fails at t={:.6g}: K={:g} is too small'.format(t, Kbound),
                                 t=t, lhs=lhs, rhs=rhs)
        if rhs > 0:
            max_ratio = max(max_ratio, lhs / rhs)
    return GronwallReport(K=Kbound, max_ratio=float(max_ratio), samples=len(result.times) - 1)


def twist_block(Hm: HamiltonianModel, z: PhasePoint, epsilon: float, bounds: OpticalBounds, *,
                t0: float = 0.0, steps: int = STEPS_PER_STINT) -> TwistBlockReport:
    """
    Read the twist block `b = dQ/dp` of the time-`eps` map at `z` and compare
    its spectrum with `(eps C - K eps^2, eps/C + K eps^2)`.

    """
    if epsilon <= 0:
        raise ValueError('epsilon must be positive:', epsilon)
    n = Hm.n
    b = tangent_flow(Hm, z, t0, t0 + epsilon, steps).final_U[:n, n:]
    eigvals = np.linalg.eigvalsh(sym(b))
    if eigvals[0] <= 0:
        raise PositivityFailure('twist block of the time-{:g} map is not positive definite'.format(epsilon),
                                z=z.as_array(), epsilon=epsilon, eigenvalue=eigvals[0])
    K, C = bounds.K, bounds.C
    return TwistBlockReport(
        epsilon=epsilon,
        b=b,
        eig_min=float(eigvals[0]),
        eig_max=float(eigvals[-1]),
        bound_lo=epsilon * C - K * epsilon ** 2,
        bound_hi=epsilon / C + K * epsilon ** 2,
        inverse_norm=opnorm(np.linalg.inv(b))
    )


def choose_N(bounds: OpticalBounds, safety: float = SAFETY) -> int:
    """
    `N = ceil(safety K / C)`, increased until `eps = 1/N` leaves a positive
    margin `eps C - K eps^2`.

    """
    if safety < 1:
        raise ValueError('safety factor must be at least 1:', safety)
    N = max(1, ceil(safety * bounds.K / bounds.C - 1e-12))
    while bounds.C / N - bounds.K / N ** 2 <= 0:
        logger.warning('N=%d leaves no twist margin; incrementing', N)
        N += 1
    return N


# ========================== #
# Short-time generating maps #
# ========================== #


@dataclass(frozen=True, slots=True)
class _Solution:
    p0: Vector
    P1: Vector
    action: float
    U: Matrix


class NumericGeneratingFunction:
    """
    The generating function of the flow from `t_start` to `t_start + epsilon`,
    evaluated by shooting on the initial momentum.

    Second derivatives come from the tangent flow (``'tangent'``) or from
    central differences of the first derivatives (``'fd'``).

    """

    __slots__ = ['Hm', 't_start', 'epsilon', 'steps', 'hessian_mode', 'tol', 'max_iter', 'fd_step',
                 '_cache', '_lock']

    def __init__(self, Hm: HamiltonianModel, t_start: float, epsilon: float, *, steps: int = STEPS_PER_STINT,
                 hessian_mode: str = 'tangent', tol: float = 1e-12, max_iter: int = NEWTON_MAX_ITER,
                 fd_step: float = 1e-6) -> None:
        if hessian_mode not in ('tangent', 'fd'):
            raise ValueError('hessian_mode must be "tangent" or "fd":', hessian_mode)
        self.Hm = Hm
        self.t_start = t_start
        self.epsilon = epsilon
        self.steps = steps
        self.hessian_mode = hessian_mode
        self.tol = tol
        self.max_iter = max_iter
        self.fd_step = fd_step
        self._cache: dict[tuple[int, ...], _Solution] = {}
        self._lock = threading.Lock()

    @property
    def t_end(self) -> float:
        return self.t_start + self.epsilon

    def _integrate(self, q: Vector, p0: Vector) -> TangentFlowResult:
        return tangent_flow(self.Hm, PhasePoint(q, p0), self.t_start, self.t_end, self.steps)

    def _initial_momentum(self, q: Vector, Q: Vector) -> Vector:
        velocity = (Q - q) / self.epsilon
        try:
            return np.linalg.solve(self.Hm.fiber_hessian(0.5 * (q + Q), velocity, self.t_start + self.epsilon / 2),
                                   velocity)
        except np.linalg.LinAlgError:
            return velocity

    def solve(self, q: Vector, Q: Vector) -> _Solution:
        """Solve the boundary problem `q(t_start) = q`, `q(t_end) = Q`."""
        key = tuple(np.round(np.concatenate([q, Q]) * 1e12).astype(np.int64).tolist())
        solution = self._cache.get(key)
        if solution is not None:
            return solution
        n = self.Hm.n
        latest: dict[str, TangentFlowResult] = {}

        def residual(p0: Vector) -> Vector:
            latest['result'] = result = self._integrate(q, p0)
            return result.points[-1, :n] - Q

        def jacobian(p0: Vector) -> Matrix:
            result = latest['result']
            if not np.array_equal(result.points[0, n:], p0):
                result = self._integrate(q, p0)
            return result.final_U[:n, n:]

        try:
            p0 = newton_solve(residual, jacobian, self._initial_momentum(q, Q),
                              tol=self.tol * max(1.0, float(np.linalg.norm(Q - q))), max_iter=self.max_iter,
                              what='shooting from q={} to Q={}'.format(q.tolist(), Q.tolist()),
                              error=ShootingDivergence)
        except InternalInconsistency as exc:
            raise ShootingDivergence('singular twist block while shooting', **exc.witness) from None
        result = self._integrate(q, p0)
        solution = _Solution(p0=p0, P1=result.points[-1, n:].copy(), action=result.action, U=result.final_U)
        with self._lock:
            self._cache[key] = solution
        return solution

    def eval(self, q: Vector, Q: Vector) -> float:
        return self.solve(q, Q).action

    def d1(self, q: Vector, Q: Vector) -> Vector:
        return -self.solve(q, Q).p0

    def d2(self, q: Vector, Q: Vector) -> Vector:
        return self.solve(q, Q).P1.copy()

    def _blocks(self, q: Vector, Q: Vector) -> tuple[Matrix, Matrix, Matrix]:
        n = self.Hm.n
        U = self.solve(q, Q).U
        A, B, D = U[:n, :n], U[:n, n:], U[n:, n:]
        try:
            B_inv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            raise InternalInconsistency('singular twist block', q=q, Q=Q) from None
        return B_inv @ A, -B_inv, D @ B_inv

    def d11(self, q: Vector, Q: Vector) -> Matrix:
        if self.hessian_mode == 'fd':
            return fd_jacobian(lambda x: self.d1(x, Q), q, self.fd_step)
        return self._blocks(q, Q)[0]

    def d12(self, q: Vector, Q: Vector) -> Matrix:
        if self.hessian_mode == 'fd':
            return fd_jacobian(lambda x: self.d1(q, x), Q, self.fd_step)
        return self._blocks(q, Q)[1]

    def d22(self, q: Vector, Q: Vector) -> Matrix:
        if self.hessian_mode == 'fd':
            return fd_jacobian(lambda x: self.d2(q, x), Q, self.fd_step)
        return self._blocks(q, Q)[2]

    def as_genfun(self) -> GeneratingFunction:
        return GeneratingFunction(
            n=self.Hm.n,
            label='{}[{:g},{:g}]'.format(self.Hm.label, self.t_start, self.t_end),
            eval=self.eval,
            d1=self.d1,
            d2=self.d2,
            d11=self.d11,
            d12=self.d12,
            d22=self.d22,
            params={'t_start': self.t_start, 'epsilon': self.epsilon, 'steps': self.steps}
        )


def short_time_genfun(Hm: HamiltonianModel, t_start: float, epsilon: float, bounds: OpticalBounds | None = None,
                      *, steps: int = STEPS_PER_STINT, hessian_mode: str = 'tangent') -> GeneratingFunction:
    """
    Generating function of the flow over `[t_start, t_start + epsilon]`.

    With `bounds` the step is first checked to be admissible,
    `epsilon C - K epsilon^2 > 0`.

    """
    if epsilon <= 0:
        raise ValueError('epsilon must be positive:', epsilon)
    if bounds is not None and epsilon * bounds.C - bounds.K * epsilon ** 2 <= 0:
        raise PositivityFailure('time step {:g} leaves no twist margin'.format(epsilon), epsilon=epsilon,
                                K=bounds.K, C=bounds.C)
    return NumericGeneratingFunction(Hm, t_start, epsilon, steps=steps, hessian_mode=hessian_mode).as_genfun()


@dataclass(eq=False, kw_only=True, slots=True)
class FlowTwistMap(TwistMap):
    """
    The flow map of `Hm` over `[t0, t0 + epsilon]`, evaluated by direct
    integration; `S` is its numeric generating function.

    """

    Hm: HamiltonianModel
    t0: float
    epsilon: float
    steps: int = STEPS_PER_STINT

    def forward(self, z: PhasePoint) -> PhasePoint:
        self._check(z)
        return flow(self.Hm, z, self.t0, self.t0 + self.epsilon, self.steps)

    def inverse(self, z: PhasePoint) -> PhasePoint:
        self._check(z)
        return flow(self.Hm, z, self.t0 + self.epsilon, self.t0, self.steps)

    def tangent(self, z: PhasePoint) -> Matrix:
        return tangent_flow(self.Hm, z, self.t0, self.t0 + self.epsilon, self.steps).final_U


def flow_twist_map(Hm: HamiltonianModel, t0: float, epsilon: float, *, steps: int = STEPS_PER_STINT,
                   hessian_mode: str = 'tangent') -> FlowTwistMap:
    S = NumericGeneratingFunction(Hm, t0, epsilon, steps=steps, hessian_mode=hessian_mode).as_genfun()
    return FlowTwistMap(S=S, Hm=Hm, t0=t0, epsilon=epsilon, steps=steps)


def decompose(Hm: HamiltonianModel, bounds: OpticalBounds, safety: float = SAFETY, *,
              steps: int = STEPS_PER_STINT, grid: SamplingGrid | None = None, check_points: int = 50,
              seed: int = 0) -> DecompositionPlan:
    """
    Split the time-1 map into `N = choose_N(bounds, safety)` flow maps over
    `[(k-1)/N, k/N]`, certify the convexity condition of each, and compare
    the composed chain with direct integration over `[0, 1]`.

    """
    N = choose_N(bounds, safety)
    epsilon = 1.0 / N
    grid = grid or SamplingGrid(per_axis=8, delta_per_axis=3, random=64, box=epsilon * bounds.p_max / bounds.C,
                                seed=seed)
    maps, constants = [], []
    for k in range(N):
        T = flow_twist_map(Hm, k * epsilon, epsilon, steps=steps)
        try:
            T.tc = certify_convexity(T.S, grid)
        except ConvexityViolation as exc:
            exc.witness['step'] = k
            raise
        maps.append(T)
        constants.append(T.tc)
    chain = MapChain(maps)

    rng = np.random.default_rng(seed)
    residual = 0.0
    for _ in range(check_points):
        z = PhasePoint(rng.random(Hm.n), rng.uniform(-bounds.p_max / 2, bounds.p_max / 2, Hm.n))
        residual = max(residual, chain.forward(z).distance(flow(Hm, z, 0.0, 1.0, N * steps)))

    inverse_twist = max(opnorm(T.S.d12(q, Q)) for T in maps for q, Q in grid.pairs(Hm.n))
    plan = DecompositionPlan(N=N, epsilon=epsilon, chain=chain, constants=constants, bounds=bounds,
                             composition_residual=float(residual), inverse_twist_bound=float(inverse_twist))
    logger.info('decomposed %s into N=%d steps; composition residual %.3e', Hm.label, N, residual)
    return plan


def verify_md_point(Hm: HamiltonianModel, z: PhasePoint, cls: OrbitClass, steps: int = 4 * STEPS_PER_STINT) -> float:
    """Return `|h^d(z) - tau_m z|` for the time-1 map `h`, with `steps` integrator steps per unit time."""
    w = z
    for _ in range(cls.d):
        w = flow(Hm, w, 0.0, 1.0, steps)
    return w.distance(deck_translate(z, cls.m))


def flow_fixed_point(Hm: HamiltonianModel, z0: PhasePoint, cls: OrbitClass, steps: int = 4 * STEPS_PER_STINT,
                     tol: float = 1e-12) -> PhasePoint:
    """Newton's method on `h^d(z) - tau_m z` in all `2n` phase variables."""
    n = Hm.n
    shift = np.concatenate([cls.m_vector, np.zeros(n)])
    eye = np.eye(2 * n)

    def iterate(x: Vector) -> tuple[Vector, Matrix]:
        z, U = PhasePoint.from_array(x), eye
        for _ in range(cls.d):
            result = tangent_flow(Hm, z, 0.0, 1.0, steps)
            z, U = result.final_point, result.final_U @ U
        return z.as_array(), U

    x = newton_solve(lambda x: iterate(x)[0] - x - shift, lambda x: iterate(x)[1] - eye, z0.as_array(),
                     tol=tol, max_iter=NEWTON_MAX_ITER, what='flow fixed point for class {}'.format(cls))
    return PhasePoint.from_array(x)
