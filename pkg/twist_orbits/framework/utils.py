"""
``twist_orbits.framework.utils``
================================
Array aliases and small numerical helpers shared by the framework.

"""

from typing import Callable

import numpy as np

from twist_orbits.errors import DimensionMismatch, InternalInconsistency, NewtonDivergence, NonFiniteState

type Vector = np.ndarray
type Matrix = np.ndarray
type ScalarField = Callable[[Vector, Vector], float]
type VectorField = Callable[[Vector, Vector], Vector]
type MatrixField = Callable[[Vector, Vector], Matrix]


def as_vector(x, n: int | None = None, *, name: str = 'vector') -> Vector:
    """Return `x` as a finite 1-D float array, of length `n` if given."""
    arr = np.array(x, dtype=float, ndmin=1)
    if arr.ndim != 1:
        raise DimensionMismatch('{} must be one-dimensional, got shape {}'.format(name, arr.shape))
    if n is not None and arr.shape[0] != n:
        raise DimensionMismatch('{} must have length {}, got {}'.format(name, n, arr.shape[0]))
    if not np.all(np.isfinite(arr)):
        raise NonFiniteState('{} has non-finite entries'.format(name), value=arr)
    return arr


def sym(M: Matrix) -> Matrix:
    """Return the symmetric part `(M + M^T)/2`."""
    return 0.5 * (M + M.T)


def opnorm(M: Matrix) -> float:
    """Return the spectral (operator 2-) norm of `M`."""
    return float(np.linalg.norm(M, 2))


def check_finite(x, what: str) -> None:
    """Raise `NonFiniteState` unless every entry of `x` is finite."""
    if not np.all(np.isfinite(x)):
        raise NonFiniteState('non-finite {}'.format(what), value=np.asarray(x))


def fd_jacobian(f: Callable[[Vector], np.ndarray], x: Vector, h: float) -> np.ndarray:
    """
    Central-difference derivative of `f` at `x`.

    The result has shape `f(x).shape + (len(x),)`, so for scalar `f` it is the
    gradient and for vector `f` the Jacobian.

    """
    x = np.asarray(x, dtype=float)
    columns = []
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        columns.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    return np.stack(columns, axis=-1)


def relative_error(approx: np.ndarray, exact: np.ndarray) -> float:
    """Return `|approx - exact| / max(|exact|, 1)`."""
    approx, exact = np.asarray(approx, dtype=float), np.asarray(exact, dtype=float)
    return float(np.linalg.norm(approx - exact) / max(np.linalg.norm(exact), 1.0))


def rk4(
        rhs: Callable[[float, np.ndarray], np.ndarray],
        y0: np.ndarray,
        t0: float,
        t1: float,
        steps: int,
        *,
        record: bool = False
) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """
    Integrate `y' = rhs(t, y)` from `t0` to `t1` with `steps` classical
    fourth-order Runge-Kutta steps.

    Returns the final state, or `(times, states)` when `record` is set.

    """
    if steps < 1:
        raise ValueError('steps must be at least 1:', steps)
    y = np.array(y0, dtype=float)
    h = (t1 - t0) / steps
    times = [t0]
    states = [y.copy()]
    t = t0
    for i in range(steps):
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (i + 1) * h
        check_finite(y, 'integrator state at t={:.6g}'.format(t))
        if record:
            times.append(t)
            states.append(y.copy())
    if record:
        return np.array(times), np.array(states)
    return y


def newton_solve(
        residual: Callable[[Vector], Vector],
        jacobian: Callable[[Vector], Matrix],
        x0: Vector,
        *,
        tol: float,
        max_iter: int,
        what: str = 'Newton iteration',
        error: type[Exception] | None = None
) -> Vector:
    """
    Damped Newton iteration for `residual(x) = 0`.

    Each step is halved until the residual norm decreases. A stalled
    iteration is accepted if it is within `100 * tol`, otherwise `error`
    (default `NewtonDivergence`) is raised with the last iterate.

    """
    error = error or NewtonDivergence
    x = np.array(x0, dtype=float)
    r = residual(x)
    norm_r = float(np.linalg.norm(r))
    for _ in range(max_iter):
        if norm_r < tol:
            return x
        try:
            step = np.linalg.solve(jacobian(x), -r)
        except np.linalg.LinAlgError:
            raise InternalInconsistency('singular Jacobian in {}'.format(what), x=x) from None
        lam = 1.0
        while lam > 1e-10:
            x_new = x + lam * step
            r_new = residual(x_new)
            norm_new = float(np.linalg.norm(r_new))
            if np.isfinite(norm_new) and norm_new < norm_r:
                break
            lam /= 2
        else:
            if norm_r < 100 * tol:
                return x
            raise error('{} stalled at residual {:.3e}'.format(what, norm_r), x=x, residual=norm_r)
        x, r, norm_r = x_new, r_new, norm_new
    if norm_r < tol:
        return x
    raise error('{} did not converge in {} iterations (residual {:.3e})'.format(what, max_iter, norm_r),
                x=x, residual=norm_r)
