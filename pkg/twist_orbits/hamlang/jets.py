"""
``twist_orbits.hamlang.jets``
=============================
Second-order forward-mode differentiation.

A `Dual2` carries a value, its gradient and its Hessian with respect to all
`2n + 1` variables `(q_1..q_n, p_1..p_n, t)`. Products and compositions
propagate all three by the product and chain rules; Hessians stay exactly
symmetric because every update adds a symmetric term.

"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .nodes import (
    Binary,
    Call,
    Const,
    ExprAst,
    ExpressionDomainError,
    Neg,
    UnknownIdentifier,
    Var
)

__all__ = [
    'Dual2',
    'evaluate',
    'evaluate_with_derivatives'
]


class Dual2:
    """A second-order jet."""

    __slots__ = ['value', 'grad', 'hess']

    def __init__(self, value: float, grad: np.ndarray, hess: np.ndarray) -> None:
        self.value = value
        self.grad = grad
        self.hess = hess

    @classmethod
    def constant(cls, value: float, size: int) -> Dual2:
        return cls(float(value), np.zeros(size), np.zeros((size, size)))

    @classmethod
    def variable(cls, value: float, index: int, size: int) -> Dual2:
        grad = np.zeros(size)
        grad[index] = 1.0
        return cls(float(value), grad, np.zeros((size, size)))

    def __add__(self, other: Dual2) -> Dual2:
        return Dual2(self.value + other.value, self.grad + other.grad, self.hess + other.hess)

    def __sub__(self, other: Dual2) -> Dual2:
        return Dual2(self.value - other.value, self.grad - other.grad, self.hess - other.hess)

    def __neg__(self) -> Dual2:
        return Dual2(-self.value, -self.grad, -self.hess)

    def __mul__(self, other: Dual2) -> Dual2:
        cross = np.outer(self.grad, other.grad)
        return Dual2(
            self.value * other.value,
            self.value * other.grad + other.value * self.grad,
            self.value * other.hess + other.value * self.hess + cross + cross.T
        )

    def __truediv__(self, other: Dual2) -> Dual2:
        if other.value == 0.0:
            raise ExpressionDomainError('division by zero')
        return self * other.apply(lambda x: 1 / x, lambda x: -1 / x ** 2, lambda x: 2 / x ** 3)

    def apply(self, f: Callable[[float], float], df: Callable[[float], float],
              d2f: Callable[[float], float]) -> Dual2:
        """Chain rule for a scalar function with first and second derivatives `df`, `d2f`."""
        x = self.value
        slope, curvature = df(x), d2f(x)
        return Dual2(f(x), slope * self.grad, slope * self.hess + curvature * np.outer(self.grad, self.grad))

    def power(self, c: float) -> Dual2:
        """`self ** c` for a constant exponent `c`."""
        size = self.grad.shape[0]
        if c == 0:
            return Dual2.constant(1.0, size)
        if c == 1:
            return self
        x = self.value
        integral = float(c).is_integer()
        if x < 0 and not integral:
            raise ExpressionDomainError('negative base {} raised to non-integer power {}'.format(x, c))
        if x == 0 and (c < 0 or (not integral and c < 2)):
            raise ExpressionDomainError('zero raised to power {} is not twice differentiable'.format(c))
        return self.apply(lambda y: y ** c, lambda y: c * y ** (c - 1), lambda y: c * (c - 1) * y ** (c - 2))

    def __repr__(self) -> str:
        return 'Dual2({}, grad={}, hess={})'.format(self.value, self.grad.tolist(), self.hess.tolist())


def _sqrt(x: Dual2) -> Dual2:
    if x.value <= 0:
        raise ExpressionDomainError('sqrt of non-positive value {} is not differentiable'.format(x.value))
    return x.apply(math.sqrt, lambda y: 0.5 / math.sqrt(y), lambda y: -0.25 / y ** 1.5)


_FUNCTIONS: dict[str, Callable[[Dual2], Dual2]] = {
    'sin': lambda x: x.apply(math.sin, math.cos, lambda y: -math.sin(y)),
    'cos': lambda x: x.apply(math.cos, lambda y: -math.sin(y), lambda y: -math.cos(y)),
    'exp': lambda x: x.apply(math.exp, math.exp, math.exp),
    'sqrt': _sqrt
}


def _jet(node: ExprAst, variables: dict[tuple[str, int], Dual2], size: int) -> Dual2:
    match node:
        case Const(value, _):
            return Dual2.constant(value, size)
        case Var(kind, index):
            try:
                return variables[kind, index]
            except KeyError:
                raise UnknownIdentifier(kind if kind == 't' else '{}{}'.format(kind, index)) from None
        case Neg(operand):
            return -_jet(operand, variables, size)
        case Call(func, arg):
            return _FUNCTIONS[func](_jet(arg, variables, size))
        case Binary('^', left, right):
            return _jet(left, variables, size).power(_jet(right, variables, size).value)
        case Binary(op, left, right):
            a, b = _jet(left, variables, size), _jet(right, variables, size)
            match op:
                case '+':
                    return a + b
                case '-':
                    return a - b
                case '*':
                    return a * b
                case '/':
                    return a / b
    raise TypeError('not an expression node:', node)


def evaluate_with_derivatives(ast: ExprAst, q, p, t: float = 0.0) -> tuple[float, np.ndarray, np.ndarray]:
    """
    Return `(H, grad H, hess H)` at `(q, p, t)`, the derivatives taken with
    respect to `(q_1..q_n, p_1..p_n)`.

    """
    q, p = np.atleast_1d(np.asarray(q, dtype=float)), np.atleast_1d(np.asarray(p, dtype=float))
    n = q.shape[0]
    size = 2 * n + 1
    variables = {('q', i + 1): Dual2.variable(q[i], i, size) for i in range(n)}
    variables.update({('p', i + 1): Dual2.variable(p[i], n + i, size) for i in range(n)})
    variables['t', 0] = Dual2.variable(t, 2 * n, size)
    try:
        jet = _jet(ast, variables, size)
    except ExpressionDomainError as exc:
        raise ExpressionDomainError(exc.message, q=q, p=p, t=t) from None
    except OverflowError:
        raise ExpressionDomainError('overflow', q=q, p=p, t=t) from None
    return jet.value, jet.grad[:2 * n], jet.hess[:2 * n, :2 * n]


def _value(node: ExprAst, env: dict[tuple[str, int], float]) -> float:
    match node:
        case Const(value, _):
            return value
        case Var(kind, index):
            try:
                return env[kind, index]
            except KeyError:
                raise UnknownIdentifier(kind if kind == 't' else '{}{}'.format(kind, index)) from None
        case Neg(operand):
            return -_value(operand, env)
        case Call('sqrt', arg):
            x = _value(arg, env)
            if x < 0:
                raise ExpressionDomainError('sqrt of negative value {}'.format(x))
            return math.sqrt(x)
        case Call(func, arg):
            return getattr(math, func)(_value(arg, env))
        case Binary(op, left, right):
            a, b = _value(left, env), _value(right, env)
            match op:
                case '+':
                    return a + b
                case '-':
                    return a - b
                case '*':
                    return a * b
                case '/':
                    if b == 0:
                        raise ExpressionDomainError('division by zero')
                    return a / b
                case '^':
                    if a < 0 and not float(b).is_integer():
                        raise ExpressionDomainError('negative base {} raised to non-integer power {}'.format(a, b))
                    return a ** b
    raise TypeError('not an expression node:', node)


def evaluate(ast: ExprAst, q, p, t: float = 0.0) -> float:
    """Return `H(q, p, t)` without derivatives."""
    q, p = np.atleast_1d(np.asarray(q, dtype=float)), np.atleast_1d(np.asarray(p, dtype=float))
    env = {('q', i + 1): float(x) for i, x in enumerate(q)}
    env.update({('p', i + 1): float(x) for i, x in enumerate(p)})
    env['t', 0] = float(t)
    try:
        return float(_value(ast, env))
    except ExpressionDomainError as exc:
        raise ExpressionDomainError(exc.message, q=q, p=p, t=t) from None
    except (OverflowError, ZeroDivisionError) as exc:
        raise ExpressionDomainError(str(exc), q=q, p=p, t=t) from None
