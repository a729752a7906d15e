"""
``twist_orbits.hamlang.nodes``
==============================
Expression trees, the errors raised while building and evaluating them, and
pretty-printing.

"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from twist_orbits.errors import TwistOrbitsError

__all__ = [
    'Binary',
    'Call',
    'Const',
    'ExprAst',
    'ExpressionDomainError',
    'ExpressionError',
    'ExpressionSyntaxError',
    'FUNCTIONS',
    'Neg',
    'UnknownIdentifier',
    'Var',
    'infer_dimension',
    'is_constant',
    'pretty'
]

FUNCTIONS = ('sin', 'cos', 'exp', 'sqrt')


class ExpressionError(TwistOrbitsError):
    """Base class for expression errors."""


class ExpressionSyntaxError(ExpressionError):
    """Malformed expression text; `offset` is the byte offset of the offending token."""

    def __init__(self, message: str, offset: int, text: str) -> None:
        super().__init__('{} at offset {}'.format(message, offset), offset=offset, text=text)
        self.offset = offset


class UnknownIdentifier(ExpressionError):
    """An identifier that is not a variable, constant or function of the language."""

    def __init__(self, name: str, offset: int | None = None, **witness: Any) -> None:
        super().__init__('unknown identifier {!r}'.format(name), name=name, offset=offset, **witness)
        self.name = name
        self.offset = offset


class ExpressionDomainError(ExpressionError):
    """Evaluation left the domain of an operation (division by zero, square root of a negative)."""


@dataclass(frozen=True, slots=True)
class Const:
    value: float
    symbol: str | None = None


@dataclass(frozen=True, slots=True)
class Var:
    """`q<index>`, `p<index>` or `t` (index 0)."""

    kind: str
    index: int = 0


@dataclass(frozen=True, slots=True)
class Neg:
    operand: ExprAst


@dataclass(frozen=True, slots=True)
class Call:
    func: str
    arg: ExprAst


@dataclass(frozen=True, slots=True)
class Binary:
    op: str
    left: ExprAst
    right: ExprAst


type ExprAst = Const | Var | Neg | Call | Binary


def pretty(node: ExprAst) -> str:
    """Fully parenthesised text that parses back to `node`."""
    match node:
        case Const(value, symbol):
            return symbol if symbol else repr(float(value))
        case Var('t', _):
            return 't'
        case Var(kind, index):
            return '{}{}'.format(kind, index)
        case Neg(operand):
            return '(-{})'.format(pretty(operand))
        case Call(func, arg):
            return '{}({})'.format(func, pretty(arg))
        case Binary(op, left, right):
            return '({} {} {})'.format(pretty(left), op, pretty(right))
    raise TypeError('not an expression node:', node)


def _children(node: ExprAst) -> tuple[ExprAst, ...]:
    match node:
        case Neg(operand):
            return (operand,)
        case Call(_, arg):
            return (arg,)
        case Binary(_, left, right):
            return (left, right)
    return ()


def infer_dimension(node: ExprAst) -> int:
    """Largest index of any `q` or `p` variable, at least 1."""
    if isinstance(node, Var):
        return max(node.index, 1)
    return max([1] + [infer_dimension(child) for child in _children(node)])


def is_constant(node: ExprAst) -> bool:
    if isinstance(node, Var):
        return False
    return all(is_constant(child) for child in _children(node))
