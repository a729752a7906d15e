"""
``twist_orbits.hamlang.parser``
===============================
Tokenizer and recursive-descent parser.

"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .nodes import (
    FUNCTIONS,
    Binary,
    Call,
    Const,
    ExprAst,
    ExpressionSyntaxError,
    Neg,
    UnknownIdentifier,
    Var,
    is_constant
)

__all__ = [
    'Token',
    'parse',
    'tokenize'
]

_TOKEN = re.compile(r'''
    (?P<space>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
''', re.VERBOSE)
_VARIABLE = re.compile(r'([qp])([1-9]\d*)')


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    offset: int


def tokenize(text: str) -> list[Token]:
    """Split `text` into tokens; the list ends with an ``end`` token."""
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None:
            raise ExpressionSyntaxError('unexpected character {!r}'.format(text[pos]), _byte_offset(text, pos), text)
        if match.lastgroup != 'space':
            tokens.append(Token(match.lastgroup, match.group(), _byte_offset(text, pos)))
        pos = match.end()
    tokens.append(Token('end', '', _byte_offset(text, len(text))))
    return tokens


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode('utf-8'))


class _Parser:

    __slots__ = ['text', 'tokens', 'pos', 'n']

    def __init__(self, text: str, n: int | None) -> None:
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0
        self.n = n

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def error(self, message: str) -> ExpressionSyntaxError:
        token = self.current
        found = 'end of input' if token.kind == 'end' else repr(token.text)
        return ExpressionSyntaxError('{}, found {}'.format(message, found), token.offset, self.text)

    def expect(self, text: str) -> None:
        if self.current.text != text or self.current.kind != 'op':
            raise self.error('expected {!r}'.format(text))
        self.advance()

    def parse(self) -> ExprAst:
        node = self.expr()
        if self.current.kind != 'end':
            raise self.error('unexpected token')
        return node

    def expr(self) -> ExprAst:
        node = self.term()
        while self.current.kind == 'op' and self.current.text in '+-':
            op = self.advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> ExprAst:
        node = self.unary()
        while self.current.kind == 'op' and self.current.text in '*/':
            op = self.advance().text
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> ExprAst:
        if self.current.kind == 'op' and self.current.text == '-':
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> ExprAst:
        base = self.primary()
        if self.current.kind == 'op' and self.current.text == '^':
            token = self.advance()
            exponent = self.unary()
            if not is_constant(exponent):
                raise ExpressionSyntaxError('exponent must be constant', token.offset, self.text)
            return Binary('^', base, exponent)
        return base

    def primary(self) -> ExprAst:
        token = self.current
        if token.kind == 'number':
            self.advance()
            return Const(float(token.text))
        if token.kind == 'ident':
            self.advance()
            return self.identifier(token)
        if token.kind == 'op' and token.text == '(':
            self.advance()
            node = self.expr()
            self.expect(')')
            return node
        raise self.error('expected a number, identifier or "("')

    def identifier(self, token: Token) -> ExprAst:
        name = token.text
        if name in FUNCTIONS:
            self.expect('(')
            arg = self.expr()
            self.expect(')')
            return Call(name, arg)
        if name == 'pi':
            return Const(math.pi, 'pi')
        if name == 't':
            return Var('t', 0)
        match = _VARIABLE.fullmatch(name)
        if match is None:
            raise UnknownIdentifier(name, token.offset)
        index = int(match.group(2))
        if self.n is not None and index > self.n:
            raise UnknownIdentifier(name, token.offset, n=self.n)
        return Var(match.group(1), index)


def parse(text: str, n: int | None = None) -> ExprAst:
    """
    Parse `text` into an expression tree.

    When `n` is given, variables with an index above `n` raise
    `UnknownIdentifier`; otherwise the dimension is inferred from the text
    (see `infer_dimension`).

    """
    if n is not None and n < 1:
        raise ValueError('dimension must be positive:', n)
    return _Parser(text, n).parse()
