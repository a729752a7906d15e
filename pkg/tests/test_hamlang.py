import math

import numpy as np
import pytest

from twist_orbits.framework import fd_jacobian, relative_error
from twist_orbits.hamlang import (
    Binary,
    Const,
    ExpressionDomainError,
    ExpressionSyntaxError,
    UnknownIdentifier,
    Var,
    evaluate,
    evaluate_with_derivatives,
    infer_dimension,
    parse,
    pretty
)

PENDULUM = 'p1^2/2 - cos(2*pi*q1)/(4*pi^2)'


def test_parse_pendulum():
    ast = parse('p1^2/2 + cos(2*pi*q1)/(4*pi^2)')
    assert isinstance(ast, Binary) and ast.op == '+'
    assert infer_dimension(ast) == 1


def test_precedence_and_associativity():
    assert parse('q1 - p1 - t') == Binary('-', Binary('-', Var('q', 1), Var('p', 1)), Var('t', 0))
    assert parse('2 * 3 ^ 2') == Binary('*', Const(2.0), Binary('^', Const(3.0), Const(2.0)))
    assert evaluate(parse('-2^2'), [0.0], [0.0]) == -4.0
    assert evaluate(parse('8 / 4 / 2'), [0.0], [0.0]) == 1.0


def test_syntax_error_offset():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse('q1 +')
    assert info.value.offset == 4
    with pytest.raises(ExpressionSyntaxError):
        parse('sin q1')
    with pytest.raises(ExpressionSyntaxError):
        parse('q1 ^ p1')
    with pytest.raises(ExpressionSyntaxError) as info:
        parse('q1 $ 2')
    assert info.value.offset == 3


def test_unknown_identifiers():
    with pytest.raises(UnknownIdentifier):
        parse('p3', n=2)
    with pytest.raises(UnknownIdentifier) as info:
        parse('x + q1')
    assert info.value.name == 'x' and info.value.offset == 0
    with pytest.raises(UnknownIdentifier):
        parse('Sin(q1)')
    assert infer_dimension(parse('q1 * p3')) == 3


def test_pretty_round_trip():
    for text in [PENDULUM, 'sqrt(1 + p1^2 + p2^2) - 0.1*sin(2*pi*(q1 - t))', '-q1 * -(p1 - 3e-2)']:
        ast = parse(text)
        assert parse(pretty(ast)) == ast
    assert 'pi' in pretty(parse('2*pi'))


def test_quadratic_jet():
    H, grad, hess = evaluate_with_derivatives(parse('p1^2/2'), [0.3], [2.0])
    assert H == pytest.approx(2.0)
    assert grad.tolist() == pytest.approx([0.0, 2.0])
    assert hess[1, 1] == pytest.approx(1.0)
    assert hess.shape == (2, 2)


def test_cosine_jet():
    H, grad, hess = evaluate_with_derivatives(parse('cos(2*pi*q1)'), [0.0], [0.0])
    assert H == pytest.approx(1.0)
    assert grad[0] == pytest.approx(0.0)
    assert hess[0, 0] == pytest.approx(-4 * math.pi ** 2)


def test_time_is_not_differentiated():
    H, grad, hess = evaluate_with_derivatives(parse('t * p1 * q2'), [0.1, 0.2], [0.3, 0.4], t=2.0)
    assert grad.shape == (4,) and hess.shape == (4, 4)
    assert grad.tolist() == pytest.approx([0.0, 0.6, 0.4, 0.0])
    assert hess[1, 2] == pytest.approx(2.0) and hess[2, 1] == pytest.approx(2.0)


@pytest.mark.parametrize('text', [PENDULUM, 'sqrt(1 + p1^2) + exp(0.1*sin(2*pi*q1)) * p1 / (2 + cos(2*pi*q1))'])
def test_jets_match_finite_differences(text, rng):
    ast = parse(text)
    for _ in range(100):
        z = np.concatenate([rng.random(1), rng.uniform(-2, 2, 1)])
        H, grad, hess = evaluate_with_derivatives(ast, z[:1], z[1:])
        assert H == pytest.approx(evaluate(ast, z[:1], z[1:]), abs=1e-12)
        fd_grad = fd_jacobian(lambda x: evaluate(ast, x[:1], x[1:]), z, 1e-6)
        fd_hess = fd_jacobian(lambda x: evaluate_with_derivatives(ast, x[:1], x[1:])[1], z, 1e-6)
        assert relative_error(fd_grad, grad) < 1e-8
        assert relative_error(fd_hess, hess) < 1e-8


@pytest.mark.parametrize('text, q, p', [
    ('1 / q1', [0.0], [0.0]),
    ('sqrt(p1)', [0.0], [-1.0]),
    ('p1 ^ 0.5', [0.0], [-1.0])
])
def test_domain_errors_echo_the_point(text, q, p):
    with pytest.raises(ExpressionDomainError) as info:
        evaluate_with_derivatives(parse(text), q, p)
    assert info.value.witness['p'].tolist() == p
