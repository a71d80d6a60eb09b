"""
Tests for the polynomial algebra and the expression parser.
"""

from fractions import Fraction

import numpy as np
import pytest

from momentsdp.algebra import Polynomial, format_monomial, monomials_up_to, parse_monomial, parse_polynomial
from momentsdp.exceptions import ContextMismatchError, PolynomialParseError

XY = ('x', 'y')


def random_polynomial(rng: np.random.Generator, context=XY, terms: int = 4, degree: int = 3) -> Polynomial:
    coefficients = {}
    for _ in range(terms):
        m = tuple(int(e) for e in rng.integers(0, degree + 1, size=len(context)))
        coefficients[m] = Fraction(int(rng.integers(-9, 10)), int(rng.choice([1, 2, 4])))
    return Polynomial(coefficients, context)


def test_parse_and_canonical_print():
    p = parse_polynomial('3*x - x^2', ('x',))
    assert str(p) == '-x^2 + 3*x'
    assert parse_polynomial('(x + y)^2', XY) == parse_polynomial('x^2 + 2*x*y + y^2', XY)
    assert str(parse_polynomial('2 - 2', XY)) == '0'
    assert str(parse_polynomial('-(x*y) + 0.5', XY)) == '-x*y + 0.5'


def test_printed_form_parses_back():
    rng = np.random.default_rng(7)
    for _ in range(20):
        p = random_polynomial(rng)
        q = parse_polynomial(str(p), XY, exact=True)
        assert q == p


def test_ring_properties_are_exact():
    rng = np.random.default_rng(11)
    for _ in range(25):
        p, q, r = (random_polynomial(rng) for _ in range(3))
        assert (p + q) * r == p * r + q * r
        assert (p * q) * r == p * (q * r)
        assert p + q == q + p
        assert p - p == Polynomial.zero(XY)
        assert p ** 3 == p * p * p


def test_zero_coefficients_are_dropped():
    p = Polynomial({(1, 0): 2, (0, 1): 0}, XY)
    assert list(p.terms) == [(1, 0)]
    assert (p - p).is_zero()
    assert p.degree() == 1
    assert Polynomial.zero(XY).degree() == -1


def test_differentiate():
    p = parse_polynomial('x^3*y + 2*y', XY)
    assert p.differentiate('x') == parse_polynomial('3*x^2*y', XY)
    assert p.differentiate('y') == parse_polynomial('x^3 + 2', XY)
    with pytest.raises(ContextMismatchError):
        p.differentiate('z')


def test_compose_moves_to_the_image_context():
    p = parse_polynomial('x^2', ('x',))
    q = p.compose({'x': parse_polynomial('y + 1', ('y',))})
    assert q.context == ('y',)
    assert q == parse_polynomial('y^2 + 2*y + 1', ('y',))
    assert p.compose({'x': 3}).evaluate([0]) == 9


def test_context_mismatch_raises():
    p = parse_polynomial('x', ('x',))
    q = parse_polynomial('x', XY)
    with pytest.raises(ContextMismatchError):
        p + q
    with pytest.raises(ContextMismatchError):
        p.evaluate([1.0, 2.0])


def test_embed_and_restrict():
    p = parse_polynomial('x^2 - 1', ('x',))
    wide = p.embed(('x', 'u'))
    assert wide.context == ('x', 'u')
    assert wide.coefficient((2, 0)) == 1
    assert wide.restrict(('x',)) == p
    with pytest.raises(ContextMismatchError):
        parse_polynomial('x*u', ('x', 'u')).restrict(('x',))


def test_evaluate_matches_vectorised_evaluation():
    p = parse_polynomial('x^2*y - 3*y + 0.25', XY)
    points = np.array([[0.0, 0.0], [1.0, 2.0], [-1.5, 0.5]])
    expected = [p.evaluate(point) for point in points]
    np.testing.assert_allclose(p.evaluate_array(points), expected)
    assert p.evaluate({'x': 1.0, 'y': 2.0}) == pytest.approx(-3.75)


def test_exact_parsing_keeps_fractions():
    p = parse_polynomial('0.1*x', ('x',), exact=True)
    assert p.coefficient((1,)) == Fraction(1, 10)


@pytest.mark.parametrize('text, position', [
    ('x + * 2', 4),
    ('x + z', 4),
    ('2x', 1),
    ('x^1.5', 2),
    ('(x + 1', 6),
    ('x $ 1', 2),
])
def test_parse_errors_report_the_offset(text, position):
    with pytest.raises(PolynomialParseError) as info:
        parse_polynomial(text, ('x',))
    assert info.value.position == position


def test_empty_expression_is_rejected():
    with pytest.raises(PolynomialParseError):
        parse_polynomial('   ', ('x',))


def test_parse_monomial():
    assert parse_monomial('x^2*u', ('x', 'u')) == (2, 1)
    assert parse_monomial('1', ('x', 'u')) == (0, 0)
    with pytest.raises(PolynomialParseError):
        parse_monomial('2*x', ('x',))
    with pytest.raises(PolynomialParseError):
        parse_monomial('x + 1', ('x',))


def test_monomial_enumeration_and_format():
    assert monomials_up_to(2, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert len(monomials_up_to(3, 4)) == 35
    assert format_monomial((2, 1), XY) == 'x^2*y'
    assert format_monomial((0, 0), XY) == '1'
