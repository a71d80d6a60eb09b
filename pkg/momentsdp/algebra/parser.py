"""
Recursive-descent parser for polynomial expressions.

Grammar (implicit multiplication is not allowed):

    expr   := term (('+' | '-') term)*
    term   := unary ('*' unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' INTEGER)?
    atom   := NUMBER | IDENTIFIER | '(' expr ')'
"""

import re
from fractions import Fraction
from typing import List, NamedTuple, Sequence

from ..exceptions import PolynomialParseError
from .monomials import MultiIndex
from .polynomial import Polynomial

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*^()])"
    r")"
)


class Token(NamedTuple):
    kind: str
    text: str
    position: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos = 0
    length = len(text)
    while pos < length:
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN.match(text, pos)
        if match is None or match.end() == pos:
            raise PolynomialParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append(Token(kind, match.group(kind), start))
        pos = match.end()
    tokens.append(Token('end', '', length))
    return tokens


class _Parser:

    def __init__(self, text: str, context: Sequence[str], exact: bool):
        self.text = text
        self.context = tuple(context)
        self.exact = exact
        self.tokens = tokenize(text)
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def error(self, message: str, token: Token = None) -> PolynomialParseError:
        token = token or self.current
        return PolynomialParseError(message, token.position, self.text)

    def parse(self) -> Polynomial:
        if self.current.kind == 'end':
            raise self.error("empty expression")
        result = self.expr()
        if self.current.kind != 'end':
            raise self.error(f"unexpected token {self.current.text!r}")
        return result

    def expr(self) -> Polynomial:
        result = self.term()
        while self.current.kind == 'op' and self.current.text in '+-':
            op = self.advance().text
            right = self.term()
            result = result + right if op == '+' else result - right
        return result

    def term(self) -> Polynomial:
        result = self.unary()
        while self.current.kind == 'op' and self.current.text == '*':
            self.advance()
            result = result * self.unary()
        return result

    def unary(self) -> Polynomial:
        if self.current.kind == 'op' and self.current.text in '+-':
            op = self.advance().text
            operand = self.unary()
            return -operand if op == '-' else operand
        return self.power()

    def power(self) -> Polynomial:
        base = self.atom()
        if self.current.kind == 'op' and self.current.text == '^':
            self.advance()
            token = self.current
            if token.kind != 'number' or not token.text.isdigit():
                raise self.error("expected non-negative integer exponent", token)
            self.advance()
            return base ** int(token.text)
        return base

    def atom(self) -> Polynomial:
        token = self.current
        if token.kind == 'number':
            self.advance()
            value = Fraction(token.text) if self.exact else float(token.text)
            return Polynomial.constant(value, self.context)
        if token.kind == 'ident':
            if token.text not in self.context:
                raise self.error(f"unknown identifier {token.text!r}", token)
            self.advance()
            return Polynomial.variable(token.text, self.context)
        if token.kind == 'op' and token.text == '(':
            self.advance()
            inner = self.expr()
            if not (self.current.kind == 'op' and self.current.text == ')'):
                raise self.error("expected ')'")
            self.advance()
            return inner
        if token.kind == 'end':
            raise self.error("unexpected end of expression", token)
        raise self.error(f"unexpected token {token.text!r}", token)


def parse_polynomial(text: str, context: Sequence[str], exact: bool = False) -> Polynomial:
    """
    Parse a polynomial expression over `context`.

    Args:
        text: Expression such as ``"x - 0.1*x^2 - u"``
        context: Ordered variable names the expression may use
        exact: Use Fraction coefficients instead of floats

    Returns:
        Polynomial: canonical parsed polynomial

    Raises:
        PolynomialParseError: on syntax errors or unknown identifiers
    """
    return _Parser(text, context, exact).parse()


def parse_monomial(text: str, context: Sequence[str]) -> MultiIndex:
    """Parse a single monomial with unit coefficient, e.g. ``x^2*u``."""
    poly = parse_polynomial(text, context)
    terms = list(poly.terms.items())
    if len(terms) != 1 or terms[0][1] != 1:
        raise PolynomialParseError(f"{text!r} is not a monomial", 0, text)
    return terms[0][0]
