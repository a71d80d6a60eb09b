"""
Polynomial algebra: multi-indices, sparse polynomials and the expression parser.
"""

from .monomials import MultiIndex, basis_order_key, format_monomial, monomials_up_to
from .parser import parse_monomial, parse_polynomial
from .polynomial import Polynomial, add, compose, differentiate, evaluate, format_number, multiply

__all__ = [
    'MultiIndex',
    'Polynomial',
    'add',
    'multiply',
    'differentiate',
    'compose',
    'evaluate',
    'format_number',
    'parse_polynomial',
    'parse_monomial',
    'monomials_up_to',
    'basis_order_key',
    'format_monomial',
]
