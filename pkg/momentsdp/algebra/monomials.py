"""
Multi-index helpers: ordering, enumeration and text form of monomials.

A monomial over a variable context (x_1, ..., x_n) is stored as a tuple of
non-negative exponents of length n. Ordering is graded lexicographic with
x_1 > x_2 > ... > x_n.
"""

from itertools import combinations_with_replacement
from typing import Iterable, List, Sequence, Tuple

MultiIndex = Tuple[int, ...]


def degree(m: MultiIndex) -> int:
    return sum(m)


def partial_degree(m: MultiIndex, positions: Iterable[int]) -> int:
    """Sum of the exponents at the given context positions."""
    return sum(m[i] for i in positions)


def basis_order_key(m: MultiIndex) -> Tuple[int, Tuple[int, ...]]:
    """Ascending layout key: lower degree first, larger lex first within a degree."""
    return degree(m), tuple(-e for e in m)


def print_order_key(m: MultiIndex) -> Tuple[int, Tuple[int, ...]]:
    """Term order for canonical printing: highest degree first."""
    return -degree(m), tuple(-e for e in m)


def unit(n: int, i: int, power: int = 1) -> MultiIndex:
    exps = [0] * n
    exps[i] = power
    return tuple(exps)


def zero(n: int) -> MultiIndex:
    return (0,) * n


def add(m: MultiIndex, k: MultiIndex) -> MultiIndex:
    return tuple(a + b for a, b in zip(m, k))


def monomials_of_degree(n: int, deg: int) -> List[MultiIndex]:
    """All exponent tuples of exactly `deg` over `n` variables, in basis order."""
    if n == 0:
        return [()] if deg == 0 else []
    result = []
    for combo in combinations_with_replacement(range(n), deg):
        exps = [0] * n
        for i in combo:
            exps[i] += 1
        result.append(tuple(exps))
    return sorted(result, key=basis_order_key)


def monomials_up_to(n: int, max_degree: int) -> List[MultiIndex]:
    """All monomials of degree 0..max_degree over `n` variables, in basis order."""
    out: List[MultiIndex] = []
    for deg in range(max_degree + 1):
        out.extend(monomials_of_degree(n, deg))
    return out


def embed(m: Sequence[int], positions: Sequence[int], n: int) -> MultiIndex:
    """Place the exponents of `m` at `positions` of a length-n multi-index."""
    exps = [0] * n
    for e, i in zip(m, positions):
        exps[i] = e
    return tuple(exps)


def format_monomial(m: MultiIndex, context: Sequence[str]) -> str:
    """Text form using explicit `*` and `^`; the constant monomial prints as `1`."""
    factors = []
    for name, e in zip(context, m):
        if e == 1:
            factors.append(name)
        elif e > 1:
            factors.append(f"{name}^{e}")
    return '*'.join(factors) if factors else '1'
