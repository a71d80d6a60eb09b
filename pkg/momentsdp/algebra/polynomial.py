"""
Sparse multivariate polynomials over a named variable context.

Polynomials are immutable. Coefficients are floats in production use; the
arithmetic is generic, so `fractions.Fraction` coefficients give exact
results (the test suite relies on this for the ring properties).
"""

from fractions import Fraction
from numbers import Number
from types import MappingProxyType
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import ContextMismatchError
from .monomials import MultiIndex, basis_order_key, format_monomial, print_order_key

Coefficient = Union[float, int, Fraction]
Scalar = Union[int, float, Fraction]


def _is_scalar(value) -> bool:
    return isinstance(value, Number) and not isinstance(value, bool)


def format_number(value: Coefficient) -> str:
    """Shortest text that parses back to the same coefficient."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        value = float(value)
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


class Polynomial:
    """A canonical sparse polynomial: exponent tuple -> nonzero coefficient."""

    __slots__ = ('_terms', '_context', '_arrays', '_hash')

    def __init__(self, terms: Mapping[MultiIndex, Coefficient], context: Sequence[str]):
        context = tuple(context)
        if len(set(context)) != len(context):
            raise ValueError(f"duplicate variable names in context {context}")
        n = len(context)
        canonical: Dict[MultiIndex, Coefficient] = {}
        for m, c in terms.items():
            m = tuple(int(e) for e in m)
            if len(m) != n:
                raise ContextMismatchError(f"exponent tuple {m} does not match context {context}")
            if any(e < 0 for e in m):
                raise ValueError(f"negative exponent in {m}")
            if c != 0:
                canonical[m] = canonical.get(m, 0) + c
                if canonical[m] == 0:
                    del canonical[m]
        self._terms = canonical
        self._context = context
        self._arrays: Optional[Tuple[np.ndarray, np.ndarray]] = None
        self._hash: Optional[int] = None

    # -- construction -----------------------------------------------------

    @classmethod
    def zero(cls, context: Sequence[str]) -> 'Polynomial':
        return cls({}, context)

    @classmethod
    def constant(cls, value: Coefficient, context: Sequence[str]) -> 'Polynomial':
        return cls({(0,) * len(tuple(context)): value}, context)

    @classmethod
    def variable(cls, name: str, context: Sequence[str]) -> 'Polynomial':
        context = tuple(context)
        if name not in context:
            raise ContextMismatchError(f"unknown variable '{name}' for context {context}")
        exps = tuple(1 if v == name else 0 for v in context)
        return cls({exps: 1}, context)

    @classmethod
    def monomial(cls, m: MultiIndex, context: Sequence[str], coefficient: Coefficient = 1) -> 'Polynomial':
        return cls({tuple(m): coefficient}, context)

    # -- accessors --------------------------------------------------------

    @property
    def context(self) -> Tuple[str, ...]:
        return self._context

    @property
    def terms(self) -> Mapping[MultiIndex, Coefficient]:
        return MappingProxyType(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(sum(m) == 0 for m in self._terms)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(m) for m in self._terms), default=-1)

    def degree_in(self, names: Iterable[str]) -> int:
        """Largest combined exponent of `names` over all terms; -1 for zero."""
        positions = [self._context.index(v) for v in names]
        return max((sum(m[i] for i in positions) for m in self._terms), default=-1)

    def coefficient(self, m: MultiIndex) -> Coefficient:
        return self._terms.get(tuple(m), 0)

    def monomials(self) -> List[MultiIndex]:
        return sorted(self._terms, key=basis_order_key)

    def items(self) -> Iterator[Tuple[MultiIndex, Coefficient]]:
        for m in sorted(self._terms, key=print_order_key):
            yield m, self._terms[m]

    def variables(self) -> Tuple[str, ...]:
        """Context variables that appear with a nonzero exponent."""
        used = set()
        for m in self._terms:
            used.update(i for i, e in enumerate(m) if e)
        return tuple(v for i, v in enumerate(self._context) if i in used)

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other) -> 'Polynomial':
        if isinstance(other, Polynomial):
            if other._context != self._context:
                raise ContextMismatchError(
                    f"context mismatch: {self._context} vs {other._context}"
                )
            return other
        if _is_scalar(other):
            return Polynomial.constant(other, self._context)
        raise TypeError(f"cannot combine Polynomial with {type(other).__name__}")

    def __add__(self, other) -> 'Polynomial':
        other = self._coerce(other)
        terms = dict(self._terms)
        for m, c in other._terms.items():
            terms[m] = terms.get(m, 0) + c
        return Polynomial(terms, self._context)

    __radd__ = __add__

    def __neg__(self) -> 'Polynomial':
        return Polynomial({m: -c for m, c in self._terms.items()}, self._context)

    def __sub__(self, other) -> 'Polynomial':
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> 'Polynomial':
        return self._coerce(other) - self

    def __mul__(self, other) -> 'Polynomial':
        if _is_scalar(other):
            return Polynomial({m: c * other for m, c in self._terms.items()}, self._context)
        other = self._coerce(other)
        terms: Dict[MultiIndex, Coefficient] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                terms[m] = terms.get(m, 0) + c1 * c2
        return Polynomial(terms, self._context)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> 'Polynomial':
        if not isinstance(k, int) or k < 0:
            raise ValueError(f"exponent must be a non-negative integer, got {k!r}")
        result = Polynomial.constant(1, self._context)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self._context == other._context and self._terms == other._terms
        if _is_scalar(other):
            return self == Polynomial.constant(other, self._context)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._context, frozenset(self._terms.items())))
        return self._hash

    # -- calculus and substitution ---------------------------------------

    def differentiate(self, var: str) -> 'Polynomial':
        if var not in self._context:
            raise ContextMismatchError(f"unknown variable '{var}' for context {self._context}")
        i = self._context.index(var)
        terms: Dict[MultiIndex, Coefficient] = {}
        for m, c in self._terms.items():
            e = m[i]
            if e:
                terms[m[:i] + (e - 1,) + m[i + 1:]] = c * e
        return Polynomial(terms, self._context)

    def compose(self, subst: Mapping[str, Union['Polynomial', Scalar]],
                context: Optional[Sequence[str]] = None) -> 'Polynomial':
        """Substitute every context variable by the polynomial `subst[var]`.

        The result lives in the images' common context (or `context` when all
        images are scalars).
        """
        missing = [v for v in self._context if v not in subst]
        if missing:
            raise KeyError(f"missing substitution for {', '.join(missing)}")
        target = None if context is None else tuple(context)
        for v in self._context:
            image = subst[v]
            if isinstance(image, Polynomial):
                if target is None:
                    target = image.context
                elif image.context != target:
                    raise ContextMismatchError(
                        f"substitution images disagree on context: {image.context} vs {target}"
                    )
        if target is None:
            target = self._context
        images = [
            subst[v] if isinstance(subst[v], Polynomial) else Polynomial.constant(subst[v], target)
            for v in self._context
        ]
        powers: List[Dict[int, Polynomial]] = [{0: Polynomial.constant(1, target), 1: p} for p in images]

        def power(i: int, e: int) -> Polynomial:
            cache = powers[i]
            if e not in cache:
                cache[e] = power(i, e - 1) * images[i]
            return cache[e]

        result = Polynomial.zero(target)
        for m, c in self._terms.items():
            term = Polynomial.constant(c, target)
            for i, e in enumerate(m):
                if e:
                    term = term * power(i, e)
            result = result + term
        return result

    def embed(self, context: Sequence[str]) -> 'Polynomial':
        """The same polynomial viewed in a larger context containing this one."""
        context = tuple(context)
        missing = [v for v in self._context if v not in context]
        if missing:
            raise ContextMismatchError(f"context {context} lacks {', '.join(missing)}")
        positions = [context.index(v) for v in self._context]
        terms = {}
        for m, c in self._terms.items():
            exps = [0] * len(context)
            for e, i in zip(m, positions):
                exps[i] = e
            terms[tuple(exps)] = c
        return Polynomial(terms, context)

    def restrict(self, context: Sequence[str]) -> 'Polynomial':
        """Drop context variables that do not occur; inverse of `embed`."""
        context = tuple(context)
        unused = [v for v in self.variables() if v not in context]
        if unused:
            raise ContextMismatchError(f"polynomial depends on {', '.join(unused)}")
        positions = [self._context.index(v) if v in self._context else None for v in context]
        terms = {}
        for m, c in self._terms.items():
            terms[tuple(0 if i is None else m[i] for i in positions)] = c
        return Polynomial(terms, context)

    def chop(self, tol: float) -> 'Polynomial':
        return Polynomial({m: c for m, c in self._terms.items() if abs(c) > tol}, self._context)

    # -- evaluation -------------------------------------------------------

    def evaluate(self, point: Union[Mapping[str, Scalar], Sequence[Scalar]]) -> Coefficient:
        if isinstance(point, Mapping):
            missing = [v for v in self._context if v not in point]
            if missing:
                raise KeyError(f"missing value for {', '.join(missing)}")
            values = [point[v] for v in self._context]
        else:
            values = list(point)
            if len(values) != len(self._context):
                raise ContextMismatchError(
                    f"point of length {len(values)} for context {self._context}"
                )
        total: Coefficient = 0
        for m, c in self._terms.items():
            term = c
            for v, e in zip(values, m):
                if e:
                    term = term * v ** e
            total = total + term
        return total

    def _exponent_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        if self._arrays is None:
            keys = list(self._terms)
            exps = np.array(keys, dtype=float).reshape(len(keys), len(self._context))
            coeffs = np.array([float(self._terms[m]) for m in keys], dtype=float)
            self._arrays = (exps, coeffs)
        return self._arrays

    def evaluate_array(self, values: np.ndarray) -> np.ndarray:
        """Vectorised evaluation; `values` has shape (..., len(context))."""
        values = np.asarray(values, dtype=float)
        exps, coeffs = self._exponent_arrays()
        if not len(coeffs):
            return np.zeros(values.shape[:-1])
        monos = np.prod(values[..., None, :] ** exps, axis=-1)
        return monos @ coeffs

    # -- text -------------------------------------------------------------

    def to_string(self) -> str:
        if not self._terms:
            return '0'
        pieces: List[str] = []
        for m, c in self.items():
            negative = c < 0
            magnitude = -c if negative else c
            if sum(m) == 0:
                body = format_number(magnitude)
            elif magnitude == 1:
                body = format_monomial(m, self._context)
            else:
                body = f"{format_number(magnitude)}*{format_monomial(m, self._context)}"
            if not pieces:
                pieces.append(f"-{body}" if negative else body)
            else:
                pieces.append(f"- {body}" if negative else f"+ {body}")
        return ' '.join(pieces)

    def __str__(self) -> str:
        return self.to_string()

    def __repr__(self) -> str:
        return f"Polynomial({self.to_string()!r}, context={self._context})"


def add(p: Polynomial, q: Polynomial) -> Polynomial:
    return p + q


def multiply(p: Polynomial, q: Polynomial) -> Polynomial:
    return p * q


def differentiate(p: Polynomial, var: str) -> Polynomial:
    return p.differentiate(var)


def compose(p: Polynomial, subst: Mapping[str, Union[Polynomial, Scalar]]) -> Polynomial:
    return p.compose(subst)


def evaluate(p: Polynomial, point: Union[Mapping[str, Scalar], Sequence[Scalar]]) -> Coefficient:
    return p.evaluate(point)
