"""
In-memory description of a controlled polynomial jump-diffusion problem.

    dx = f(x, u) dt + g(x, u) dw + sum_i (phi_i(x, u) - x) dN_i,
    N_i counting processes with intensities lambda_i(x, u) >= 0,
    constraints b_i(x, u) >= 0,
    objective  E[ int_0^T c(x, u) dt + h(x(T), u(T)) ]  (or the long-run mean of h).

Nonnegativity of the intensities on the feasible set and finiteness of the
moments are assertions made by whoever writes the model; neither is proven here.
"""

import math
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from typing import List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from shared.types import InitialKind, Sense

from ..algebra.monomials import MultiIndex, format_monomial
from ..algebra.polynomial import Polynomial

_IDENTIFIER_CHARS = set('abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_')


@dataclass(frozen=True)
class Jump:
    """One jump channel: the post-jump state phi(x, u) and its intensity."""

    jump_map: Tuple[Polynomial, ...]
    intensity: Polynomial


@dataclass(frozen=True)
class Constraint:
    """Named polynomial inequality b(x, u) >= 0."""

    name: str
    polynomial: Polynomial


@dataclass(frozen=True)
class InitialDistribution:
    """Distribution of x(0) over the state variables."""

    kind: InitialKind
    point: Optional[Tuple[float, ...]] = None
    mean: Optional[Tuple[float, ...]] = None
    covariance: Optional[Tuple[Tuple[float, ...], ...]] = None
    moments: Optional[Tuple[Tuple[MultiIndex, float], ...]] = None

    @classmethod
    def dirac(cls, point: Sequence[float]) -> 'InitialDistribution':
        return cls(InitialKind.DIRAC, point=tuple(float(v) for v in point))

    @classmethod
    def gaussian(cls, mean: Sequence[float], covariance: Sequence[Sequence[float]]) -> 'InitialDistribution':
        return cls(
            InitialKind.GAUSSIAN,
            mean=tuple(float(v) for v in mean),
            covariance=tuple(tuple(float(v) for v in row) for row in covariance),
        )

    @classmethod
    def explicit(cls, moments: Mapping[MultiIndex, float]) -> 'InitialDistribution':
        ordered = tuple(sorted((tuple(m), float(v)) for m, v in moments.items()))
        return cls(InitialKind.EXPLICIT, moments=ordered)

    @cached_property
    def _gaussian_moment(self):
        mu = np.asarray(self.mean, dtype=float)
        sigma = np.asarray(self.covariance, dtype=float)

        # E[x^m] = mu_i E[x^(m-e_i)] + sum_j Sigma_ij (m-e_i)_j E[x^(m-e_i-e_j)]
        @lru_cache(maxsize=None)
        def moment(m: MultiIndex) -> float:
            if any(e < 0 for e in m):
                return 0.0
            if sum(m) == 0:
                return 1.0
            i = next(k for k, e in enumerate(m) if e)
            reduced = m[:i] + (m[i] - 1,) + m[i + 1:]
            value = mu[i] * moment(reduced)
            for j, e in enumerate(reduced):
                if e and sigma[i, j] != 0.0:
                    value += sigma[i, j] * e * moment(reduced[:j] + (e - 1,) + reduced[j + 1:])
            return float(value)

        return moment

    def moment(self, m: MultiIndex) -> float:
        """E[x(0)^m] for a multi-index over the state variables."""
        m = tuple(m)
        if self.kind is InitialKind.DIRAC:
            return float(math.prod(v ** e for v, e in zip(self.point, m)))
        if self.kind is InitialKind.GAUSSIAN:
            return self._gaussian_moment(m)
        table = dict(self.moments or ())
        if m not in table:
            raise KeyError(m)
        return table[m]


@dataclass(frozen=True)
class RelaxationOptions:
    """Per-model knobs for the moment relaxation.

    odd_powers maps a constraint name to the odd k_max of its odd-power rows;
    such constraints are encoded by rows instead of a localizing matrix.
    """

    moment_inputs: Optional[bool] = None
    scale: Optional[float] = None
    odd_powers: Tuple[Tuple[str, int], ...] = ()

    def odd_power(self, name: str) -> Optional[int]:
        return dict(self.odd_powers).get(name)


@dataclass(frozen=True)
class BasisOverride:
    """Explicit state/input monomial layout, as full-context multi-indices."""

    state: Tuple[MultiIndex, ...]
    input: Tuple[MultiIndex, ...] = ()


@dataclass(frozen=True)
class JumpDiffusionModel:
    """A (controlled) polynomial jump-diffusion problem; immutable after construction."""

    state_vars: Tuple[str, ...]
    input_vars: Tuple[str, ...]
    drift: Tuple[Polynomial, ...]
    diffusion: Tuple[Tuple[Polynomial, ...], ...]
    jumps: Tuple[Jump, ...]
    constraints: Tuple[Constraint, ...]
    running_cost: Polynomial
    terminal_cost: Polynomial
    initial: InitialDistribution
    horizon: Optional[float] = None
    steps: Optional[int] = None
    sense: Sense = Sense.MIN
    relaxation: RelaxationOptions = field(default_factory=RelaxationOptions)
    basis_override: Optional[BasisOverride] = None
    name: str = 'model'

    @property
    def variables(self) -> Tuple[str, ...]:
        return self.state_vars + self.input_vars

    @property
    def n(self) -> int:
        return len(self.state_vars)

    @property
    def n_u(self) -> int:
        return len(self.input_vars)

    @property
    def n_w(self) -> int:
        return len(self.diffusion[0]) if self.diffusion else 0

    @property
    def is_steady_state(self) -> bool:
        return self.horizon is None

    @property
    def is_controlled(self) -> bool:
        return self.n_u > 0

    @property
    def state_positions(self) -> Tuple[int, ...]:
        return tuple(range(self.n))

    @property
    def input_positions(self) -> Tuple[int, ...]:
        return tuple(range(self.n, self.n + self.n_u))

    @cached_property
    def diffusion_covariance(self) -> Tuple[Tuple[Polynomial, ...], ...]:
        """g g^T expanded symbolically once per model."""
        zero = Polynomial.zero(self.variables)
        rows = []
        for j in range(self.n):
            row = []
            for l in range(self.n):
                entry = zero
                for k in range(self.n_w):
                    entry = entry + self.diffusion[j][k] * self.diffusion[l][k]
                row.append(entry)
            rows.append(tuple(row))
        return tuple(rows)

    def polynomial(self, text: str) -> Polynomial:
        """Parse an expression over this model's variables."""
        from ..algebra.parser import parse_polynomial

        return parse_polynomial(text, self.variables)

    def with_objective(self, running: Optional[Polynomial] = None,
                       terminal: Optional[Polynomial] = None,
                       sense: Optional[Sense] = None) -> 'JumpDiffusionModel':
        """Copy with a replaced cost; unspecified parts become zero / keep the sense."""
        zero = Polynomial.zero(self.variables)
        return replace(
            self,
            running_cost=running if running is not None else zero,
            terminal_cost=terminal if terminal is not None else zero,
            sense=sense or self.sense,
        )

    def with_horizon(self, horizon: Optional[float], steps: Optional[int] = None) -> 'JumpDiffusionModel':
        return replace(self, horizon=horizon, steps=steps if steps is not None else self.steps)

    def iter_polynomials(self):
        """Yield (field name, polynomial) for every polynomial in the model."""
        for i, p in enumerate(self.drift):
            yield f"drift.{self.state_vars[i]}", p
        for i, row in enumerate(self.diffusion):
            for k, p in enumerate(row):
                yield f"diffusion.{self.state_vars[i]}.{k + 1}", p
        for j, jump in enumerate(self.jumps, start=1):
            for i, p in enumerate(jump.jump_map):
                yield f"jump.{j}.map.{self.state_vars[i]}", p
            yield f"jump.{j}.intensity", jump.intensity
        for c in self.constraints:
            yield f"constraints.{c.name}", c.polynomial
        yield 'cost.running', self.running_cost
        yield 'cost.terminal', self.terminal_cost


class Diagnostic(NamedTuple):
    """One validation finding: the offending field and what is wrong with it."""

    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field} {self.message}"


def _check_identifiers(names: Sequence[str], label: str, out: List[Diagnostic]) -> None:
    for name in names:
        if not name or name[0].isdigit() or not set(name) <= _IDENTIFIER_CHARS:
            out.append(Diagnostic(label, f"has invalid variable name {name!r}"))


def validate(model: JumpDiffusionModel) -> List[Diagnostic]:
    """
    Check every model invariant.

    Args:
        model: Model to check

    Returns:
        List[Diagnostic]: empty iff the model is valid
    """
    out: List[Diagnostic] = []
    context = model.variables
    _check_identifiers(model.state_vars, 'vars', out)
    _check_identifiers(model.input_vars, 'inputs', out)
    if not model.state_vars:
        out.append(Diagnostic('vars', 'must declare at least one state variable'))
    if len(set(context)) != len(context):
        out.append(Diagnostic('vars', 'state and input names must be distinct'))

    if len(model.drift) != model.n:
        out.append(Diagnostic('drift', f"has {len(model.drift)} entries for {model.n} states"))
    if len(model.diffusion) != model.n:
        out.append(Diagnostic('diffusion', f"has {len(model.diffusion)} rows for {model.n} states"))
    elif len({len(row) for row in model.diffusion}) > 1:
        out.append(Diagnostic('diffusion', 'rows have different lengths'))
    for j, jump in enumerate(model.jumps, start=1):
        if len(jump.jump_map) != model.n:
            out.append(Diagnostic(f"jump.{j}.map", f"has {len(jump.jump_map)} entries for {model.n} states"))

    for name, poly in model.iter_polynomials():
        if poly.context != context:
            undeclared = [
                v for v in poly.variables() if v not in context
            ]
            if undeclared:
                out.append(Diagnostic(name, f"references undeclared variable {', '.join(undeclared)}"))
            else:
                out.append(Diagnostic(name, f"context {poly.context} differs from {context}"))
            continue
        if any(not math.isfinite(float(c)) for c in poly.terms.values()):
            out.append(Diagnostic(name, 'has a non-finite coefficient'))

    out.extend(_validate_initial(model))

    if model.horizon is not None and (not math.isfinite(model.horizon) or model.horizon < 0):
        out.append(Diagnostic('horizon.T', 'must be a non-negative number or steady-state'))
    if model.steps is not None and model.steps < 1:
        out.append(Diagnostic('horizon.steps', 'must be at least 1'))

    names = {c.name for c in model.constraints}
    if len(names) != len(model.constraints):
        out.append(Diagnostic('constraints', 'names must be unique'))
    for name, k_max in model.relaxation.odd_powers:
        if name not in names:
            out.append(Diagnostic(f"relaxation.odd_powers.{name}", 'names no constraint'))
        if k_max < 1 or k_max % 2 == 0:
            out.append(Diagnostic(f"relaxation.odd_powers.{name}", 'must be an odd positive integer'))
    if model.relaxation.scale is not None and not model.relaxation.scale > 0:
        out.append(Diagnostic('relaxation.scale', 'must be positive'))

    if model.basis_override is not None:
        out.extend(_validate_basis_override(model))
    return out


def _validate_initial(model: JumpDiffusionModel) -> List[Diagnostic]:
    out: List[Diagnostic] = []
    initial = model.initial
    n = model.n
    if initial.kind is InitialKind.DIRAC:
        if initial.point is None or len(initial.point) != n:
            out.append(Diagnostic('initial.point', f"must have {n} entries"))
        elif not all(math.isfinite(v) for v in initial.point):
            out.append(Diagnostic('initial.point', 'must be finite'))
    elif initial.kind is InitialKind.GAUSSIAN:
        if initial.mean is None or len(initial.mean) != n:
            out.append(Diagnostic('initial.mean', f"must have {n} entries"))
        cov = np.asarray(initial.covariance if initial.covariance is not None else [], dtype=float)
        if cov.shape != (n, n):
            out.append(Diagnostic('initial.covariance', f"must be {n}x{n}"))
        elif not np.all(np.isfinite(cov)):
            out.append(Diagnostic('initial.covariance', 'must be finite'))
        elif not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(cov).max()))):
            out.append(Diagnostic('initial.covariance', 'not symmetric'))
        elif np.linalg.eigvalsh(cov).min() < -1e-12 * max(1.0, float(np.abs(cov).max())):
            out.append(Diagnostic('initial.covariance', 'not PSD'))
    else:
        table = dict(initial.moments or ())
        if any(len(m) != n for m in table):
            out.append(Diagnostic('initial.moment', f"multi-indices must have {n} entries"))
        elif table.get((0,) * n) != 1.0:
            out.append(Diagnostic('initial.moment', 'must include the degree-0 moment with value 1'))
    return out


def _validate_basis_override(model: JumpDiffusionModel) -> List[Diagnostic]:
    out: List[Diagnostic] = []
    override = model.basis_override
    width = len(model.variables)
    state, inputs = list(override.state), list(override.input)
    if any(len(m) != width for m in state + inputs):
        out.append(Diagnostic('basis', f"monomials must have {width} exponents"))
        return out
    if not state or sum(state[0]) != 0:
        out.append(Diagnostic('basis.state', 'must start with the constant monomial 1'))
    if any(any(m[i] for i in model.input_positions) for m in state):
        out.append(Diagnostic('basis.state', 'must contain pure state monomials only'))
    overlap = set(state) & set(inputs)
    if overlap:
        shown = ', '.join(format_monomial(m, model.variables) for m in sorted(overlap))
        out.append(Diagnostic('basis', f"state and input monomials overlap: {shown}"))
    if len(set(state)) != len(state) or len(set(inputs)) != len(inputs):
        out.append(Diagnostic('basis', 'contains duplicate monomials'))
    return out


def input_bounds(model: JumpDiffusionModel) -> Tuple[np.ndarray, np.ndarray]:
    """Box bounds per input implied by constraints affine in that input alone."""
    lo = np.full(model.n_u, -np.inf)
    hi = np.full(model.n_u, np.inf)
    for constraint in model.constraints:
        poly = constraint.polynomial
        if poly.context != model.variables or poly.degree() != 1:
            continue
        used = poly.variables()
        if len(used) != 1 or used[0] not in model.input_vars:
            continue
        k = model.input_vars.index(used[0])
        slope = float(poly.coefficient(tuple(1 if v == used[0] else 0 for v in model.variables)))
        offset = float(poly.coefficient((0,) * len(model.variables)))
        bound = -offset / slope
        if slope > 0:
            lo[k] = max(lo[k], bound)
        else:
            hi[k] = min(hi[k], bound)
    return lo, hi


def state_floor_variables(model: JumpDiffusionModel) -> List[int]:
    """Indices of states carrying a plain `x_i >= 0` constraint."""
    floors = []
    for constraint in model.constraints:
        poly = constraint.polynomial
        if poly.context != model.variables or len(poly.terms) != 1:
            continue
        (m, c), = poly.terms.items()
        if c > 0 and sum(m) == 1:
            i = m.index(1)
            if i < model.n and i not in floors:
                floors.append(i)
    return sorted(floors)


__all__ = [
    'Jump',
    'Constraint',
    'InitialDistribution',
    'RelaxationOptions',
    'BasisOverride',
    'JumpDiffusionModel',
    'Diagnostic',
    'validate',
    'input_bounds',
    'state_floor_variables',
]
