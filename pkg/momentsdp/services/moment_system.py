"""
Auxiliary linear moment system of a polynomial jump diffusion.

For a state moment vector X (pure-state monomials, X[0] = 1) and an input
moment vector U (everything else the relaxation needs):

    d/dt X = A X + B U
    E[c] = C X + D U,   E[h] = H X + K U
    M(X, U) = M0 + sum_i X_i M_i + sum_j U_j N_j  is PSD
    J X + L U + offset >= 0

The matrices hold for the moments of every distribution the model can reach.
Bases are expressed as multi-indices over the full (state, input) context.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from shared.types import Sense

from ..algebra.monomials import MultiIndex, basis_order_key, format_monomial, monomials_of_degree
from ..algebra.polynomial import Polynomial
from ..exceptions import ClosureError, ContextMismatchError
from ..models.model import InitialDistribution, JumpDiffusionModel
from .generator import apply_generator_basis, state_monomials

logger = logging.getLogger(__name__)


def input_order_key(m: MultiIndex, n_state: int) -> Tuple[int, int, Tuple[int, Tuple[int, ...]]]:
    """Layout key of the input moment vector: input degree, then total degree, then basis order."""
    return sum(m[n_state:]), sum(m), basis_order_key(m)


@dataclass(frozen=True, eq=False)
class MomentBasis:
    """Ordered state moments (starting with 1) and input moments over one variable context."""

    context: Tuple[str, ...]
    n_state: int
    state_monomials: Tuple[MultiIndex, ...]
    input_monomials: Tuple[MultiIndex, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'context', tuple(self.context))
        object.__setattr__(self, 'state_monomials', tuple(tuple(m) for m in self.state_monomials))
        object.__setattr__(self, 'input_monomials', tuple(tuple(m) for m in self.input_monomials))
        width = len(self.context)
        for m in self.state_monomials + self.input_monomials:
            if len(m) != width:
                raise ContextMismatchError(f"monomial {m} does not match context {self.context}")
        if not self.state_monomials or sum(self.state_monomials[0]) != 0:
            raise ValueError("state moments must start with the constant monomial 1")
        impure = [m for m in self.state_monomials if any(m[self.n_state:])]
        if impure:
            raise ValueError(f"state moment {self.label(impure[0])} involves an input")
        if len(set(self.state_monomials)) != len(self.state_monomials) or \
                len(set(self.input_monomials)) != len(self.input_monomials):
            raise ValueError("basis contains duplicate monomials")
        overlap = set(self.state_monomials) & set(self.input_monomials)
        if overlap:
            raise ValueError(f"state and input moments overlap at {self.label(min(overlap))}")

    @property
    def nx(self) -> int:
        return len(self.state_monomials)

    @property
    def nu(self) -> int:
        return len(self.input_monomials)

    @cached_property
    def _index(self) -> Dict[MultiIndex, Tuple[str, int]]:
        index = {m: ('x', i) for i, m in enumerate(self.state_monomials)}
        index.update({m: ('u', j) for j, m in enumerate(self.input_monomials)})
        return index

    def locate(self, m: MultiIndex) -> Optional[Tuple[str, int]]:
        """('x', i) or ('u', j) for a housed monomial, None otherwise."""
        return self._index.get(tuple(m))

    def houses(self, m: MultiIndex) -> bool:
        return tuple(m) in self._index

    def label(self, m: MultiIndex) -> str:
        return format_monomial(m, self.context)

    def state_labels(self) -> List[str]:
        return [self.label(m) for m in self.state_monomials]

    def input_labels(self) -> List[str]:
        return [self.label(m) for m in self.input_monomials]

    def with_inputs(self, extra: Iterable[MultiIndex]) -> 'MomentBasis':
        """Copy with the unhoused monomials of `extra` appended to the input moments."""
        added = sorted({tuple(m) for m in extra if not self.houses(m)},
                       key=lambda m: input_order_key(m, self.n_state))
        if not added:
            return self
        return replace(self, input_monomials=self.input_monomials + tuple(added))


@dataclass(frozen=True, eq=False)
class AffineMatrixMap:
    """M(X, U) = M0 + sum_i X_i M_i + sum_j U_j N_j built from E[b v v^T].

    Constant terms of the entries land in `constant`, so the degree-0
    coefficient block is always zero.
    """

    name: str
    constant: np.ndarray
    state_coefficients: np.ndarray
    input_coefficients: np.ndarray
    generators: Tuple[Polynomial, ...]
    multiplier: Optional[Polynomial] = None

    @property
    def size(self) -> int:
        return self.constant.shape[0]

    def evaluate(self, X: np.ndarray, U: Optional[np.ndarray] = None) -> np.ndarray:
        M = self.constant + np.tensordot(np.asarray(X, dtype=float), self.state_coefficients, axes=1)
        if self.input_coefficients.shape[0]:
            M = M + np.tensordot(np.asarray(U, dtype=float), self.input_coefficients, axes=1)
        return M

    def entry_polynomial(self, j: int, l: int) -> Polynomial:
        entry = self.generators[j] * self.generators[l]
        return entry * self.multiplier if self.multiplier is not None else entry


@dataclass(frozen=True, eq=False)
class LinearRows:
    """Rows J X + L U + offset = E[b^(2r+1)], r = 0..(k_max-1)/2, each required >= 0."""

    name: str
    J: np.ndarray
    L: np.ndarray
    offset: np.ndarray
    multiplier: Polynomial
    k_max: int

    @property
    def rows(self) -> int:
        return self.J.shape[0]

    def evaluate(self, X: np.ndarray, U: Optional[np.ndarray] = None) -> np.ndarray:
        value = self.J @ np.asarray(X, dtype=float) + self.offset
        if self.L.shape[1]:
            value = value + self.L @ np.asarray(U, dtype=float)
        return value


@dataclass(frozen=True, eq=False)
class AuxiliaryLinearSystem:
    """Everything the SDP needs, with costs in minimisation form.

    When the model maximises, C, D, H and K hold the negated cost and
    `objective_sign` is -1; multiply an optimal value by it to get the
    functional back in its own units.
    """

    model_name: str
    basis: MomentBasis
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    H: np.ndarray
    K: np.ndarray
    x0: np.ndarray
    psd_maps: Tuple[AffineMatrixMap, ...] = ()
    linear_maps: Tuple[LinearRows, ...] = ()
    sense: Sense = Sense.MIN
    order: int = 1
    scale: float = 1.0
    state_scale: Optional[np.ndarray] = None
    input_scale: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.state_scale is None:
            object.__setattr__(self, 'state_scale', np.ones(self.basis.nx))
        if self.input_scale is None:
            object.__setattr__(self, 'input_scale', np.ones(self.basis.nu))

    @property
    def nx(self) -> int:
        return self.basis.nx

    @property
    def nu(self) -> int:
        return self.basis.nu

    @property
    def objective_sign(self) -> float:
        return self.sense.sign

    @property
    def terminal_uses_inputs(self) -> bool:
        return bool(np.any(self.K != 0))

    def unscale(self, X: np.ndarray, U: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Map solver-scale moment vectors back to plain moments."""
        return np.asarray(X) * self.state_scale, np.asarray(U) * self.input_scale

    def moment_table(self, X: np.ndarray, U: np.ndarray) -> Dict[MultiIndex, float]:
        """Plain moment value per housed monomial, from solver-scale vectors."""
        X, U = self.unscale(X, U)
        table = {m: float(v) for m, v in zip(self.basis.state_monomials, X)}
        table.update({m: float(v) for m, v in zip(self.basis.input_monomials, U)})
        return table


@dataclass(frozen=True)
class RelaxationPlan:
    """Which cone constraints a relaxation of order d imposes."""

    order: int
    generators: Tuple[Polynomial, ...]
    localizing: Tuple[Tuple[str, Polynomial, int], ...] = field(default_factory=tuple)
    odd_rows: Tuple[Tuple[str, Polynomial, int], ...] = field(default_factory=tuple)


def moment_inputs_enabled(model: JumpDiffusionModel) -> bool:
    """Whether the inputs are appended to the moment-matrix generators."""
    if model.relaxation.moment_inputs is not None:
        return model.relaxation.moment_inputs
    if not model.is_controlled:
        return False
    for constraint in model.constraints:
        if model.relaxation.odd_power(constraint.name):
            continue
        if constraint.polynomial.degree_in(model.input_vars) > 0:
            return False
    return True


def relaxation_plan(model: JumpDiffusionModel, order: int) -> RelaxationPlan:
    if order < 1:
        raise ValueError(f"relaxation order must be >= 1, got {order}")
    context = model.variables
    generators = [Polynomial.monomial(m, context) for m in state_monomials(model, order)]
    if moment_inputs_enabled(model):
        generators.extend(Polynomial.variable(u, context) for u in model.input_vars)

    localizing, odd_rows = [], []
    for constraint in model.constraints:
        b = constraint.polynomial
        k_max = model.relaxation.odd_power(constraint.name)
        if k_max:
            odd_rows.append((constraint.name, b, k_max))
            continue
        degree = order - math.ceil(max(b.degree_in(model.state_vars), 0) / 2)
        if degree < 0:
            logger.warning(f"constraint '{constraint.name}' has state degree above 2*{order}; "
                           f"no localizing matrix at this order")
            continue
        localizing.append((constraint.name, b, degree))
    return RelaxationPlan(order, tuple(generators), tuple(localizing), tuple(odd_rows))


def _localizing_generators(model: JumpDiffusionModel, degree: int) -> List[Polynomial]:
    return [Polynomial.monomial(m, model.variables) for m in state_monomials(model, degree)]


def _map_entries(generators: Sequence[Polynomial], multiplier: Optional[Polynomial]):
    for j in range(len(generators)):
        for l in range(j, len(generators)):
            entry = generators[j] * generators[l]
            yield j, l, (entry * multiplier if multiplier is not None else entry)


def _odd_powers(b: Polynomial, k_max: int) -> List[Polynomial]:
    if k_max < 1 or k_max % 2 == 0:
        raise ValueError(f"k_max must be an odd positive integer, got {k_max}")
    return [b ** (2 * r + 1) for r in range((k_max - 1) // 2 + 1)]


def demanded_monomials(model: JumpDiffusionModel, plan: RelaxationPlan) -> Set[MultiIndex]:
    """Every monomial that appears in some cone-constraint entry of `plan`."""
    demanded: Set[MultiIndex] = set()
    for _, _, entry in _map_entries(plan.generators, None):
        demanded.update(entry.terms)
    for _, b, degree in plan.localizing:
        for _, _, entry in _map_entries(_localizing_generators(model, degree), b):
            demanded.update(entry.terms)
    for _, b, k_max in plan.odd_rows:
        for power in _odd_powers(b, k_max):
            demanded.update(power.terms)
    return demanded


def _cost_monomials(model: JumpDiffusionModel) -> Set[MultiIndex]:
    return set(model.running_cost.terms) | set(model.terminal_cost.terms)


def default_basis(model: JumpDiffusionModel, order: int, max_workers: int = 1) -> MomentBasis:
    """
    Choose the state and input moments for a relaxation of order d.

    The state moments are all pure-state monomials up to the largest degree k
    such that every one of them is demanded by a cone constraint and has its
    generator image inside the demanded set. Everything else that is demanded,
    plus the generator images and cost monomials, becomes an input moment.

    Args:
        model: Jump-diffusion model
        order: Relaxation order d >= 1
        max_workers: Threads for the generator images

    Returns:
        MomentBasis: closed basis

    Raises:
        ClosureError: if not even the degree-1 moments can be closed
    """
    plan = relaxation_plan(model, order)
    demanded = demanded_monomials(model, plan)
    n, context = model.n, model.variables
    pad = (0,) * model.n_u
    top = max((sum(m) for m in demanded if not any(m[n:])), default=0)

    k = 0
    images: Set[MultiIndex] = set()
    offending: Optional[MultiIndex] = None
    for degree in range(1, top + 1):
        layer = [m + pad for m in monomials_of_degree(n, degree)]
        missing = [m for m in layer if m not in demanded]
        if missing:
            offending = missing[0]
            break
        layer_images = {t for r in apply_generator_basis(model, layer, max_workers) for t in r.image.terms}
        outside = sorted((t for t in layer_images if t not in demanded), key=basis_order_key)
        if outside:
            offending = outside[0]
            logger.debug(f"degree {degree} moments reach {format_monomial(offending, context)}; "
                         f"state basis stops at degree {degree - 1}")
            break
        images |= layer_images
        k = degree

    if k < 1:
        offending = offending if offending is not None else (1,) + (0,) * (len(context) - 1)
        raise ClosureError(f"no closed moment basis at relaxation order {order}",
                           format_monomial(offending, context))

    states = tuple(state_monomials(model, k))
    basis = MomentBasis(context, n, states).with_inputs(demanded | images | _cost_monomials(model))
    logger.info(f"{model.name}: order {order} basis has {basis.nx} state moments (degree {k}) "
                f"and {basis.nu} input moments")
    return basis


def check_closure(model: JumpDiffusionModel, basis: MomentBasis,
                  extra: Iterable[MultiIndex] = (), max_workers: int = 1) -> None:
    """
    Verify that generator images and `extra` monomials are all housed.

    Raises:
        ClosureError: naming the first unhoused monomial
    """
    for result in apply_generator_basis(model, basis.state_monomials, max_workers):
        for m in result.image.monomials():
            if not basis.houses(m):
                raise ClosureError(f"generator image of {basis.label(result.input_monomial)} leaves the basis",
                                   basis.label(m))
    for m in sorted({tuple(m) for m in extra}, key=basis_order_key):
        if not basis.houses(m):
            raise ClosureError("monomial is not housed in the basis", basis.label(m))


def _override_basis(model: JumpDiffusionModel, plan: RelaxationPlan, max_workers: int) -> MomentBasis:
    override = model.basis_override
    basis = MomentBasis(model.variables, model.n, override.state, override.input)
    check_closure(model, basis, max_workers=max_workers)
    extended = basis.with_inputs(demanded_monomials(model, plan) | _cost_monomials(model))
    if extended.nu > basis.nu:
        logger.info(f"{model.name}: appended {extended.nu - basis.nu} constraint monomials to the input moments")
    return extended


def _coefficients(poly: Polynomial, basis: MomentBasis, purpose: str,
                  split_constant: bool = False) -> Tuple[float, np.ndarray, np.ndarray]:
    if poly.context != basis.context:
        raise ContextMismatchError(f"{purpose}: context {poly.context} differs from {basis.context}")
    constant = 0.0
    x_row = np.zeros(basis.nx)
    u_row = np.zeros(basis.nu)
    for m, c in poly.terms.items():
        if split_constant and not any(m):
            constant += float(c)
            continue
        where = basis.locate(m)
        if where is None:
            raise ClosureError(f"{purpose} is not housed in the basis", basis.label(m))
        kind, i = where
        if kind == 'x':
            x_row[i] += float(c)
        else:
            u_row[i] += float(c)
    return constant, x_row, u_row


def functional_rows(poly: Polynomial, basis: MomentBasis) -> Tuple[np.ndarray, np.ndarray]:
    """Rows (H, K) with H X + K U = E[poly] for plain moment vectors."""
    _, x_row, u_row = _coefficients(poly, basis, 'functional')
    return x_row, u_row


def initial_moments(initial: InitialDistribution, monomials: Sequence[MultiIndex]) -> np.ndarray:
    """E[x(0)^m] for state-context multi-indices."""
    values = []
    for m in monomials:
        try:
            values.append(initial.moment(tuple(m)))
        except KeyError:
            raise ClosureError("initial moment is not given", str(tuple(m)))
    return np.array(values, dtype=float)


def build_dynamics(model: JumpDiffusionModel, basis: MomentBasis,
                   max_workers: int = 1) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Rows of d/dt X = A X + B U and the initial state moments.

    Returns:
        (A, B, x0) with shapes (nx, nx), (nx, nu), (nx,)

    Raises:
        ClosureError: if a generator image leaves the basis
    """
    A = np.zeros((basis.nx, basis.nx))
    B = np.zeros((basis.nx, basis.nu))
    for i, result in enumerate(apply_generator_basis(model, basis.state_monomials, max_workers)):
        purpose = f"generator image of {basis.label(result.input_monomial)}"
        _, A[i], B[i] = _coefficients(result.image, basis, purpose)
    x0 = initial_moments(model.initial, [m[:model.n] for m in basis.state_monomials])
    return A, B, x0


def build_cost(model: JumpDiffusionModel,
               basis: MomentBasis) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(C, D, H, K) for the running and terminal cost, negated when the model maximises."""
    sign = model.sense.sign
    _, C, D = _coefficients(model.running_cost, basis, 'running cost')
    _, H, K = _coefficients(model.terminal_cost, basis, 'terminal cost')
    return sign * C, sign * D, sign * H, sign * K


def _affine_map(name: str, generators: Sequence[Polynomial], multiplier: Optional[Polynomial],
                basis: MomentBasis) -> AffineMatrixMap:
    s = len(generators)
    constant = np.zeros((s, s))
    state_coefficients = np.zeros((basis.nx, s, s))
    input_coefficients = np.zeros((basis.nu, s, s))
    for j, l, entry in _map_entries(generators, multiplier):
        c0, x_row, u_row = _coefficients(entry, basis, f"{name} entry ({j}, {l})", split_constant=True)
        constant[j, l] = constant[l, j] = c0
        state_coefficients[:, j, l] = state_coefficients[:, l, j] = x_row
        input_coefficients[:, j, l] = input_coefficients[:, l, j] = u_row
    return AffineMatrixMap(name, constant, state_coefficients, input_coefficients,
                           tuple(generators), multiplier)


def build_moment_matrix(model: JumpDiffusionModel, basis: MomentBasis, degree: int,
                        include_inputs: Optional[bool] = None) -> AffineMatrixMap:
    """
    E[v v^T] for v = (1, x, ..., x^d) over all state monomials, optionally followed by the inputs.

    Raises:
        ClosureError: if a product monomial is not housed
    """
    if include_inputs is None:
        include_inputs = moment_inputs_enabled(model)
    generators = _localizing_generators(model, degree)
    if include_inputs:
        generators.extend(Polynomial.variable(u, model.variables) for u in model.input_vars)
    return _affine_map('moment', generators, None, basis)


def build_localizing_matrix(model: JumpDiffusionModel, b: Polynomial, basis: MomentBasis,
                            degree: int, name: str = 'localizing') -> AffineMatrixMap:
    """E[b s s^T] for s = state monomials up to `degree`."""
    if degree < 0:
        raise ValueError(f"localizing degree must be >= 0, got {degree}")
    return _affine_map(name, _localizing_generators(model, degree), b, basis)


def build_odd_power_rows(model: JumpDiffusionModel, b: Polynomial, basis: MomentBasis,
                         k_max: int, name: str = 'odd') -> LinearRows:
    """Rows whose value is E[b^(2r+1)] for r = 0..(k_max-1)/2."""
    powers = _odd_powers(b, k_max)
    J = np.zeros((len(powers), basis.nx))
    L = np.zeros((len(powers), basis.nu))
    offset = np.zeros(len(powers))
    for r, power in enumerate(powers):
        offset[r], J[r], L[r] = _coefficients(power, basis, f"{name} power {2 * r + 1}", split_constant=True)
    return LinearRows(name, J, L, offset, b, k_max)


def build_auxiliary_system(model: JumpDiffusionModel, order: int,
                           basis: Optional[MomentBasis] = None,
                           objective: Optional[Polynomial] = None,
                           scale: Optional[float] = None,
                           max_workers: int = 1) -> AuxiliaryLinearSystem:
    """
    Assemble the auxiliary linear system for a relaxation of order d.

    Args:
        model: Jump-diffusion model
        order: Relaxation order d >= 1
        basis: Explicit basis; defaults to the model's [basis] override or `default_basis`
        objective: Replaces the model cost by the terminal functional E[objective] (minimised)
        scale: Moment scale s; X_m is stored as X_m / s^deg(m). Defaults to the model knob
        max_workers: Threads for generator images

    Returns:
        AuxiliaryLinearSystem
    """
    if objective is not None:
        if objective.context == model.state_vars:
            objective = objective.embed(model.variables)
        model = model.with_objective(terminal=objective, sense=Sense.MIN)

    plan = relaxation_plan(model, order)
    if basis is None:
        if model.basis_override is not None:
            basis = _override_basis(model, plan, max_workers)
        else:
            basis = default_basis(model, order, max_workers)
    else:
        basis = basis.with_inputs(_cost_monomials(model))

    A, B, x0 = build_dynamics(model, basis, max_workers)
    C, D, H, K = build_cost(model, basis)

    psd_maps = [build_moment_matrix(model, basis, order)]
    for name, b, degree in plan.localizing:
        psd_maps.append(build_localizing_matrix(model, b, basis, degree, name=name))
    linear_maps = [build_odd_power_rows(model, b, basis, k_max, name=name)
                   for name, b, k_max in plan.odd_rows]

    aux = AuxiliaryLinearSystem(
        model_name=model.name, basis=basis, A=A, B=B, C=C, D=D, H=H, K=K, x0=x0,
        psd_maps=tuple(psd_maps), linear_maps=tuple(linear_maps),
        sense=model.sense, order=order,
    )
    scale = scale if scale is not None else model.relaxation.scale
    if scale is not None and scale != 1.0:
        aux = rescale(aux, scale)
    return aux


def rescale(aux: AuxiliaryLinearSystem, scale: float) -> AuxiliaryLinearSystem:
    """
    Change variables to X_m = s^deg(m) * Xs_m (likewise for U); the optimum is unchanged.

    Rescaling composes: the stored factors multiply.
    """
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    fx = np.array([scale ** sum(m) for m in aux.basis.state_monomials])
    fu = np.array([scale ** sum(m) for m in aux.basis.input_monomials])

    def scaled_map(M: AffineMatrixMap) -> AffineMatrixMap:
        return replace(M, state_coefficients=M.state_coefficients * fx[:, None, None],
                       input_coefficients=M.input_coefficients * fu[:, None, None])

    def scaled_rows(R: LinearRows) -> LinearRows:
        return replace(R, J=R.J * fx[None, :], L=R.L * fu[None, :])

    return replace(
        aux,
        A=aux.A * fx[None, :] / fx[:, None],
        B=aux.B * fu[None, :] / fx[:, None],
        C=aux.C * fx, D=aux.D * fu, H=aux.H * fx, K=aux.K * fu,
        x0=aux.x0 / fx,
        psd_maps=tuple(scaled_map(M) for M in aux.psd_maps),
        linear_maps=tuple(scaled_rows(R) for R in aux.linear_maps),
        scale=aux.scale * scale,
        state_scale=aux.state_scale * fx,
        input_scale=aux.input_scale * fu,
    )


def _rows(label: str, matrix: np.ndarray) -> List[str]:
    matrix = np.atleast_2d(matrix)
    lines = [f"{label} {matrix.shape[0]} {matrix.shape[1]}"]
    lines.extend(' '.join(f"{v:.17g}" for v in row) for row in matrix)
    return lines


def dump_aux(aux: AuxiliaryLinearSystem) -> str:
    """Plain-text dump of every matrix, row-major with 17 significant digits."""
    lines = [
        f"# auxiliary linear system: {aux.model_name}",
        f"order {aux.order}",
        f"sense {aux.sense.value}",
        f"scale {aux.scale:.17g}",
        f"state {', '.join(aux.basis.state_labels())}",
        f"input {', '.join(aux.basis.input_labels())}",
    ]
    for label in ('A', 'B'):
        lines.extend(_rows(label, getattr(aux, label)))
    for label in ('C', 'D', 'H', 'K', 'x0'):
        lines.extend(_rows(label, getattr(aux, label).reshape(1, -1)))
    for M in aux.psd_maps:
        lines.append(f"psd {M.name} {M.size}")
        lines.extend(_rows('M0', M.constant))
        for i, label in enumerate(aux.basis.state_labels()):
            if np.any(M.state_coefficients[i]):
                lines.extend(_rows(f"X[{label}]", M.state_coefficients[i]))
        for j, label in enumerate(aux.basis.input_labels()):
            if np.any(M.input_coefficients[j]):
                lines.extend(_rows(f"U[{label}]", M.input_coefficients[j]))
    for R in aux.linear_maps:
        lines.append(f"linear {R.name} {R.rows}")
        lines.extend(_rows('J', R.J))
        lines.extend(_rows('L', R.L))
        lines.extend(_rows('offset', R.offset.reshape(1, -1)))
    return '\n'.join(lines) + '\n'


__all__ = [
    'MomentBasis',
    'AffineMatrixMap',
    'LinearRows',
    'AuxiliaryLinearSystem',
    'RelaxationPlan',
    'moment_inputs_enabled',
    'relaxation_plan',
    'demanded_monomials',
    'default_basis',
    'check_closure',
    'functional_rows',
    'initial_moments',
    'build_dynamics',
    'build_cost',
    'build_moment_matrix',
    'build_localizing_matrix',
    'build_odd_power_rows',
    'build_auxiliary_system',
    'rescale',
    'dump_aux',
]
