"""
Block-structured conic programs and their solutions.

    minimize    c^T y + offset
    subject to  A_eq y = b_eq
                F_k(y) = F_k0 + sum_i y_i F_ki  is PSD    (one ConeBlock each)
                G y + h >= 0                              (NonnegativeRows)

The decision vector is laid out in named segments: X[t] and U[t] per grid
point for a finite horizon, X and U for the steady state.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator
from scipy import sparse

from shared.config import config
from shared.types import Sense, SolveStatus

from ..algebra.monomials import MultiIndex
from ..algebra.polynomial import Polynomial
from ..exceptions import ClosureError
from ..services.moment_system import AuxiliaryLinearSystem

logger = logging.getLogger(__name__)

BACKENDS = ('embedded', 'cvxpy')


class SolverOptions(BaseModel):
    """Termination settings shared by every backend."""

    tolerance: float = Field(default_factory=lambda: config.SOLVER_TOLERANCE, gt=0)
    max_iterations: int = Field(default_factory=lambda: config.SOLVER_MAX_ITERATIONS, ge=1)
    backend: str = Field(default_factory=lambda: config.SOLVER_BACKEND)

    @field_validator('backend')
    @classmethod
    def known_backend(cls, value: str) -> str:
        if value not in BACKENDS:
            raise ValueError(f"backend must be one of {', '.join(BACKENDS)}")
        return value


@dataclass(frozen=True)
class Segment:
    """A contiguous slice of the decision vector."""

    name: str
    start: int
    size: int
    kind: str
    step: Optional[int] = None

    @property
    def stop(self) -> int:
        return self.start + self.size

    @property
    def slice(self) -> slice:
        return slice(self.start, self.stop)


@dataclass(frozen=True, eq=False)
class ConeBlock:
    """F0 + sum_k y[indices[k]] * coefficients[k] must be PSD."""

    name: str
    constant: np.ndarray
    indices: np.ndarray
    coefficients: np.ndarray
    step: Optional[int] = None

    @property
    def size(self) -> int:
        return self.constant.shape[0]

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        return self.constant + np.tensordot(y[self.indices], self.coefficients, axes=1)


@dataclass(frozen=True, eq=False)
class NonnegativeRows:
    """G y + h >= 0 elementwise."""

    name: str
    G: sparse.csr_matrix
    h: np.ndarray
    step: Optional[int] = None

    @property
    def rows(self) -> int:
        return self.G.shape[0]


@dataclass(frozen=True, eq=False)
class SdpProblem:
    name: str
    n_vars: int
    segments: Tuple[Segment, ...]
    c: np.ndarray
    A_eq: sparse.csr_matrix
    b_eq: np.ndarray
    cones: Tuple[ConeBlock, ...]
    nonneg: Tuple[NonnegativeRows, ...] = ()
    offset: float = 0.0
    objective_sign: float = 1.0
    sense: Sense = Sense.MIN
    aux: Optional[AuxiliaryLinearSystem] = None
    times: Optional[np.ndarray] = None

    @property
    def is_steady_state(self) -> bool:
        return self.times is None

    @property
    def steps(self) -> int:
        """Number of grid points carrying moments (1 for the steady state)."""
        return 1 if self.times is None else len(self.times)

    @property
    def n_eq(self) -> int:
        return self.A_eq.shape[0]

    def segment(self, name: str) -> Segment:
        for seg in self.segments:
            if seg.name == name:
                return seg
        raise KeyError(name)

    def state_segment(self, step: int = 0) -> Segment:
        return self.segment('X' if self.is_steady_state else f"X[{step}]")

    def input_segment(self, step: int = 0) -> Segment:
        return self.segment('U' if self.is_steady_state else f"U[{step}]")

    def check(self) -> None:
        """Raise ValueError if a map references an undeclared variable or data is not finite."""
        covered = sum(seg.size for seg in self.segments)
        if covered != self.n_vars:
            raise ValueError(f"segments cover {covered} of {self.n_vars} variables")
        if self.c.shape != (self.n_vars,) or self.A_eq.shape[1] != self.n_vars:
            raise ValueError("objective or equality matrix has the wrong width")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.b_eq))
                and np.all(np.isfinite(self.A_eq.data))):
            raise ValueError("objective or equality data is not finite")
        for cone in self.cones:
            if len(cone.indices) and (cone.indices.min() < 0 or cone.indices.max() >= self.n_vars):
                raise ValueError(f"cone {cone.name} references an undeclared variable")
            if not (np.all(np.isfinite(cone.constant)) and np.all(np.isfinite(cone.coefficients))):
                raise ValueError(f"cone {cone.name} has non-finite data")
        for rows in self.nonneg:
            if rows.G.shape[1] != self.n_vars:
                raise ValueError(f"rows {rows.name} have the wrong width")

    def summary(self) -> str:
        sizes: Dict[int, int] = {}
        for cone in self.cones:
            sizes[cone.size] = sizes.get(cone.size, 0) + 1
        blocks = ', '.join(f"{count}x[{size}x{size}]" for size, count in sorted(sizes.items()))
        n_rows = sum(r.rows for r in self.nonneg)
        return (f"{self.name}: {self.n_vars} variables, {self.n_eq} equalities, "
                f"PSD blocks {blocks or 'none'}, {n_rows} nonnegative rows")


@dataclass(eq=False)
class SdpSolution:
    """Result of one solve; `objective` is in the functional's own units."""

    status: SolveStatus
    problem: SdpProblem
    x: Optional[np.ndarray]
    objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    backend: str = 'embedded'
    message: str = ''

    @property
    def ok(self) -> bool:
        return self.status is SolveStatus.OPTIMAL

    def values(self, segment: str) -> np.ndarray:
        return self.x[self.problem.segment(segment).slice]

    def state(self, step: int = 0) -> np.ndarray:
        """Plain state moments X at a grid point."""
        X, _ = self._moments(step)
        return X

    def input(self, step: int = 0) -> np.ndarray:
        """Plain input moments U at a grid point."""
        _, U = self._moments(step)
        return U

    def _moments(self, step: int) -> Tuple[np.ndarray, np.ndarray]:
        if self.x is None:
            raise ValueError(f"no primal values: solve ended with status {self.status.value}")
        X = self.x[self.problem.state_segment(step).slice]
        U = self.x[self.problem.input_segment(step).slice]
        if self.problem.aux is not None:
            X, U = self.problem.aux.unscale(X, U)
        return X, U

    def moments(self, step: int = 0) -> Dict[MultiIndex, float]:
        """Plain moment per housed monomial at a grid point."""
        aux = self.problem.aux
        if aux is None:
            raise ValueError("problem carries no moment basis")
        if self.x is None:
            raise ValueError(f"no primal values: solve ended with status {self.status.value}")
        return aux.moment_table(self.x[self.problem.state_segment(step).slice],
                                self.x[self.problem.input_segment(step).slice])

    def functional_trajectory(self, poly: Polynomial) -> np.ndarray:
        """E[poly] implied by the solution at every grid point."""
        aux = self.problem.aux
        if aux is None:
            raise ValueError("problem carries no moment basis")
        if poly.context != aux.basis.context:
            poly = poly.embed(aux.basis.context)
        unhoused = [m for m in poly.monomials() if not aux.basis.houses(m)]
        if unhoused:
            raise ClosureError("functional is not housed in the basis", aux.basis.label(unhoused[0]))
        values: List[float] = []
        for step in range(self.problem.steps):
            table = self.moments(step)
            values.append(sum(float(c) * table[m] for m, c in poly.terms.items()))
        return np.array(values)


__all__ = [
    'BACKENDS',
    'SolverOptions',
    'Segment',
    'ConeBlock',
    'NonnegativeRows',
    'SdpProblem',
    'SdpSolution',
]
