"""
Solver backends behind one `solve(problem, options)` entry point.

`embedded` is the interior-point method in `solver.py`; `cvxpy` hands the
same problem to whatever conic solver cvxpy has installed.
"""

import logging
import time
from typing import Dict, Optional, Protocol

import numpy as np

from shared.types import SolveStatus

from .problem import SdpProblem, SdpSolution, SolverOptions
from .solver import group_blocks, solve_conic

logger = logging.getLogger(__name__)


class SolverBackend(Protocol):
    name: str

    def solve(self, problem: SdpProblem, options: SolverOptions) -> SdpSolution:
        ...


def _finish(problem: SdpProblem, status: SolveStatus, x: Optional[np.ndarray], pres: float, dres: float,
            gap: float, iterations: int, backend: str, message: str = '') -> SdpSolution:
    objective = np.nan
    if x is not None and status is SolveStatus.OPTIMAL:
        objective = problem.objective_sign * (float(problem.c @ x) + problem.offset)
    if status is SolveStatus.UNBOUNDED:
        message = (message + '; ' if message else '') + \
            'moments may diverge or the relaxation is too weak'
    return SdpSolution(status, problem, x if status is SolveStatus.OPTIMAL else None, objective,
                       pres, dres, gap, iterations, backend, message)


class EmbeddedBackend:
    """Homogeneous self-dual interior point with NT scaling."""

    name = 'embedded'

    def solve(self, problem: SdpProblem, options: SolverOptions) -> SdpSolution:
        blocks = [(cone.name, cone.constant, cone.indices, cone.coefficients) for cone in problem.cones]
        for rows in problem.nonneg:
            G = rows.G.tocsr()
            for r in range(rows.rows):
                start, stop = G.indptr[r], G.indptr[r + 1]
                blocks.append((f"{rows.name}.{r}", np.array([[rows.h[r]]]),
                               G.indices[start:stop].copy(), G.data[start:stop].reshape(-1, 1, 1)))
        result = solve_conic(problem.c, problem.A_eq, problem.b_eq, group_blocks(blocks),
                             tolerance=options.tolerance, max_iterations=options.max_iterations)
        return _finish(problem, result.status, result.x, result.primal_residual, result.dual_residual,
                       result.gap, result.iterations, self.name, result.message)


class CvxpyBackend:
    """Alternate backend through cvxpy; the import is deferred so cvxpy stays optional."""

    name = 'cvxpy'

    _STATUS = {
        'optimal': SolveStatus.OPTIMAL,
        'infeasible': SolveStatus.INFEASIBLE,
        'unbounded': SolveStatus.UNBOUNDED,
    }

    def solve(self, problem: SdpProblem, options: SolverOptions) -> SdpSolution:
        import cvxpy as cp

        x = cp.Variable(problem.n_vars)
        constraints = []
        if problem.n_eq:
            constraints.append(problem.A_eq @ x == problem.b_eq)
        for cone in problem.cones:
            if not len(cone.indices):
                continue
            expr = cone.constant
            for k, i in enumerate(cone.indices):
                expr = expr + x[int(i)] * cone.coefficients[k]
            constraints.append((expr + expr.T) / 2 >> 0)
        for rows in problem.nonneg:
            constraints.append(rows.G @ x + rows.h >= 0)

        cvx_problem = cp.Problem(cp.Minimize(problem.c @ x), constraints)
        try:
            cvx_problem.solve()
        except cp.error.SolverError as exc:
            return _finish(problem, SolveStatus.NUMERICAL_FAILURE, None, np.inf, np.inf, np.inf,
                           0, self.name, str(exc))

        status = self._STATUS.get(cvx_problem.status, SolveStatus.NUMERICAL_FAILURE)
        values = None if x.value is None else np.asarray(x.value, dtype=float)
        pres = dres = gap = np.nan
        if values is not None:
            pres = float(np.linalg.norm(problem.A_eq @ values - problem.b_eq)) / max(1.0, float(np.linalg.norm(problem.b_eq)))
        iterations = getattr(cvx_problem.solver_stats, 'num_iters', None) or 0
        return _finish(problem, status, values, pres, dres, gap, iterations, self.name, cvx_problem.status)


_BACKENDS: Dict[str, SolverBackend] = {
    'embedded': EmbeddedBackend(),
    'cvxpy': CvxpyBackend(),
}


def get_backend(name: str) -> SolverBackend:
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown solver backend '{name}'")


def solve(problem: SdpProblem, options: Optional[SolverOptions] = None) -> SdpSolution:
    """
    Solve `problem` with the backend named in `options`.

    Args:
        problem: Assembled SDP
        options: Solver options; defaults come from the settings

    Returns:
        SdpSolution: status, primal values and the objective in the functional's units
    """
    options = options or SolverOptions()
    backend = get_backend(options.backend)
    started = time.perf_counter()
    solution = backend.solve(problem, options)
    elapsed = time.perf_counter() - started
    if solution.ok:
        logger.info(f"{problem.name}: optimal {solution.objective:.8g} after {solution.iterations} "
                    f"iterations ({elapsed:.2f}s, {backend.name})")
    else:
        logger.warning(f"{problem.name}: {solution.status.value} after {solution.iterations} iterations "
                       f"({elapsed:.2f}s, {backend.name}) {solution.message}".rstrip())
    return solution


__all__ = ['SolverBackend', 'EmbeddedBackend', 'CvxpyBackend', 'get_backend', 'solve']
