"""
Turn an auxiliary linear system into steady-state or finite-horizon SDPs.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from shared.types import Sense

from ..algebra.polynomial import Polynomial
from ..exceptions import SolverError
from ..services.moment_system import AuxiliaryLinearSystem, functional_rows
from .problem import ConeBlock, NonnegativeRows, SdpProblem, SdpSolution, Segment, SolverOptions

logger = logging.getLogger(__name__)

INITIAL_FACE_TOLERANCE = 1e-9


def _objective_factor(aux: AuxiliaryLinearSystem, sense: Optional[Sense]) -> float:
    """Multiplier turning the stored minimisation-form costs into those of `sense`."""
    sense = sense or aux.sense
    return sense.sign * aux.sense.sign


def _cone_blocks(aux: AuxiliaryLinearSystem, base: int, step: Optional[int]) -> List[ConeBlock]:
    blocks = []
    suffix = '' if step is None else f"[{step}]"
    for M in aux.psd_maps:
        coefficients = np.concatenate([M.state_coefficients, M.input_coefficients], axis=0)
        used = np.flatnonzero(np.any(coefficients != 0, axis=(1, 2)))
        blocks.append(ConeBlock(f"{M.name}{suffix}", M.constant.copy(), used + base,
                                coefficients[used], step))
    return blocks


def _nonneg_rows(aux: AuxiliaryLinearSystem, base: int, n_vars: int, step: Optional[int]) -> List[NonnegativeRows]:
    out = []
    suffix = '' if step is None else f"[{step}]"
    for R in aux.linear_maps:
        local = sparse.coo_matrix(np.hstack([R.J, R.L]))
        G = sparse.csr_matrix((local.data, (local.row, local.col + base)), shape=(R.rows, n_vars))
        out.append(NonnegativeRows(f"{R.name}{suffix}", G, R.offset.copy(), step))
    return out


def _independent_rows(rows: np.ndarray, rhs: np.ndarray, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """Linearly independent rows spanning the system rows x = rhs; an inconsistent part becomes 0 = r."""
    if not len(rows):
        return rows, rhs
    U, sv, Vt = np.linalg.svd(rows, full_matrices=False)
    rank = int(np.sum(sv > tol * max(1.0, sv[0])))
    E, e = sv[:rank, None] * Vt[:rank], U[:, :rank].T @ rhs
    residual = float(np.linalg.norm(rhs - U[:, :rank] @ e))
    if residual > tol * max(1.0, float(np.linalg.norm(rhs))):
        logger.warning(f"initial law contradicts the relaxation (residual {residual:.2e})")
        E, e = np.vstack([E, np.zeros(rows.shape[1])]), np.append(e, residual)
    return E, e


def _initial_cone_blocks(aux: AuxiliaryLinearSystem, base: int,
                         tol: float = INITIAL_FACE_TOLERANCE) -> Tuple[List[ConeBlock], np.ndarray, np.ndarray]:
    """
    Cone blocks at grid point 0 with X[0] = x0 substituted.

    A block whose pinned state part is singular has no interior point. It is
    restricted to the face it must lie on: for a null vector v of the pinned
    part, F v = 0 becomes linear equalities on U[0] and the block is
    compressed onto the range of the pinned part plus the input rows. Blocks
    left without variables are dropped when PSD.

    Returns:
        (blocks, E, e) with E U[0] = e the implied equalities
    """
    nx = aux.nx
    blocks: List[ConeBlock] = []
    rows, rhs = [], []
    for M in aux.psd_maps:
        constant = M.constant + np.tensordot(aux.x0, M.state_coefficients, axes=1)
        used = np.flatnonzero(np.any(M.input_coefficients != 0, axis=(1, 2)))
        coefficients = M.input_coefficients[used]
        name = f"{M.name}[0]"
        top = max(1.0, float(np.abs(constant).max()))

        if not len(used):
            if np.linalg.eigvalsh(constant)[0] >= -tol * top:
                logger.debug(f"{name} is fixed by the initial law and PSD; dropped")
                continue
            blocks.append(ConeBlock(name, constant, used + base + nx, coefficients, 0))
            continue

        pinned = np.flatnonzero(~np.any(coefficients[:, np.arange(M.size), np.arange(M.size)] != 0, axis=0))
        free = np.setdiff1d(np.arange(M.size), pinned)
        w, V = np.linalg.eigh(constant[np.ix_(pinned, pinned)]) if len(pinned) else (np.zeros(0), None)
        null = w <= tol * top
        if not null.any() or w.min() < -tol * top or np.any(coefficients[:, pinned][:, :, pinned] != 0):
            blocks.append(ConeBlock(name, constant, used + base + nx, coefficients, 0))
            continue

        for v in V[:, null].T:
            full = np.zeros(M.size)
            full[pinned] = v
            image = np.tensordot(M.input_coefficients, full, axes=([2], [0]))[:, free]
            rows.extend(image.T)
            rhs.extend(-(constant @ full)[free])

        T = np.zeros((M.size, int((~null).sum()) + len(free)))
        T[pinned, :int((~null).sum())] = V[:, ~null]
        T[free, int((~null).sum()):] = np.eye(len(free))
        logger.debug(f"{name} restricted from size {M.size} to {T.shape[1]}")
        blocks.append(ConeBlock(name, T.T @ constant @ T, used + base + nx,
                                np.einsum('ia,kij,jb->kab', T, coefficients, T), 0))

    E, e = _independent_rows(np.array(rows, dtype=float).reshape(len(rows), aux.nu), np.array(rhs, dtype=float), tol)
    return blocks, E, e


def _initial_nonneg_rows(aux: AuxiliaryLinearSystem, n_vars: int,
                         tol: float = INITIAL_FACE_TOLERANCE) -> List[NonnegativeRows]:
    """Rows at grid point 0 with X[0] = x0 substituted; rows already satisfied by x0 alone are dropped."""
    out = []
    for R in aux.linear_maps:
        value = R.J @ aux.x0 + R.offset
        keep = np.any(R.L != 0, axis=1) | (value < -tol)
        if not keep.any():
            continue
        local = sparse.coo_matrix(R.L[keep])
        G = sparse.csr_matrix((local.data, (local.row, local.col + aux.nx)), shape=(int(keep.sum()), n_vars))
        out.append(NonnegativeRows(f"{R.name}[0]", G, value[keep], 0))
    return out


def assemble_steady_state(aux: AuxiliaryLinearSystem, sense: Optional[Sense] = None) -> SdpProblem:
    """
    Stationary SDP: 0 = A X + B U, X[0] = 1, every map imposed once.

    The objective is the long-run mean of the terminal functional, H X + K U.

    Args:
        aux: Auxiliary linear system
        sense: Optimisation direction; defaults to the one the system was built with
    """
    nx, nu = aux.nx, aux.nu
    n_vars = nx + nu
    factor = _objective_factor(aux, sense)

    dynamics = np.hstack([aux.A, aux.B])
    active = np.flatnonzero(np.any(dynamics != 0, axis=1))
    pin = np.zeros((1, n_vars))
    pin[0, 0] = 1.0
    A_eq = sparse.csr_matrix(np.vstack([pin, dynamics[active]]))
    b_eq = np.concatenate([[1.0], np.zeros(len(active))])
    logger.debug(f"steady state keeps {len(active)} of {nx} dynamics rows")

    problem = SdpProblem(
        name=f"{aux.model_name}-steady-d{aux.order}",
        n_vars=n_vars,
        segments=(Segment('X', 0, nx, 'x'), Segment('U', nx, nu, 'u')),
        c=factor * np.concatenate([aux.H, aux.K]),
        A_eq=A_eq,
        b_eq=b_eq,
        cones=tuple(_cone_blocks(aux, 0, None)),
        nonneg=tuple(_nonneg_rows(aux, 0, n_vars, None)),
        objective_sign=(sense or aux.sense).sign,
        sense=sense or aux.sense,
        aux=aux,
    )
    problem.check()
    logger.info(problem.summary())
    return problem


def assemble_finite_horizon(aux: AuxiliaryLinearSystem, horizon: float, steps: int,
                            sense: Optional[Sense] = None) -> SdpProblem:
    """
    Euler-discretised SDP on the uniform grid t_k = k T / N.

        X[0] = x0,   X[k+1] = X[k] + h (A X[k] + B U[k]),   h = T / N
        minimise h sum_{k<N} (C X[k] + D U[k]) + H X[N] + K U[N]

    Every cone map is imposed at every grid point. At t = 0 the maps are
    evaluated at x0, so they only constrain U[0]; see `_initial_cone_blocks`.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    nx, nu = aux.nx, aux.nu
    width = nx + nu
    n_vars = (steps + 1) * width
    h = horizon / steps
    factor = _objective_factor(aux, sense)

    segments = []
    for k in range(steps + 1):
        segments.append(Segment(f"X[{k}]", k * width, nx, 'x', k))
        segments.append(Segment(f"U[{k}]", k * width + nx, nu, 'u', k))

    select_x = sparse.csr_matrix(np.hstack([np.eye(nx), np.zeros((nx, nu))]))
    advance = sparse.csr_matrix(np.hstack([-(np.eye(nx) + h * aux.A), -h * aux.B]))
    A_eq = sparse.vstack([
        sparse.kron(sparse.eye(1, steps + 1), select_x),
        sparse.kron(sparse.eye(steps, steps + 1), advance)
        + sparse.kron(sparse.eye(steps, steps + 1, k=1), select_x),
    ]).tocsr()
    b_eq = np.concatenate([aux.x0, np.zeros(steps * nx)])

    cones, E, e = _initial_cone_blocks(aux, 0)
    nonneg = _initial_nonneg_rows(aux, n_vars)
    if len(E):
        face = sparse.hstack([sparse.csr_matrix((len(E), nx)), sparse.csr_matrix(E),
                              sparse.csr_matrix((len(E), n_vars - width))])
        A_eq = sparse.vstack([A_eq, face]).tocsr()
        b_eq = np.concatenate([b_eq, e])
        logger.debug(f"initial law implies {len(E)} equalities on U[0]")

    running = h * np.concatenate([aux.C, aux.D])
    terminal = np.concatenate([aux.H, aux.K])
    c = factor * np.concatenate([np.tile(running, steps), terminal])

    for k in range(1, steps + 1):
        cones.extend(_cone_blocks(aux, k * width, k))
        nonneg.extend(_nonneg_rows(aux, k * width, n_vars, k))

    problem = SdpProblem(
        name=f"{aux.model_name}-T{horizon:g}-N{steps}-d{aux.order}",
        n_vars=n_vars,
        segments=tuple(segments),
        c=c,
        A_eq=A_eq,
        b_eq=b_eq,
        cones=tuple(cones),
        nonneg=tuple(nonneg),
        objective_sign=(sense or aux.sense).sign,
        sense=sense or aux.sense,
        aux=aux,
        times=np.linspace(0.0, horizon, steps + 1),
    )
    problem.check()
    logger.info(problem.summary())
    return problem


def assemble(aux: AuxiliaryLinearSystem, horizon: Optional[float] = None, steps: Optional[int] = None,
             sense: Optional[Sense] = None) -> SdpProblem:
    """Steady-state problem when `horizon` is None, finite-horizon otherwise."""
    if horizon is None:
        return assemble_steady_state(aux, sense)
    return assemble_finite_horizon(aux, horizon, steps, sense)


def solve_many(problems: Sequence[SdpProblem], options: Optional[SolverOptions] = None,
               max_workers: int = 1) -> List[SdpSolution]:
    """Solve independent problems, in a thread pool when max_workers > 1; order is preserved."""
    from .backends import solve

    if max_workers <= 1 or len(problems) < 2:
        return [solve(p, options) for p in problems]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda p: solve(p, options), problems))


@dataclass(frozen=True)
class BoundPair:
    lower: float
    upper: float
    lower_solution: SdpSolution
    upper_solution: SdpSolution


def bound_pair(aux: AuxiliaryLinearSystem, objective: Optional[Polynomial] = None,
               horizon: Optional[float] = None, steps: Optional[int] = None,
               options: Optional[SolverOptions] = None, max_workers: int = 1) -> BoundPair:
    """
    Lower and upper bounds on E[objective] at time T (or in steady state).

    Args:
        aux: Auxiliary system of an uncontrolled model
        objective: Functional to bound; None keeps the system's terminal cost
        horizon: T in seconds, or None for the steady state
        steps: Grid size for a finite horizon
        options: Solver options
        max_workers: Solve the two problems concurrently when > 1

    Raises:
        ValueError: if the model has inputs
        SolverError: if either solve is not optimal
    """
    if len(aux.basis.context) != aux.basis.n_state:
        raise ValueError("bound pairs are defined for models without inputs")
    if objective is not None:
        aux = with_terminal_objective(aux, objective)

    problems = [assemble(aux, horizon, steps, Sense.MIN), assemble(aux, horizon, steps, Sense.MAX)]
    low, high = solve_many(problems, options, max_workers)
    for solution in (low, high):
        if not solution.ok:
            raise SolverError(f"{solution.problem.name} ({solution.problem.sense.value}): "
                              f"{solution.status.value} {solution.message}".rstrip(), solution)
    logger.info(f"bounds for {aux.model_name} at order {aux.order}: [{low.objective:.6g}, {high.objective:.6g}]")
    return BoundPair(low.objective, high.objective, low, high)


def with_terminal_objective(aux: AuxiliaryLinearSystem, objective: Polynomial) -> AuxiliaryLinearSystem:
    """Copy of `aux` whose cost is the terminal functional E[objective], minimised."""
    if objective.context != aux.basis.context:
        objective = objective.embed(aux.basis.context)
    H, K = functional_rows(objective, aux.basis)
    return replace(
        aux,
        C=np.zeros(aux.nx), D=np.zeros(aux.nu),
        H=H * aux.state_scale, K=K * aux.input_scale,
        sense=Sense.MIN,
    )


__all__ = [
    'assemble_steady_state',
    'assemble_finite_horizon',
    'assemble',
    'solve_many',
    'BoundPair',
    'bound_pair',
    'with_terminal_objective',
]
