"""
Embedded primal-dual interior-point solver for block SDPs.

Problems are handled in the cone form

    minimize    c^T x
    subject to  A x = b,   G x + s = h,   s in a product of PSD cones

with G x = -sum_i x_i F_i and h = F_0 for each block, so the slack s is the
matrix F_0 + sum_i x_i F_i. Nonnegative rows are 1x1 blocks.

The method runs on the homogeneous self-dual embedding, so infeasible and
unbounded problems end with a certificate instead of diverging. Directions
use Nesterov-Todd scaling with a Mehrotra predictor-corrector; the reduced
KKT system is sparse and factored with SuperLU.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from shared.types import SolveStatus

logger = logging.getLogger(__name__)

STEP_FRACTION = 0.99
MIN_STEP = 1e-10
REFINEMENT_STEPS = 3
UNBOUNDED_OBJECTIVE = -1e12
EIGENVALUE_FLOOR = 1e-13


@dataclass
class BlockGroup:
    """All cone blocks of one size, stacked; padding slots carry zero coefficients."""

    size: int
    indices: np.ndarray
    coefficients: np.ndarray
    constant: np.ndarray
    names: List[str] = field(default_factory=list)

    @property
    def count(self) -> int:
        return self.constant.shape[0]


@dataclass
class ConicResult:
    status: SolveStatus
    x: Optional[np.ndarray]
    y: Optional[np.ndarray]
    s: Optional[List[np.ndarray]]
    z: Optional[List[np.ndarray]]
    primal_objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    message: str = ''


def group_blocks(blocks: List[Tuple[str, np.ndarray, np.ndarray, np.ndarray]]) -> List[BlockGroup]:
    """
    Stack (name, constant, indices, coefficients) blocks by size.

    Args:
        blocks: constant (s, s), indices (k,), coefficients (k, s, s) per block

    Returns:
        List of BlockGroup, one per distinct block size
    """
    by_size: Dict[int, list] = {}
    for block in blocks:
        by_size.setdefault(block[1].shape[0], []).append(block)

    groups = []
    for size in sorted(by_size):
        members = by_size[size]
        width = max(1, max(len(b[2]) for b in members))
        indices = np.zeros((len(members), width), dtype=int)
        coefficients = np.zeros((len(members), width, size, size))
        constant = np.zeros((len(members), size, size))
        for j, (_, const, idx, coef) in enumerate(members):
            k = len(idx)
            indices[j, :k] = idx
            coefficients[j, :k] = coef
            constant[j] = const
        groups.append(BlockGroup(size, indices, coefficients, constant, [b[0] for b in members]))
    return groups


def _apply_G(groups: List[BlockGroup], x: np.ndarray, coefficients=None) -> List[np.ndarray]:
    """G x = -sum_i x_i F_i, per group (optionally with scaled coefficient stacks)."""
    out = []
    for g, coef in zip(groups, coefficients or [g.coefficients for g in groups]):
        out.append(-np.einsum('bk,bkij->bij', x[g.indices], coef))
    return out


def _apply_GT(groups: List[BlockGroup], Z: List[np.ndarray], n: int, coefficients=None) -> np.ndarray:
    """G^T Z = (-<F_i, Z>)_i scattered onto the decision vector."""
    out = np.zeros(n)
    for g, coef, Zg in zip(groups, coefficients or [g.coefficients for g in groups], Z):
        np.add.at(out, g.indices, -np.einsum('bkij,bij->bk', coef, Zg))
    return out


def _inner(U: List[np.ndarray], V: List[np.ndarray]) -> float:
    return float(sum(np.sum(u * v) for u, v in zip(U, V)))


def _norm(U: List[np.ndarray]) -> float:
    return float(np.sqrt(_inner(U, U)))


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def nt_scaling(S: np.ndarray, Z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Nesterov-Todd scaling for a stack of PSD pairs.

    Returns (W, W^-1, lam) with W^T S W = diag(lam) = W^-1 Z W^-T.

    Raises:
        np.linalg.LinAlgError: if S or Z is not positive definite
    """
    Ls = np.linalg.cholesky(S)
    Lz = np.linalg.cholesky(Z)
    _, lam, Vt = np.linalg.svd(np.swapaxes(Ls, -1, -2) @ Lz)
    W = (Lz @ np.swapaxes(Vt, -1, -2)) / np.sqrt(lam)[:, None, :]
    return W, np.linalg.inv(W), lam


def repair_pd(M: np.ndarray) -> np.ndarray:
    """Lift the eigenvalues of a stack of symmetric matrices to a floor relative to the largest one."""
    w, V = np.linalg.eigh(_sym(M))
    top = np.maximum(np.abs(w).max(axis=-1, keepdims=True), np.finfo(float).tiny)
    w = np.maximum(w, EIGENVALUE_FLOOR * top)
    return _sym((V * w[..., None, :]) @ np.swapaxes(V, -1, -2))


def _max_step(lam: np.ndarray, D: np.ndarray) -> float:
    """Largest a with diag(lam) + a D PSD, for a stack."""
    root = 1.0 / np.sqrt(lam)
    scaled = D * root[:, :, None] * root[:, None, :]
    lowest = np.linalg.eigvalsh(_sym(scaled))[:, 0].min()
    return np.inf if lowest >= 0 else -1.0 / lowest


class _KktSolver:
    """Factor [[M + dI, A^T], [A, -dI]] once per iteration; refine against the unregularised system."""

    def __init__(self, M: sparse.spmatrix, A: sparse.csr_matrix):
        n, m = M.shape[0], A.shape[0]
        diag = M.diagonal()
        delta = 1e-11 * max(1.0, float(np.abs(diag).max()) if n else 1.0)
        if m:
            self.exact = sparse.bmat([[M, A.T], [A, None]], format='csc')
            regular = sparse.bmat([[M + delta * sparse.identity(n), A.T],
                                   [A, -delta * sparse.identity(m)]], format='csc')
        else:
            self.exact = sparse.csc_matrix(M)
            regular = sparse.csc_matrix(M + delta * sparse.identity(n))
        self.n = n
        self.lu = splu(regular)

    def solve(self, rx: np.ndarray, ry: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        rhs = np.concatenate([rx, ry])
        sol = self.lu.solve(rhs)
        for _ in range(REFINEMENT_STEPS):
            sol = sol + self.lu.solve(rhs - self.exact @ sol)
        return sol[:self.n], sol[self.n:]


def solve_conic(c: np.ndarray, A: sparse.csr_matrix, b: np.ndarray, groups: List[BlockGroup],
                tolerance: float = 1e-8, max_iterations: int = 200) -> ConicResult:
    """
    Run the interior-point method.

    Args:
        c: Objective (n,)
        A: Equality matrix (m, n)
        b: Equality right-hand side (m,)
        groups: Cone blocks from `group_blocks`
        tolerance: Bound on relative residuals and gap for an optimal exit
        max_iterations: Iteration cap

    Returns:
        ConicResult: status plus primal/dual iterates rescaled by 1/tau

    When the iteration stops early for a numerical reason, the best iterate seen
    is returned as optimal with a "reduced accuracy" message if its residuals
    and gap are all below sqrt(tolerance).
    """
    n, m = len(c), A.shape[0]
    A = sparse.csr_matrix(A)
    AT = A.T.tocsr()
    h = [g.constant for g in groups]
    degree = sum(g.count * g.size for g in groups)

    norm_b = max(1.0, float(np.linalg.norm(b)))
    norm_c = max(1.0, float(np.linalg.norm(c)))
    norm_h = max(1.0, _norm(h))

    x = np.zeros(n)
    y = np.zeros(m)
    S = [np.broadcast_to(np.eye(g.size), g.constant.shape).copy() for g in groups]
    Z = [s.copy() for s in S]
    tau, kappa = 1.0, 1.0

    status = SolveStatus.NUMERICAL_FAILURE
    message = 'iteration limit reached'
    pcost = dcost = np.nan
    pres = dres = gap = np.inf
    iteration = 0
    best: Optional[ConicResult] = None

    for iteration in range(max_iterations + 1):
        Gx = _apply_G(groups, x)
        rx = AT @ y + _apply_GT(groups, Z, n) + c * tau
        ry = b * tau - A @ x
        rz = [s + gx - hg * tau for s, gx, hg in zip(S, Gx, h)]
        cx, by, hz = float(c @ x), float(b @ y), _inner(h, Z)
        rt = kappa + cx + by + hz
        sz = _inner(S, Z)
        mu = (sz + tau * kappa) / (degree + 1)

        pcost, dcost = cx / tau, -(by + hz) / tau
        pres = max(float(np.linalg.norm(ry)) / tau / norm_b, _norm(rz) / tau / norm_h)
        dres = float(np.linalg.norm(rx)) / tau / norm_c
        gap = max(sz / tau ** 2, abs(pcost - dcost)) / max(1.0, abs(pcost))
        logger.debug(f"iter {iteration:3d}: pcost {pcost: .8e} dcost {dcost: .8e} "
                     f"pres {pres:.2e} dres {dres:.2e} gap {gap:.2e} tau {tau:.2e} kappa {kappa:.2e}")

        if pres <= tolerance and dres <= tolerance and gap <= tolerance:
            status, message = SolveStatus.OPTIMAL, ''
            break
        if best is None or max(pres, dres, gap) < max(best.primal_residual, best.dual_residual, best.gap):
            scale = 1.0 / tau
            best = ConicResult(SolveStatus.OPTIMAL, x * scale, y * scale, [s * scale for s in S],
                               [z * scale for z in Z], pcost, dcost, pres, dres, gap, iteration)
        if by + hz < 0:
            certificate = float(np.linalg.norm(AT @ y + _apply_GT(groups, Z, n))) / norm_c / -(by + hz)
            if certificate <= tolerance:
                status, message = SolveStatus.INFEASIBLE, f"certificate residual {certificate:.2e}"
                break
        if cx < 0:
            ray = max(float(np.linalg.norm(A @ x)) / norm_b,
                      _norm([gx + s for gx, s in zip(Gx, S)]) / norm_h) / -cx
            if ray <= tolerance:
                status, message = SolveStatus.UNBOUNDED, f"ray residual {ray:.2e}"
                break
        if pcost < UNBOUNDED_OBJECTIVE and pres <= np.sqrt(tolerance):
            status, message = SolveStatus.UNBOUNDED, f"objective below {UNBOUNDED_OBJECTIVE:g}"
            break
        if iteration == max_iterations:
            break

        try:
            scalings = []
            for j in range(len(groups)):
                try:
                    scalings.append(nt_scaling(S[j], Z[j]))
                except np.linalg.LinAlgError:
                    logger.debug(f"iter {iteration:3d}: repairing {groups[j].size}x{groups[j].size} cone iterates")
                    S[j], Z[j] = repair_pd(S[j]), repair_pd(Z[j])
                    rz[j] = S[j] + Gx[j] - h[j] * tau
                    scalings.append(nt_scaling(S[j], Z[j]))
        except np.linalg.LinAlgError:
            message = 'cone iterate lost positive definiteness'
            break
        mu = (_inner(S, Z) + tau * kappa) / (degree + 1)
        W = [sc[0] for sc in scalings]
        lam = [sc[2] for sc in scalings]
        WT = [np.swapaxes(w, -1, -2) for w in W]

        Ft = [np.einsum('bji,bkjl,blm->bkim', w, g.coefficients, w) for w, g in zip(W, groups)]
        ht = [wt @ hg @ w for wt, hg, w in zip(WT, h, W)]
        rzt = [wt @ r @ w for wt, r, w in zip(WT, rz, W)]

        rows, cols, data = [], [], []
        for g, f in zip(groups, Ft):
            block = np.einsum('bkij,blij->bkl', f, f)
            k = g.indices.shape[1]
            rows.append(np.repeat(g.indices, k, axis=1).ravel())
            cols.append(np.tile(g.indices, (1, k)).ravel())
            data.append(block.ravel())
        M = sparse.coo_matrix(
            (np.concatenate(data) if data else np.zeros(0),
             (np.concatenate(rows) if rows else np.zeros(0, int), np.concatenate(cols) if cols else np.zeros(0, int))),
            shape=(n, n),
        ).tocsc()
        try:
            kkt = _KktSolver(M, A)
        except RuntimeError as exc:
            message = f"KKT factorization failed: {exc}"
            break

        dx2, dy2 = kkt.solve(-c + _apply_GT(groups, ht, n, Ft), b)
        dz2 = [gx - hg for gx, hg in zip(_apply_G(groups, dx2, Ft), ht)]
        den = float(c @ dx2 + b @ dy2) + _inner(ht, dz2) - kappa / tau

        def direction(eta: float, sigma: float, corr=None, dtau_dkappa: float = 0.0):
            P = []
            for j, l in enumerate(lam):
                R = -np.einsum('bi,ij->bij', l ** 2, np.eye(l.shape[1]))
                R = R + sigma * mu * np.eye(l.shape[1])
                if corr is not None:
                    R = R - corr[j]
                P.append(2.0 * R / (l[:, :, None] + l[:, None, :]))
            base = [p + eta * r for p, r in zip(P, rzt)]
            dx1, dy1 = kkt.solve(-eta * rx - _apply_GT(groups, base, n, Ft), eta * ry)
            dz1 = [bz + gx for bz, gx in zip(base, _apply_G(groups, dx1, Ft))]
            rk = sigma * mu - tau * kappa - dtau_dkappa
            num = -eta * rt - rk / tau - float(c @ dx1 + b @ dy1) - _inner(ht, dz1)
            dtau = num / den
            dx = dx1 + dtau * dx2
            dy = dy1 + dtau * dy2
            dz = [z1 + dtau * z2 for z1, z2 in zip(dz1, dz2)]
            ds = [p - z for p, z in zip(P, dz)]
            dkappa = (rk - kappa * dtau) / tau
            return dx, dy, ds, dz, dtau, dkappa

        def step_length(ds, dz, dtau, dkappa) -> float:
            alpha = np.inf
            for l, s_, z_ in zip(lam, ds, dz):
                alpha = min(alpha, _max_step(l, s_), _max_step(l, z_))
            if dtau < 0:
                alpha = min(alpha, -tau / dtau)
            if dkappa < 0:
                alpha = min(alpha, -kappa / dkappa)
            return alpha

        aff = direction(1.0, 0.0)
        alpha_aff = min(1.0, step_length(*aff[2:]))
        sigma = (1.0 - alpha_aff) ** 3
        corr = [_sym(s_ @ z_) for s_, z_ in zip(aff[2], aff[3])]
        dx, dy, ds, dz, dtau, dkappa = direction(1.0 - sigma, sigma, corr, aff[4] * aff[5])
        alpha = min(1.0, STEP_FRACTION * step_length(ds, dz, dtau, dkappa))
        if alpha < MIN_STEP:
            message = f"step length {alpha:.1e} too small"
            break

        # slack step from the linearised residual equation, so rz shrinks by exactly (1 - alpha eta)
        eta = 1.0 - sigma
        dS = [-eta * r - g + hg * dtau for r, g, hg in zip(rz, _apply_G(groups, dx), h)]
        x = x + alpha * dx
        y = y + alpha * dy
        S = [_sym(s + alpha * d) for s, d in zip(S, dS)]
        Z = [_sym(z + alpha * w @ d @ wt) for z, w, wt, d in zip(Z, W, WT, dz)]
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa

    if status is SolveStatus.OPTIMAL:
        scale = 1.0 / tau
        return ConicResult(status, x * scale, y * scale, [s * scale for s in S], [z * scale for z in Z],
                           pcost, dcost, pres, dres, gap, iteration, message)
    if status in (SolveStatus.INFEASIBLE, SolveStatus.UNBOUNDED):
        return ConicResult(status, x, y, S, Z, pcost, dcost, pres, dres, gap, iteration, message)
    if best is not None and max(best.primal_residual, best.dual_residual, best.gap) <= np.sqrt(tolerance):
        logger.warning(f"interior point stopped after {iteration} iterations: {message}; "
                       f"keeping iterate {best.iterations} (pres {best.primal_residual:.1e}, "
                       f"dres {best.dual_residual:.1e}, gap {best.gap:.1e})")
        best.message = f"reduced accuracy: {message}"
        return best
    logger.warning(f"interior point stopped after {iteration} iterations: {message} "
                   f"(pres {pres:.1e}, dres {dres:.1e}, gap {gap:.1e})")
    return ConicResult(status, None, None, None, None, pcost, dcost, pres, dres, gap, iteration, message)


__all__ = ['BlockGroup', 'ConicResult', 'group_blocks', 'nt_scaling', 'repair_pd', 'solve_conic']
