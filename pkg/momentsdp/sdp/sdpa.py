"""
Sparse SDPA export and import.

SDPA's primal form is

    minimize  c^T y   subject to   sum_i y_i F_i - F_0  PSD,

so a cone block F0 + sum y_i F_i becomes F_0 = -F0. Equalities a^T y = b are
written as the two rows a^T y - b >= 0 and b - a^T y >= 0 of one diagonal
(negative-size) block that also carries the nonnegative rows. Only the upper
triangle of each symmetric matrix is written.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

import numpy as np

from .problem import SdpProblem

logger = logging.getLogger(__name__)


@dataclass
class SdpaFile:
    """Parsed sparse SDPA data; entries rows are (matrix, block, i, j, value), 1-based."""

    comments: List[str]
    c: np.ndarray
    block_sizes: List[int]
    entries: np.ndarray

    @property
    def n_vars(self) -> int:
        return len(self.c)

    def block_value(self, block: int, y: np.ndarray) -> np.ndarray:
        """sum_i y_i F_i - F_0 for a 1-based block: a matrix, or the diagonal of a diagonal block."""
        size = self.block_sizes[block - 1]
        diagonal = size < 0
        out = np.zeros(-size) if diagonal else np.zeros((size, size))
        rows = self.entries[self.entries[:, 1] == block]
        for mat, _, i, j, value in rows:
            weight = -1.0 if mat == 0 else float(y[int(mat) - 1])
            i, j = int(i) - 1, int(j) - 1
            if diagonal:
                out[i] += weight * value
            else:
                out[i, j] += weight * value
                if i != j:
                    out[j, i] += weight * value
        return out


def _header(problem: SdpProblem) -> List[str]:
    lines = [f'"momentsdp export: {problem.name}',
             f"* sense {problem.sense.value}; reported objective = {problem.objective_sign:g} * (c^T y + {problem.offset:.17g})"]
    for seg in problem.segments:
        if seg.size:
            lines.append(f"* segment {seg.name} variables {seg.start + 1}..{seg.stop}")
    for k, cone in enumerate(problem.cones, start=1):
        lines.append(f"* block {k} {cone.name}")
    return lines


def write_sdpa(problem: SdpProblem, path: Union[str, Path]) -> Path:
    """
    Write `problem` in sparse SDPA format.

    Args:
        problem: Assembled SDP
        path: Output file (conventionally *.dat-s)

    Returns:
        Path: the written file
    """
    path = Path(path)
    lines = _header(problem)

    entries: List[str] = []
    for k, cone in enumerate(problem.cones, start=1):
        s = cone.size
        upper = np.triu_indices(s)
        for i, j in zip(*upper):
            if cone.constant[i, j] != 0:
                entries.append(f"0 {k} {i + 1} {j + 1} {-cone.constant[i, j]:.17g}")
        for var, coef in zip(cone.indices, cone.coefficients):
            for i, j in zip(*upper):
                if coef[i, j] != 0:
                    entries.append(f"{int(var) + 1} {k} {i + 1} {j + 1} {coef[i, j]:.17g}")

    block_sizes = [cone.size for cone in problem.cones]
    lp_rows = 2 * problem.n_eq + sum(rows.rows for rows in problem.nonneg)
    if lp_rows:
        k = len(block_sizes) + 1
        block_sizes.append(-lp_rows)
        lines.append(f"* block {k} diagonal: {problem.n_eq} equality pairs, then nonnegative rows")
        A = problem.A_eq.tocoo()
        for r, b in enumerate(problem.b_eq):
            if b != 0:
                entries.append(f"0 {k} {2 * r + 1} {2 * r + 1} {b:.17g}")
                entries.append(f"0 {k} {2 * r + 2} {2 * r + 2} {-b:.17g}")
        for r, var, a in zip(A.row, A.col, A.data):
            entries.append(f"{var + 1} {k} {2 * r + 1} {2 * r + 1} {a:.17g}")
            entries.append(f"{var + 1} {k} {2 * r + 2} {2 * r + 2} {-a:.17g}")
        base = 2 * problem.n_eq
        for rows in problem.nonneg:
            G = rows.G.tocoo()
            for r, h in enumerate(rows.h):
                if h != 0:
                    entries.append(f"0 {k} {base + r + 1} {base + r + 1} {-h:.17g}")
            for r, var, g in zip(G.row, G.col, G.data):
                entries.append(f"{var + 1} {k} {base + r + 1} {base + r + 1} {g:.17g}")
            base += rows.rows

    lines.append(str(problem.n_vars))
    lines.append(str(len(block_sizes)))
    lines.append(' '.join(str(s) for s in block_sizes))
    lines.append(' '.join(f"{v:.17g}" for v in problem.c))
    lines.extend(entries)

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    logger.info(f"wrote SDPA file {path} ({problem.n_vars} variables, {len(block_sizes)} blocks)")
    return path


def read_sdpa(path: Union[str, Path]) -> SdpaFile:
    """Parse a sparse SDPA file; braces, commas and parentheses in the header lines are ignored."""
    text = Path(path).read_text(encoding='utf-8').splitlines()
    comments = []
    offset = 0
    while offset < len(text) and (not text[offset].strip() or text[offset][0] in '"*'):
        if text[offset].strip():
            comments.append(text[offset])
        offset += 1

    def numbers(line: str) -> List[str]:
        for ch in '{},()':
            line = line.replace(ch, ' ')
        return line.split()

    n_vars = int(numbers(text[offset])[0])
    n_blocks = int(numbers(text[offset + 1])[0])
    block_sizes = [int(v) for v in numbers(text[offset + 2])[:n_blocks]]
    c = np.array([float(v) for v in numbers(text[offset + 3])[:n_vars]])
    rows = [numbers(line) for line in text[offset + 4:] if line.strip()]
    entries = np.array([[float(v) for v in row[:5]] for row in rows]) if rows else np.zeros((0, 5))
    return SdpaFile(comments, c, block_sizes, entries)


__all__ = ['SdpaFile', 'write_sdpa', 'read_sdpa']
