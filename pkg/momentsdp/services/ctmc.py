"""
Exact stationary law of finite-state pure-jump models.

A model qualifies when it has no inputs, zero drift and diffusion, every jump
moves the state by a constant integer vector, and x(0) is an integer point.
The reachable states are enumerated breadth-first from x(0); the limit law is
the mix of the closed classes' stationary laws weighted by their absorption
probabilities.
"""

import logging
from collections import deque
from typing import Dict, List, Tuple

import numpy as np
from scipy import sparse
from scipy.linalg import null_space
from scipy.sparse.csgraph import connected_components

from shared.types import InitialKind

from ..algebra.monomials import MultiIndex
from ..models.model import JumpDiffusionModel

logger = logging.getLogger(__name__)

State = Tuple[int, ...]


def _increments(model: JumpDiffusionModel) -> List[np.ndarray]:
    if model.is_controlled:
        raise ValueError("the CTMC oracle needs a model without inputs")
    if any(not f.is_zero() for f in model.drift) or any(not g.is_zero() for row in model.diffusion for g in row):
        raise ValueError("the CTMC oracle needs a pure-jump model (zero drift and diffusion)")
    increments = []
    for j, jump in enumerate(model.jumps, start=1):
        step = []
        for i, phi in enumerate(jump.jump_map):
            delta = phi - model.polynomial(model.state_vars[i])
            value = float(delta.coefficient((0,) * len(model.variables))) if delta.is_constant() else None
            if value is None or value != round(value):
                raise ValueError(f"jump {j} does not move {model.state_vars[i]} by a constant integer")
            step.append(int(round(value)))
        increments.append(np.array(step))
    return increments


def _start(model: JumpDiffusionModel) -> State:
    initial = model.initial
    if initial.kind is not InitialKind.DIRAC or any(v != round(v) for v in initial.point):
        raise ValueError("the CTMC oracle needs a Dirac initial condition on the integer lattice")
    return tuple(int(round(v)) for v in initial.point)


def enumerate_states(model: JumpDiffusionModel, max_states: int = 10000) -> Tuple[List[State], sparse.csr_matrix]:
    """
    Reachable states and the rate matrix Q (rows sum to zero).

    Raises:
        ValueError: if the model does not qualify or more than `max_states` states are reachable
    """
    increments = _increments(model)
    start = _start(model)
    index: Dict[State, int] = {start: 0}
    states: List[State] = [start]
    rows, cols, rates = [], [], []
    queue = deque([start])
    while queue:
        x = queue.popleft()
        point = np.array(x, dtype=float)
        for j, (jump, delta) in enumerate(zip(model.jumps, increments), start=1):
            rate = float(jump.intensity.evaluate(point))
            if rate < -1e-12:
                raise ValueError(f"jump {j} has negative intensity {rate:g} at state {x}")
            if rate <= 0 or not delta.any():
                continue
            y = tuple(int(v) for v in np.array(x) + delta)
            if y not in index:
                if len(states) >= max_states:
                    raise ValueError(f"more than {max_states} reachable states; the state set may be infinite")
                index[y] = len(states)
                states.append(y)
                queue.append(y)
            rows.append(index[x])
            cols.append(index[y])
            rates.append(rate)

    n = len(states)
    Q = sparse.coo_matrix((rates, (rows, cols)), shape=(n, n)).tocsr()
    Q = Q - sparse.diags(np.asarray(Q.sum(axis=1)).ravel())
    return states, Q.tocsr()


def _class_law(Q: np.ndarray) -> np.ndarray:
    if Q.shape[0] == 1:
        return np.ones(1)
    basis = null_space(Q.T)
    pi = basis[:, 0]
    return pi / pi.sum()


def ctmc_stationary_oracle(model: JumpDiffusionModel, max_states: int = 10000) -> Dict[State, float]:
    """
    Long-run distribution of the chain started at x(0), keyed by lattice state.

    Raises:
        ValueError: if the model is not a finite-state pure-jump model
    """
    states, Q = enumerate_states(model, max_states)
    n = len(states)
    n_classes, labels = connected_components(Q, directed=True, connection='strong')
    dense = Q.toarray()

    closed = []
    for c in range(n_classes):
        members = np.nonzero(labels == c)[0]
        outside = np.setdiff1d(np.arange(n), members)
        if not len(outside) or not np.any(dense[np.ix_(members, outside)] > 0):
            closed.append(members)

    transient = np.setdiff1d(np.arange(n), np.concatenate(closed))
    pi = np.zeros(n)
    for members in closed:
        law = _class_law(dense[np.ix_(members, members)])
        if 0 in members:
            weight = 1.0
        elif 0 in transient:
            # absorption probabilities h solve Q_TT h = -Q_TC 1
            rhs = -dense[np.ix_(transient, members)].sum(axis=1)
            h = np.linalg.solve(dense[np.ix_(transient, transient)], rhs)
            weight = float(h[np.searchsorted(transient, 0)])
        else:
            weight = 0.0
        pi[members] += weight * law

    logger.info(f"{model.name}: {n} reachable states, {len(closed)} closed class(es)")
    return {state: float(p) for state, p in zip(states, pi)}


def stationary_moment(distribution: Dict[State, float], m: MultiIndex) -> float:
    """E[x^m] under a lattice distribution; m is over the state variables."""
    return float(sum(p * np.prod([float(v) ** e for v, e in zip(state, m)]) for state, p in distribution.items()))


__all__ = ['enumerate_states', 'ctmc_stationary_oracle', 'stationary_moment']
