"""
Monte Carlo simulation of controlled polynomial jump diffusions.

Each step of length dt either fires one jump or takes an Euler-Maruyama step:
with probability sum_j lambda_j(x, u) dt a single combined Poisson clock
rings, the channel is picked with probability lambda_j / sum_i lambda_i and
the state moves to phi_j(x, u); otherwise x += f dt + g sqrt(dt) xi.

Every path draws from its own Philox stream keyed by (seed, path index), so
results do not depend on the chunking or the number of worker threads.
"""

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from shared.config import config
from shared.types import InitialKind

from ..algebra.monomials import MultiIndex, format_monomial
from ..exceptions import SimulationError
from ..models.model import JumpDiffusionModel, state_floor_variables
from .controller import PolynomialController

logger = logging.getLogger(__name__)

JUMP_PROBABILITY_WARNING = 0.1
NEGATIVE_INTENSITY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    standard_error: float
    n_samples: int

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> 'MomentEstimate':
        samples = np.asarray(samples, dtype=float)
        n = len(samples)
        se = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(np.mean(samples)), se, n)

    def contains(self, target: float, width: float = 3.0) -> bool:
        """Whether `target` lies within `width` standard errors of the estimate."""
        return abs(self.value - target) <= width * self.standard_error


@dataclass(frozen=True, eq=False)
class TrajectoryEnsemble:
    """Simulated paths on the grid t_k = k dt, k = 0..steps.

    `paths` is (n_paths, steps + 1, n), `inputs` is (n_paths, steps + 1, n_u)
    and `jumps` holds the fired channel per step (1-based, 0 for none).
    """

    model: JumpDiffusionModel
    controller: Optional[PolynomialController]
    dt: float
    steps: int
    paths: np.ndarray
    inputs: np.ndarray
    jumps: np.ndarray
    seed: int
    reflections: int = 0

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    @property
    def horizon(self) -> float:
        return self.dt * self.steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    def values(self) -> np.ndarray:
        """States and inputs side by side over the model's full context."""
        return np.concatenate([self.paths, self.inputs], axis=-1)

    def grid_index(self, t: float) -> int:
        """
        Grid index of `t`.

        Raises:
            ValueError: if t is not a grid point of the ensemble
        """
        k = int(round(t / self.dt))
        if k < 0 or k > self.steps or abs(k * self.dt - t) > 1e-9 * max(1.0, self.horizon):
            raise ValueError(f"t={t:g} is not on the simulation grid (dt={self.dt:g}, T={self.horizon:g})")
        return k


def _initial_sampler(model: JumpDiffusionModel):
    initial = model.initial
    if initial.kind is InitialKind.DIRAC:
        point = np.asarray(initial.point, dtype=float)
        return lambda rng: point.copy()
    if initial.kind is InitialKind.GAUSSIAN:
        mean = np.asarray(initial.mean, dtype=float)
        w, V = np.linalg.eigh(np.asarray(initial.covariance, dtype=float))
        factor = V * np.sqrt(np.clip(w, 0.0, None))
        return lambda rng: mean + factor @ rng.standard_normal(model.n)
    raise ValueError("an initial distribution given only by its moments cannot be sampled")


def _path_rng(seed: int, path: int) -> np.random.Generator:
    key = np.array([seed % 2 ** 64, path], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class _Stepper:
    """Advances a chunk of paths; shares only immutable data between threads."""

    def __init__(self, model: JumpDiffusionModel, controller: Optional[PolynomialController],
                 dt: float, steps: int, seed: int):
        self.model = model
        self.controller = controller
        self.dt = dt
        self.steps = steps
        self.seed = seed
        self.floors = state_floor_variables(model)
        self.sample_initial = _initial_sampler(model)

    def inputs(self, t: float, x: np.ndarray) -> np.ndarray:
        if self.controller is None:
            return np.zeros((x.shape[0], 0))
        return self.controller.evaluate_many(t, x)

    def run(self, first: int, count: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int, float]:
        model, dt, N = self.model, self.dt, self.steps
        n, n_u, n_w, n_j = model.n, model.n_u, model.n_w, len(model.jumps)

        x = np.empty((count, n))
        normals = np.empty((count, N, n_w))
        uniforms = np.empty((count, N, 2))
        for p in range(count):
            rng = _path_rng(self.seed, first + p)
            x[p] = self.sample_initial(rng)
            normals[p] = rng.standard_normal((N, n_w))
            uniforms[p] = rng.random((N, 2))

        paths = np.empty((count, N + 1, n))
        inputs = np.empty((count, N + 1, n_u))
        jumps = np.zeros((count, N), dtype=np.int16)
        reflections = 0
        worst_probability = 0.0
        sqrt_dt = math.sqrt(dt)
        paths[:, 0] = x

        for k in range(N):
            t = k * dt
            u = self.inputs(t, x)
            inputs[:, k] = u
            z = np.concatenate([x, u], axis=1)

            step = x + dt * np.stack([f.evaluate_array(z) for f in model.drift], axis=1)
            if n_w:
                g = np.stack([np.stack([gij.evaluate_array(z) for gij in row], axis=1)
                              for row in model.diffusion], axis=1)
                step = step + sqrt_dt * np.einsum('pij,pj->pi', g, normals[:, k])

            if n_j:
                rates = np.stack([jump.intensity.evaluate_array(z) for jump in model.jumps], axis=1)
                bad = np.nonzero(rates.min(axis=1) < -NEGATIVE_INTENSITY_TOLERANCE)[0]
                if len(bad):
                    logger.error(f"{model.name}: negative jump intensity at t={t:g}, x={x[bad[0]].tolist()}")
                    raise SimulationError("negative jump intensity", t, x[bad[0]].tolist())
                rates = np.clip(rates, 0.0, None)
                total = rates.sum(axis=1)
                probability = total * dt
                worst_probability = max(worst_probability, float(probability.max()))
                fire = uniforms[:, k, 0] < probability
                if fire.any():
                    cumulative = np.cumsum(rates[fire], axis=1)
                    target = uniforms[fire, k, 1] * total[fire]
                    channel = np.minimum((cumulative <= target[:, None]).sum(axis=1), n_j - 1)
                    fired = np.nonzero(fire)[0]
                    for j, jump in enumerate(model.jumps):
                        rows = fired[channel == j]
                        if len(rows):
                            step[rows] = np.stack([phi.evaluate_array(z[rows]) for phi in jump.jump_map], axis=1)
                    jumps[fired, k] = channel + 1

            for i in self.floors:
                below = step[:, i] < 0
                if below.any():
                    reflections += int(below.sum())
                    step[below, i] = 0.0

            x = step
            paths[:, k + 1] = x

        inputs[:, N] = self.inputs(N * dt, x)
        return paths, inputs, jumps, reflections, worst_probability


def simulate_paths(model: JumpDiffusionModel, controller: Optional[PolynomialController] = None,
                   dt: Optional[float] = None, T: Optional[float] = None, n_paths: Optional[int] = None,
                   seed: Optional[int] = None, max_workers: Optional[int] = None,
                   chunk_size: Optional[int] = None) -> TrajectoryEnsemble:
    """
    Simulate `n_paths` independent trajectories.

    Args:
        model: Model to simulate
        controller: Feedback law for the inputs; required when the model has inputs
        dt: Step length; T is split into round(T / dt) equal steps
        T: Horizon; defaults to the model's
        n_paths: Number of trajectories
        seed: Seed of the per-path random streams
        max_workers: Worker threads over path chunks
        chunk_size: Paths per chunk

    Returns:
        TrajectoryEnsemble: identical for identical arguments

    Raises:
        SimulationError: if a visited state has a negative jump intensity
    """
    dt = config.SIM_DT if dt is None else float(dt)
    T = model.horizon if T is None else float(T)
    n_paths = config.SIM_PATHS if n_paths is None else int(n_paths)
    seed = config.SIM_SEED if seed is None else int(seed)
    max_workers = config.THREADS if max_workers is None else max(1, int(max_workers))
    chunk_size = config.SIM_CHUNK_SIZE if chunk_size is None else max(1, int(chunk_size))
    if T is None:
        raise ValueError("a steady-state model needs an explicit simulation horizon T")
    if dt <= 0 or T <= 0 or n_paths < 1:
        raise ValueError("dt and T must be positive and n_paths at least 1")
    if model.is_controlled and controller is None:
        raise ValueError(f"model {model.name} has inputs; supply a controller")
    if controller is not None and (controller.state_vars != model.state_vars
                                   or controller.input_vars != model.input_vars):
        raise ValueError("controller variables do not match the model")

    steps = max(1, int(round(T / dt)))
    dt = T / steps
    stepper = _Stepper(model, controller if model.is_controlled else None, dt, steps, seed)
    chunks = [(first, min(chunk_size, n_paths - first)) for first in range(0, n_paths, chunk_size)]

    if max_workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(lambda c: stepper.run(*c), chunks))
    else:
        results = [stepper.run(*c) for c in chunks]

    paths = np.concatenate([r[0] for r in results])
    inputs = np.concatenate([r[1] for r in results])
    jumps = np.concatenate([r[2] for r in results])
    reflections = sum(r[3] for r in results)
    worst = max(r[4] for r in results)

    if worst > JUMP_PROBABILITY_WARNING:
        logger.warning(f"{model.name}: per-step jump probability reached {worst:.3f}; reduce dt")
    if reflections:
        logger.warning(f"{model.name}: {reflections} Euler steps crossed a state floor and were reset to 0")
    logger.info(f"simulated {n_paths} paths of {model.name} over [0, {T:g}] with dt={dt:g} "
                f"({int((jumps > 0).sum())} jumps)")
    return TrajectoryEnsemble(model, controller, dt, steps, paths, inputs, jumps, seed, reflections)


def _monomial_values(ensemble: TrajectoryEnsemble, m: MultiIndex, k: Union[int, slice]) -> np.ndarray:
    model = ensemble.model
    m = tuple(m)
    if len(m) == model.n:
        m = m + (0,) * model.n_u
    if len(m) != model.n + model.n_u:
        raise ValueError(f"monomial {m} does not match the model variables {model.variables}")
    values = ensemble.values()[:, k]
    return np.prod(values ** np.array(m, dtype=float), axis=-1)


def empirical_moment(ensemble: TrajectoryEnsemble, m: MultiIndex, t: float) -> MomentEstimate:
    """Sample mean of x(t)^m across paths; m may be over the states or the full context."""
    return MomentEstimate.from_samples(_monomial_values(ensemble, m, ensemble.grid_index(t)))


QUADRATURES = ('trapezoid', 'left')


def estimate_cost(ensemble: TrajectoryEnsemble, model: Optional[JumpDiffusionModel] = None,
                  quadrature: str = 'trapezoid') -> MomentEstimate:
    """
    Running cost plus terminal cost per path, averaged.

    Args:
        ensemble: Simulated paths
        model: Cost source; defaults to the ensemble's model
        quadrature: 'trapezoid', or 'left' for the Riemann sum dt * sum_{k<N} c(t_k)
            used by the finite-horizon SDP objective

    Raises:
        ValueError: for an unknown quadrature
    """
    if quadrature not in QUADRATURES:
        raise ValueError(f"quadrature must be one of {', '.join(QUADRATURES)}, got {quadrature!r}")
    model = model or ensemble.model
    values = ensemble.values()
    running = model.running_cost.evaluate_array(values)
    if quadrature == 'left':
        integral = ensemble.dt * running[:, :-1].sum(axis=1)
    else:
        integral = trapezoid(running, dx=ensemble.dt, axis=1)
    total = integral + model.terminal_cost.evaluate_array(values[:, -1])
    estimate = MomentEstimate.from_samples(total)
    logger.info(f"Monte Carlo cost of {model.name} ({quadrature}): "
                f"{estimate.value:.6g} +- {estimate.standard_error:.2g}")
    return estimate


def estimate_long_run_cost(ensemble: TrajectoryEnsemble, tail: float = 0.25,
                           model: Optional[JumpDiffusionModel] = None) -> MomentEstimate:
    """
    Long-run mean of the terminal functional h, averaged over the last `tail` fraction of the horizon.

    Used for steady-state models, whose objective is the stationary mean of h.
    """
    if not 0 < tail <= 1:
        raise ValueError(f"tail must lie in (0, 1], got {tail}")
    model = model or ensemble.model
    first = min(ensemble.steps - 1, int(round((1 - tail) * ensemble.steps)))
    window = ensemble.values()[:, first:]
    h = model.terminal_cost.evaluate_array(window)
    duration = (window.shape[1] - 1) * ensemble.dt
    estimate = MomentEstimate.from_samples(trapezoid(h, dx=ensemble.dt, axis=1) / duration)
    logger.info(f"long-run Monte Carlo cost of {model.name}: {estimate.value:.6g} +- {estimate.standard_error:.2g}")
    return estimate


def moment_trajectory(ensemble: TrajectoryEnsemble, m: MultiIndex) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and standard error of x^m at every grid point."""
    samples = _monomial_values(ensemble, m, slice(None))
    se = np.std(samples, axis=0, ddof=1) / math.sqrt(ensemble.n_paths) if ensemble.n_paths > 1 \
        else np.zeros(samples.shape[1])
    return samples.mean(axis=0), se


def write_moment_csv(ensemble: TrajectoryEnsemble, monomials: Sequence[MultiIndex],
                     path: Union[str, Path], stride: int = 1) -> Path:
    """Write rows (t, moment, estimate, se) for every `stride`-th grid point."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    context = ensemble.model.variables
    times = ensemble.times
    with path.open('w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        writer.writerow(['t', 'moment', 'estimate', 'se'])
        for m in monomials:
            padded = tuple(m) + (0,) * (len(context) - len(m))
            label = format_monomial(padded, context)
            mean, se = moment_trajectory(ensemble, padded)
            for k in range(0, ensemble.steps + 1, max(1, stride)):
                writer.writerow([f"{times[k]:.10g}", label, f"{mean[k]:.17g}", f"{se[k]:.17g}"])
    logger.info(f"wrote {path}")
    return path


def jump_statistics(ensemble: TrajectoryEnsemble) -> Tuple[np.ndarray, List[float]]:
    """Per-channel jump counts and the waiting times between consecutive jumps of each path."""
    n_j = len(ensemble.model.jumps)
    counts = np.array([(ensemble.jumps == j).sum() for j in range(1, n_j + 1)])
    waits: List[float] = []
    for row in ensemble.jumps:
        steps = np.nonzero(row)[0]
        waits.extend((np.diff(steps) * ensemble.dt).tolist())
    return counts, waits


def first_jump_times(ensemble: TrajectoryEnsemble) -> np.ndarray:
    """End of the step holding each path's first jump; inf for paths that never jump."""
    fired = ensemble.jumps > 0
    first = (np.argmax(fired, axis=1) + 1) * ensemble.dt
    return np.where(fired.any(axis=1), first, np.inf)


__all__ = [
    'MomentEstimate',
    'TrajectoryEnsemble',
    'simulate_paths',
    'estimate_cost',
    'estimate_long_run_cost',
    'empirical_moment',
    'moment_trajectory',
    'write_moment_csv',
    'jump_statistics',
    'first_jump_times',
]
