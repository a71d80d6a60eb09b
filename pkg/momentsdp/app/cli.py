"""
Command-line front end.

    python -m momentsdp bound      --model M [--objective EXPR] [--order D | --orders 1,2,3] ...
    python -m momentsdp control    --model M [--controller-degree K] [--paths N] ...
    python -m momentsdp simulate   --model M [--controller FILE] [--moments x,x^2] ...
    python -m momentsdp export-sdp --model M [--order D] ...

Exit codes: 0 success, 2 solver failure, 64 usage error, 65 model or
controller file error, 1 anything else.
"""

import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from shared.config import config
from shared.types import Sense
from shared.utils import configure_logging

from ..algebra.parser import parse_monomial, parse_polynomial
from ..exceptions import (
    ClosureError,
    ControllerError,
    ModelFileError,
    ModelValidationError,
    MomentSdpError,
    PolynomialParseError,
    SimulationError,
    SolverError,
)
from ..models import JumpDiffusionModel, input_bounds, load_model
from ..sdp import BACKENDS, SolverOptions, assemble, solve_many, write_sdpa
from ..services.controller import extract_controller, load_controller, save_controller
from ..services.moment_system import build_auxiliary_system, dump_aux
from ..services.simulate import estimate_cost, estimate_long_run_cost, simulate_paths, write_moment_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_SOLVER = 2
EXIT_USAGE = 64
EXIT_DATAERR = 65

# simulated seconds for the long-run cost of a steady-state controller
LONG_RUN_HORIZON = 20.0


class UsageError(MomentSdpError):
    """Arguments are individually valid but do not fit the model or each other."""


class RunConfig(BaseModel):
    """Validated flags of one CLI invocation."""

    command: Literal['bound', 'control', 'simulate', 'export-sdp']
    model: Path
    objective: str = 'cost'
    orders: List[int] = Field(default_factory=lambda: [config.RELAXATION_ORDER])
    horizon: Optional[float] = Field(default=None, gt=0)
    steady_state: bool = False
    steps: Optional[int] = Field(default=None, ge=1)
    time_points: Optional[int] = Field(default=None, ge=1)
    sense: Optional[Literal['min', 'max', 'both']] = None
    n_paths: int = Field(default_factory=lambda: config.SIM_PATHS, ge=1)
    seed: int = Field(default_factory=lambda: config.SIM_SEED)
    dt: float = Field(default_factory=lambda: config.SIM_DT, gt=0)
    output: Path = Field(default_factory=lambda: config.OUTPUT_DIR)
    controller: Optional[Path] = None
    controller_degree: int = Field(default=1, ge=0)
    costs_file: Optional[str] = None
    moments: List[str] = Field(default_factory=list)
    stride: int = Field(default=1, ge=1)
    backend: str = Field(default_factory=lambda: config.SOLVER_BACKEND)
    tolerance: float = Field(default_factory=lambda: config.SOLVER_TOLERANCE, gt=0)
    max_iterations: int = Field(default_factory=lambda: config.SOLVER_MAX_ITERATIONS, ge=1)
    scale: Optional[float] = Field(default=None, gt=0)
    threads: int = Field(default_factory=lambda: config.THREADS, ge=1)
    verbose: bool = False

    @field_validator('orders')
    @classmethod
    def positive_orders(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("at least one relaxation order is required")
        if any(d < 1 for d in value):
            raise ValueError("relaxation orders must be >= 1")
        return sorted(set(value))

    @field_validator('backend')
    @classmethod
    def known_backend(cls, value: str) -> str:
        if value not in BACKENDS:
            raise ValueError(f"backend must be one of {', '.join(BACKENDS)}")
        return value

    @model_validator(mode='after')
    def horizon_choice(self) -> 'RunConfig':
        if self.steady_state and self.horizon is not None:
            raise ValueError("--steady-state and --T are mutually exclusive")
        return self

    def solver_options(self) -> SolverOptions:
        return SolverOptions(tolerance=self.tolerance, max_iterations=self.max_iterations, backend=self.backend)


class _ArgumentParser(argparse.ArgumentParser):
    """Exits with the usage code instead of argparse's 2, which means solver failure here."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _order_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def _add_model_options(p: argparse.ArgumentParser) -> None:
    p.add_argument('--model', required=True, type=Path, help='Model file')
    p.add_argument('--T', dest='horizon', type=float, help='Horizon in seconds (overrides the model)')
    p.add_argument('--output', type=Path, help=f"Output directory (default {config.OUTPUT_DIR})")
    p.add_argument('--threads', type=int, help='Worker threads (default MOMENTSDP_THREADS)')
    p.add_argument('--verbose', action='store_true', help='Debug logging')


def _add_relaxation_options(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument('--order', type=int, help='Relaxation order d')
    group.add_argument('--orders', type=_order_list, help='Comma-separated sweep of relaxation orders')
    p.add_argument('--steady-state', action='store_true', help='Solve the stationary problem')
    p.add_argument('--steps', type=int, help='Grid intervals N (overrides the model)')
    p.add_argument('--scale', type=float, help='Moment scale s (X_m stored as X_m / s^deg)')
    p.add_argument('--backend', choices=BACKENDS, help='SDP backend')
    p.add_argument('--tolerance', type=float, help='Solver tolerance')
    p.add_argument('--max-iterations', type=int, help='Solver iteration limit')


def _add_simulation_options(p: argparse.ArgumentParser) -> None:
    p.add_argument('--paths', dest='n_paths', type=int, help='Monte Carlo paths')
    p.add_argument('--seed', type=int, help='Random seed')
    p.add_argument('--dt', type=float, help='Simulation step in seconds')


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog='momentsdp', description='Moment SDP bounds and controllers for '
                                                         'polynomial jump diffusions')
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_ArgumentParser)

    bound = sub.add_parser('bound', help='Lower/upper bounds on a moment functional')
    _add_model_options(bound)
    _add_relaxation_options(bound)
    bound.add_argument('--objective', default='cost', help="Polynomial to bound, or 'cost' for the model cost")
    bound.add_argument('--sense', choices=('min', 'max', 'both'), help='Which bounds to compute')
    bound.add_argument('--time-points', type=int, help='Also bound E[objective] at T*i/K, i = 1..K')

    control = sub.add_parser('control', help='Lower bound, extracted controller and its simulated cost')
    _add_model_options(control)
    _add_relaxation_options(control)
    _add_simulation_options(control)
    control.add_argument('--controller-degree', type=int, help='Degree of the feedback polynomial')
    control.add_argument('--costs-file', help='Name of the per-order cost table in the output directory '
                         '(default rate_costs.csv when an input drives a jump intensity, else costs.csv)')

    simulate = sub.add_parser('simulate', help='Monte Carlo moment trajectories')
    _add_model_options(simulate)
    _add_simulation_options(simulate)
    simulate.add_argument('--controller', type=Path, help='Controller file for the inputs')
    simulate.add_argument('--moments', help='Comma-separated monomials (default: every state and its square)')
    simulate.add_argument('--stride', type=int, help='Write every stride-th grid point')

    export = sub.add_parser('export-sdp', help='Write the SDP in sparse SDPA format')
    _add_model_options(export)
    _add_relaxation_options(export)
    export.add_argument('--objective', default='cost', help="Polynomial to bound, or 'cost' for the model cost")
    export.add_argument('--sense', choices=('min', 'max', 'both'), help='Which problems to export')

    return parser


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Parse argv into a RunConfig; raises SystemExit(64) or ValidationError on bad flags."""
    args = vars(build_parser().parse_args(argv))
    order = args.pop('order', None)
    if order is not None:
        args['orders'] = [order]
    if 'moments' in args and args['moments'] is not None:
        args['moments'] = [m.strip() for m in args['moments'].split(',') if m.strip()]
    return RunConfig(**{k: v for k, v in args.items() if v is not None})


# -- helpers -------------------------------------------------------------------


def _horizon(cfg: RunConfig, model: JumpDiffusionModel) -> Tuple[Optional[float], Optional[int]]:
    if cfg.steady_state:
        return None, None
    horizon = cfg.horizon if cfg.horizon is not None else model.horizon
    if horizon is None:
        return None, None
    steps = cfg.steps or model.steps or config.HORIZON_STEPS
    return horizon, steps


def _objective(cfg: RunConfig, model: JumpDiffusionModel):
    if cfg.objective == 'cost':
        return None
    try:
        return parse_polynomial(cfg.objective, model.variables)
    except PolynomialParseError as exc:
        raise UsageError(f"--objective: {exc}")


def _senses(cfg: RunConfig, model: JumpDiffusionModel) -> List[Sense]:
    sense = cfg.sense
    if sense is None:
        sense = 'both' if not model.is_controlled else model.sense.value
    if sense == 'both':
        if model.is_controlled:
            raise UsageError("--sense both needs a model without inputs; bounds on a controlled model are one-sided")
        return [Sense.MIN, Sense.MAX]
    return [Sense(sense)]


def _format(value: Optional[float]) -> str:
    return '' if value is None else f"{value:.17g}"


def _require_ok(solutions) -> None:
    for solution in solutions:
        if not solution.ok:
            raise SolverError(f"{solution.problem.name} ({solution.problem.sense.value}): "
                              f"{solution.status.value} {solution.message}".rstrip(), solution)


# -- subcommands -----------------------------------------------------------------


def cmd_bound(cfg: RunConfig) -> int:
    """Write bounds.csv (t, lower, upper) and print the final interval."""
    model = load_model(cfg.model)
    objective = _objective(cfg, model)
    senses = _senses(cfg, model)
    horizon, steps = _horizon(cfg, model)
    if horizon is None and cfg.time_points:
        raise UsageError("--time-points needs a finite horizon")
    options = cfg.solver_options()

    rows = []
    for order in cfg.orders:
        aux = build_auxiliary_system(model, order, objective=objective, scale=cfg.scale, max_workers=cfg.threads)
        if horizon is None:
            grid = [(None, None)]
        else:
            K = cfg.time_points or 1
            grid = [(horizon * i / K, max(1, int(round(steps * i / K)))) for i in range(1, K + 1)]
        problems = [assemble(aux, T, N, sense) for T, N in grid for sense in senses]
        solutions = solve_many(problems, options, cfg.threads)
        _require_ok(solutions)
        for i, (T, _) in enumerate(grid):
            found = {s.problem.sense: s.objective for s in solutions[i * len(senses):(i + 1) * len(senses)]}
            rows.append((order, T, found.get(Sense.MIN), found.get(Sense.MAX)))

    path = cfg.output / 'bounds.csv'
    path.parent.mkdir(parents=True, exist_ok=True)
    sweep = len(cfg.orders) > 1
    with path.open('w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        writer.writerow((['order'] if sweep else []) + ['t', 'lower', 'upper'])
        for order, T, lower, upper in rows:
            t = 'inf' if T is None else f"{T:.10g}"
            writer.writerow(([order] if sweep else []) + [t, _format(lower), _format(upper)])
    logger.info(f"wrote {path}")

    order, T, lower, upper = rows[-1]
    print(f"d={order}: [{'-inf' if lower is None else f'{lower:.10g}'}, "
          f"{'inf' if upper is None else f'{upper:.10g}'}]")
    return EXIT_OK


def _costs_name(model: JumpDiffusionModel) -> str:
    if any(jump.intensity.degree_in(model.input_vars) > 0 for jump in model.jumps):
        return 'rate_costs.csv'
    return 'costs.csv'


def cmd_control(cfg: RunConfig) -> int:
    """Per order: SDP bound, extracted controller file and the controller's simulated cost."""
    model = load_model(cfg.model)
    if not model.is_controlled:
        raise UsageError(f"model {model.name} has no inputs")
    horizon, steps = _horizon(cfg, model)
    options = cfg.solver_options()
    lo, hi = input_bounds(model)

    rows = []
    for order in cfg.orders:
        aux = build_auxiliary_system(model, order, scale=cfg.scale, max_workers=cfg.threads)
        problem = assemble(aux, horizon, steps)
        solution, = solve_many([problem], options)
        _require_ok([solution])

        controller = extract_controller(solution, degree=cfg.controller_degree).clip(lo, hi)
        save_controller(controller, cfg.output / f"controller_d{order}.txt")

        if horizon is None:
            sim_horizon = model.horizon or LONG_RUN_HORIZON
            ensemble = simulate_paths(model, controller, cfg.dt, sim_horizon, cfg.n_paths, cfg.seed, cfg.threads)
            estimate = estimate_long_run_cost(ensemble)
        else:
            ensemble = simulate_paths(model, controller, cfg.dt, horizon, cfg.n_paths, cfg.seed, cfg.threads)
            # left Riemann sum, as in the SDP objective
            estimate = estimate_cost(ensemble, quadrature='left')
        gap = model.sense.sign * (estimate.value - solution.objective)
        rows.append((order, solution.objective, estimate.value, estimate.standard_error, gap))
        print(f"d={order}: sdp {solution.objective:.8g}, monte carlo {estimate.value:.8g} "
              f"+- {estimate.standard_error:.2g}, gap {gap:.4g}")

    path = cfg.output / (cfg.costs_file or _costs_name(model))
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        writer.writerow(['order', 'sdp_bound', 'mc_estimate', 'mc_se', 'gap'])
        for order, bound, mc, se, gap in rows:
            writer.writerow([order, f"{bound:.17g}", f"{mc:.17g}", f"{se:.17g}", f"{gap:.17g}"])
    logger.info(f"wrote {path}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    """Write moments.csv (t, moment, estimate, se)."""
    model = load_model(cfg.model)
    controller = load_controller(cfg.controller) if cfg.controller is not None else None
    if model.is_controlled and controller is None:
        raise UsageError(f"model {model.name} has inputs; pass --controller")
    horizon = cfg.horizon if cfg.horizon is not None else model.horizon
    if horizon is None:
        raise UsageError("steady-state model: pass --T for the simulation horizon")

    if cfg.moments:
        try:
            monomials = [parse_monomial(text, model.variables) for text in cfg.moments]
        except PolynomialParseError as exc:
            raise UsageError(f"--moments: {exc}")
    else:
        monomials = []
        for i in range(model.n):
            for power in (1, 2):
                monomials.append(tuple(power if k == i else 0 for k in range(len(model.variables))))

    ensemble = simulate_paths(model, controller, cfg.dt, horizon, cfg.n_paths, cfg.seed, cfg.threads)
    write_moment_csv(ensemble, monomials, cfg.output / 'moments.csv', stride=cfg.stride)
    return EXIT_OK


def cmd_export_sdp(cfg: RunConfig) -> int:
    """Write one .dat-s file per (order, sense) and the auxiliary-system dump per order."""
    model = load_model(cfg.model)
    objective = _objective(cfg, model)
    senses = _senses(cfg, model)
    horizon, steps = _horizon(cfg, model)
    for order in cfg.orders:
        aux = build_auxiliary_system(model, order, objective=objective, scale=cfg.scale, max_workers=cfg.threads)
        dump = cfg.output / f"{model.name}-d{order}.aux.txt"
        dump.parent.mkdir(parents=True, exist_ok=True)
        dump.write_text(dump_aux(aux), encoding='utf-8')
        for sense in senses:
            problem = assemble(aux, horizon, steps, sense)
            path = write_sdpa(problem, cfg.output / f"{problem.name}-{sense.value}.dat-s")
            print(path)
    return EXIT_OK


COMMANDS = {
    'bound': cmd_bound,
    'control': cmd_control,
    'simulate': cmd_simulate,
    'export-sdp': cmd_export_sdp,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code."""
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ValidationError as exc:
        print(f"momentsdp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    configure_logging(debug=cfg.verbose or config.DEBUG, level=config.LOG_LEVEL)
    try:
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"momentsdp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelFileError, ModelValidationError, ClosureError) as exc:
        print(f"momentsdp: {exc}", file=sys.stderr)
        return EXIT_DATAERR
    except SolverError as exc:
        print(f"momentsdp: solver failed: {exc.status}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ControllerError, SimulationError) as exc:
        logger.error(f"{exc}")
        print(f"momentsdp: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except MomentSdpError as exc:
        logger.error(f"{exc}")
        print(f"momentsdp: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except ValueError as exc:
        print(f"momentsdp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


__all__ = ['RunConfig', 'build_parser', 'parse_config', 'cmd_bound', 'cmd_control', 'cmd_simulate',
           'cmd_export_sdp', 'main']
