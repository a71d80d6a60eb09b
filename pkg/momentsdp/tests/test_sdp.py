"""
Tests for SDP assembly, the bound pair, backends and SDPA export.
"""

import numpy as np
import pydantic
import pytest

from shared.types import Sense, SolveStatus

from momentsdp.exceptions import SolverError
from momentsdp.models import loads_model
from momentsdp.sdp import (
    SolverOptions,
    assemble,
    assemble_finite_horizon,
    bound_pair,
    read_sdpa,
    solve,
    solve_many,
    write_sdpa,
)
from momentsdp.services.ctmc import ctmc_stationary_oracle, stationary_moment
from momentsdp.services.moment_system import build_auxiliary_system

from .conftest import INFEASIBLE

ORNSTEIN_UHLENBECK = """
[vars]
names = x

[drift]
x = -x

[diffusion]
x.1 = 1

[cost]
running = 0
terminal = x^2

[initial]
kind = dirac
point = 1

[horizon]
T = 1
"""

OPTIONS = SolverOptions(tolerance=1e-8, max_iterations=200, backend='embedded')


def test_lqr_steady_state_optimum(lqr):
    model = lqr.with_horizon(None).with_objective(terminal=lqr.polynomial('x^2 + u^2'))
    aux = build_auxiliary_system(model, 1)
    solution = solve(assemble(aux), OPTIONS)
    assert solution.ok
    assert solution.objective == pytest.approx(1.0, abs=1e-6)
    table = solution.moments()
    assert table[(1, 1)] == pytest.approx(-0.5, abs=1e-6)
    assert table[(0, 1)] == pytest.approx(0.0, abs=1e-6)


def test_lqr_finite_horizon_matches_the_riccati_cost(lqr):
    aux = build_auxiliary_system(lqr, 1)
    problem = assemble_finite_horizon(aux, 2.0, 20)
    solution = solve(problem, OPTIONS)
    assert solution.ok
    assert solution.objective == pytest.approx(3.0, abs=1e-5)
    np.testing.assert_allclose(problem.times, np.linspace(0, 2, 21))
    assert problem.steps == 21


def test_finite_horizon_layout(logistic):
    aux = build_auxiliary_system(logistic, 1)
    problem = assemble_finite_horizon(aux, 1.0, 4)
    assert problem.n_vars == 5 * (aux.nx + aux.nu)
    assert problem.n_eq == 5 * aux.nx
    assert len([cone for cone in problem.cones if cone.step]) == 4 * len(aux.psd_maps)
    # x(0) = 1 fixes both localizing blocks at t = 0; only the moment block keeps x^2
    assert [cone.name for cone in problem.cones if cone.step == 0] == ['moment[0]']
    assert problem.segment('U[4]').size == aux.nu
    with pytest.raises(ValueError):
        assemble_finite_horizon(aux, 1.0, 0)
    with pytest.raises(ValueError):
        assemble_finite_horizon(aux, 0.0, 4)


def test_dirac_start_compresses_the_initial_moment_block(logistic):
    aux = build_auxiliary_system(logistic, 2)
    problem = assemble_finite_horizon(aux, 1.0, 4)
    initial = [cone for cone in problem.cones if cone.step == 0]
    assert [cone.name for cone in initial] == ['moment[0]']
    # [1, x] are pinned to the rank-one matrix of x(0) = 1; x^2 carries x^4
    assert initial[0].size == 2
    assert problem.n_eq == 5 * aux.nx
    y = np.zeros(problem.n_vars)
    y[problem.segment('U[0]').slice] = 5.0
    assert np.linalg.eigvalsh(initial[0].evaluate(y))[0] > 0


def test_degenerate_initial_covariance_adds_face_equalities(sampled_feedback):
    aux = build_auxiliary_system(sampled_feedback, 1)
    problem = assemble_finite_horizon(aux, 1.0, 2)
    # x2(0) = 0 almost surely, so E[x2 u](0) = 0
    assert problem.n_eq == 3 * aux.nx + 1
    initial, = [cone for cone in problem.cones if cone.step == 0 and cone.name.startswith('moment')]
    assert initial.size == 3
    solution = solve(problem, OPTIONS)
    assert solution.ok
    assert solution.moments(0)[(0, 1, 1)] == pytest.approx(0.0, abs=1e-8)
    np.testing.assert_allclose(solution.state(0), aux.x0 * aux.state_scale, atol=1e-8)


def test_euler_error_halves_when_the_grid_doubles():
    model = loads_model(ORNSTEIN_UHLENBECK, name='ou')
    aux = build_auxiliary_system(model, 1)
    exact = 0.5 + 0.5 * np.exp(-2.0)
    errors = []
    for steps in (20, 40):
        solution = solve(assemble(aux, 1.0, steps), OPTIONS)
        assert solution.ok
        # the moments obey the Euler recursion m2 <- m2 (1 - 2 dt) + dt
        assert solution.objective == pytest.approx(0.5 + 0.5 * (1 - 2.0 / steps) ** steps, abs=1e-6)
        errors.append(exact - solution.objective)
    assert errors[0] > 0
    assert 0.45 <= errors[1] / errors[0] <= 0.55


def test_birth_death_steady_state_bounds(logistic):
    one = bound_pair(build_auxiliary_system(logistic, 1), options=OPTIONS)
    assert one.lower == pytest.approx(0.0, abs=1e-6)
    assert one.upper == pytest.approx(4.0, abs=1e-5)
    two = bound_pair(build_auxiliary_system(logistic, 2), options=OPTIONS)
    assert two.lower == pytest.approx(0.0, abs=1e-6)
    assert two.upper == pytest.approx(2.0, abs=1e-5)
    mean = bound_pair(build_auxiliary_system(logistic, 2), objective=logistic.polynomial('x'), options=OPTIONS)
    assert (mean.lower, mean.upper) == (pytest.approx(0.0, abs=1e-6), pytest.approx(1.0, abs=1e-5))


def test_birth_death_steady_state_bounds_bracket_the_chain(logistic):
    stationary = stationary_moment(ctmc_stationary_oracle(logistic), (2,))
    for order in (1, 2, 3):
        pair = bound_pair(build_auxiliary_system(logistic, order), options=OPTIONS)
        assert pair.lower - 1e-6 <= stationary <= pair.upper + 1e-6


def test_finite_horizon_bounds_tighten_with_the_order(logistic):
    bounds = [
        bound_pair(build_auxiliary_system(logistic, d), horizon=1.0, steps=20, options=OPTIONS, max_workers=2)
        for d in (1, 2)
    ]
    assert bounds[0].lower <= bounds[0].upper
    assert bounds[1].lower >= bounds[0].lower - 1e-6
    assert bounds[1].upper <= bounds[0].upper + 1e-6


def test_rescaling_leaves_bounds_unchanged(logistic):
    plain = bound_pair(build_auxiliary_system(logistic, 2), options=OPTIONS)
    scaled = bound_pair(build_auxiliary_system(logistic, 2, scale=3.0), options=OPTIONS)
    assert scaled.lower == pytest.approx(plain.lower, abs=1e-6)
    assert scaled.upper == pytest.approx(plain.upper, abs=1e-5)
    np.testing.assert_allclose(scaled.upper_solution.state(), plain.upper_solution.state(), atol=1e-4)


def test_infeasible_relaxation_raises():
    model = loads_model(INFEASIBLE, name='infeasible')
    aux = build_auxiliary_system(model, 1)
    solution = solve(assemble(aux), OPTIONS)
    assert solution.status is SolveStatus.INFEASIBLE
    assert solution.x is None and np.isnan(solution.objective)
    with pytest.raises(SolverError) as info:
        bound_pair(aux, options=OPTIONS)
    assert info.value.status == 'infeasible'


def test_bound_pair_rejects_controlled_models(lqr):
    with pytest.raises(ValueError):
        bound_pair(build_auxiliary_system(lqr, 1), horizon=2.0, steps=4)


def test_solve_many_keeps_order(logistic):
    aux = build_auxiliary_system(logistic, 1)
    problems = [assemble(aux, sense=Sense.MAX), assemble(aux, sense=Sense.MIN)]
    high, low = solve_many(problems, OPTIONS, max_workers=2)
    assert high.problem.sense is Sense.MAX and low.problem.sense is Sense.MIN
    assert high.objective > low.objective


def test_functional_trajectory(brownian):
    aux = build_auxiliary_system(brownian, 1)
    solution = solve(assemble(aux, 1.0, 10), OPTIONS)
    assert solution.ok
    # E[x^2](t) = t is forced by the dynamics alone
    np.testing.assert_allclose(solution.functional_trajectory(brownian.polynomial('x^2')),
                               np.linspace(0, 1, 11), atol=1e-6)


def test_solver_options_are_validated():
    with pytest.raises(pydantic.ValidationError):
        SolverOptions(backend='bogus')
    with pytest.raises(pydantic.ValidationError):
        SolverOptions(tolerance=0)


def test_sdpa_export_reproduces_every_block(logistic, tmp_path):
    aux = build_auxiliary_system(logistic, 2)
    problem = assemble(aux, 1.0, 3, Sense.MAX)
    path = write_sdpa(problem, tmp_path / 'logistic.dat-s')
    data = read_sdpa(path)

    assert data.n_vars == problem.n_vars
    np.testing.assert_allclose(data.c, problem.c)
    assert data.block_sizes[:-1] == [cone.size for cone in problem.cones]
    assert data.comments[0].startswith('"momentsdp export')

    y = np.random.default_rng(0).standard_normal(problem.n_vars)
    for k, cone in enumerate(problem.cones, start=1):
        np.testing.assert_allclose(data.block_value(k, y), cone.evaluate(y), atol=1e-12)
    lp = data.block_value(len(data.block_sizes), y)
    residual = problem.A_eq @ y - problem.b_eq
    np.testing.assert_allclose(lp[0:2 * problem.n_eq:2], residual, atol=1e-12)
    np.testing.assert_allclose(lp[1:2 * problem.n_eq:2], -residual, atol=1e-12)


def test_sdpa_export_of_odd_power_rows(fishery, tmp_path):
    aux = build_auxiliary_system(fishery, 1)
    problem = assemble(aux)
    data = read_sdpa(write_sdpa(problem, tmp_path / 'fishery.dat-s'))
    y = np.random.default_rng(1).standard_normal(problem.n_vars)
    lp = data.block_value(len(data.block_sizes), y)
    rows, = problem.nonneg
    np.testing.assert_allclose(lp[2 * problem.n_eq:], rows.G @ y + rows.h, atol=1e-12)


def test_cvxpy_backend_agrees(lqr):
    pytest.importorskip('cvxpy')
    model = lqr.with_horizon(None).with_objective(terminal=lqr.polynomial('x^2 + u^2'))
    problem = assemble(build_auxiliary_system(model, 1))
    solution = solve(problem, SolverOptions(backend='cvxpy'))
    assert solution.backend == 'cvxpy'
    assert solution.ok
    assert solution.objective == pytest.approx(1.0, abs=1e-3)
