"""
Tests for the Monte Carlo simulator and the exact reference oracles.
"""

import csv
import math

import numpy as np
import pytest
from scipy import stats

from momentsdp.exceptions import SimulationError
from momentsdp.models import loads_model
from momentsdp.services.controller import PolynomialController
from momentsdp.services.ctmc import ctmc_stationary_oracle, enumerate_states, stationary_moment
from momentsdp.services.generator import apply_generator
from momentsdp.services.riccati import lqr_riccati_oracle
from momentsdp.services.simulate import (
    MomentEstimate,
    empirical_moment,
    estimate_cost,
    estimate_long_run_cost,
    first_jump_times,
    jump_statistics,
    moment_trajectory,
    simulate_paths,
    write_moment_csv,
)

from .conftest import BROWNIAN

POISSON = """
[vars]
names = x

[jump.1]
map.x = x + 1
intensity = 2

[cost]
running = 0
terminal = x

[initial]
kind = dirac
point = 0

[horizon]
T = 5
"""

TWO_JUMPS = """
[vars]
names = x

[jump.1]
map.x = x + 1
intensity = 1

[jump.2]
map.x = x - 1
intensity = 3

[cost]
running = 0
terminal = x

[initial]
kind = dirac
point = 0

[horizon]
T = 5
"""

NEGATIVE_RATE = POISSON.replace('intensity = 2', 'intensity = x - 1')


def linear_law(model, gain):
    return PolynomialController(model.state_vars, model.input_vars, ((1,),), np.array([[[gain]]]))


def test_paths_do_not_depend_on_chunking_or_threads(brownian):
    serial = simulate_paths(brownian, dt=0.1, n_paths=10, seed=4, max_workers=1, chunk_size=3)
    threaded = simulate_paths(brownian, dt=0.1, n_paths=10, seed=4, max_workers=3, chunk_size=4)
    np.testing.assert_array_equal(serial.paths, threaded.paths)
    other = simulate_paths(brownian, dt=0.1, n_paths=10, seed=5, max_workers=1)
    assert not np.array_equal(serial.paths, other.paths)


def test_deterministic_decay_is_exact(decay):
    ensemble = simulate_paths(decay, dt=0.001, n_paths=3, seed=0)
    assert ensemble.steps == 1000
    estimate = empirical_moment(ensemble, (1,), 1.0)
    assert estimate.value == pytest.approx(0.999 ** 1000, rel=1e-9)
    assert estimate.standard_error == pytest.approx(0.0, abs=1e-12)
    # running cost x^2 over the grid
    left = 0.001 * (1 - 0.999 ** 2000) / (1 - 0.999 ** 2)
    assert estimate_cost(ensemble, quadrature='left').value == pytest.approx(left, rel=1e-9)
    trapezoidal = left - 0.0005 * (1 - 0.999 ** 2000)
    assert estimate_cost(ensemble).value == pytest.approx(trapezoidal, rel=1e-9)
    with pytest.raises(ValueError):
        estimate_cost(ensemble, quadrature='simpson')


def test_brownian_second_moment(brownian):
    ensemble = simulate_paths(brownian, dt=0.1, n_paths=4000, seed=1)
    estimate = empirical_moment(ensemble, (2,), 1.0)
    assert estimate.contains(1.0, width=4.0)
    with pytest.raises(ValueError):
        empirical_moment(ensemble, (2,), 0.55)


def test_two_state_chain_matches_its_discrete_law(two_state_chain):
    ensemble = simulate_paths(two_state_chain, dt=0.01, n_paths=4000, seed=2)
    expected = (1 - 0.98 ** 100) / 2
    assert empirical_moment(ensemble, (1,), 1.0).contains(expected, width=4.0)
    assert set(np.unique(ensemble.paths)) <= {0.0, 1.0}
    counts, _ = jump_statistics(ensemble)
    assert counts.shape == (2,)
    assert 0 <= counts[0] - counts[1] <= ensemble.n_paths


def test_ctmc_oracles(two_state_chain, logistic):
    law = ctmc_stationary_oracle(two_state_chain)
    assert law == pytest.approx({(0,): 0.5, (1,): 0.5})
    assert stationary_moment(law, (1,)) == pytest.approx(0.5)

    states, Q = enumerate_states(logistic)
    assert sorted(states) == [(0,), (1,), (2,), (3,)]
    np.testing.assert_allclose(np.asarray(Q.sum(axis=1)).ravel(), 0.0, atol=1e-12)
    absorbed = ctmc_stationary_oracle(logistic)
    assert absorbed[(0,)] == pytest.approx(1.0)
    assert stationary_moment(absorbed, (2,)) == pytest.approx(0.0, abs=1e-12)


def test_ctmc_oracle_rejects_diffusions(brownian, lqr):
    with pytest.raises(ValueError):
        ctmc_stationary_oracle(brownian)
    with pytest.raises(ValueError):
        ctmc_stationary_oracle(lqr)


def test_riccati_reference():
    solution = lqr_riccati_oracle(a=0, b=1, q=1, r=1, psi=1, sigma2=1, g2=1, T=2, steps=40)
    assert solution.cost == pytest.approx(3.0, abs=1e-8)
    np.testing.assert_allclose(solution.P, 1.0, atol=1e-8)
    np.testing.assert_allclose(solution.gain, -1.0, atol=1e-8)
    np.testing.assert_allclose(solution.second_moment, 0.5 + np.exp(-2 * solution.times) / 2, atol=1e-7)
    with pytest.raises(ValueError):
        lqr_riccati_oracle(a=0, b=1, q=1, r=0, psi=1, sigma2=1, g2=1, T=1)


def test_lqr_feedback_cost_is_near_the_optimum(lqr):
    ensemble = simulate_paths(lqr, linear_law(lqr, -1.0), dt=0.01, n_paths=4000, seed=3)
    estimate = estimate_cost(ensemble)
    assert estimate.value == pytest.approx(3.0, abs=0.15)
    np.testing.assert_allclose(ensemble.inputs[..., 0], -ensemble.paths[..., 0])


@pytest.mark.parametrize('name, gain, test_function', [
    ('lqr', -1.0, 'x^2'),
    ('logistic', None, 'x^2'),
    ('logistic', None, 'x'),
])
def test_simulated_paths_follow_the_generator(request, name, gain, test_function):
    model = request.getfixturevalue(name)
    law = None if gain is None else linear_law(model, gain)
    ensemble = simulate_paths(model, law, dt=0.001, T=0.5, n_paths=4000, seed=15)
    p = model.polynomial(test_function)
    Lp = apply_generator(model, p)
    values = ensemble.values()
    # p(x_T) - p(x_0) - int_0^T (L p) dt is a martingale increment
    increment = (p.evaluate_array(values[:, -1]) - p.evaluate_array(values[:, 0])
                 - ensemble.dt * Lp.evaluate_array(values[:, :-1]).sum(axis=1))
    estimate = MomentEstimate.from_samples(increment)
    assert estimate.standard_error > 0
    assert estimate.contains(0.0, width=4.0)


def test_first_jump_times_are_exponential():
    model = loads_model(POISSON, name='poisson')
    # P(no jump in [0, 8]) = exp(-16); every path is observed to its first jump
    ensemble = simulate_paths(model, dt=0.002, T=8.0, n_paths=1000, seed=6)
    first = first_jump_times(ensemble)
    assert np.all(np.isfinite(first))
    result = stats.kstest(first, 'expon', args=(0, 0.5))
    assert result.pvalue > 1e-3
    counts, _ = jump_statistics(ensemble)
    assert counts[0] == pytest.approx(1000 * 2 * 8, rel=0.05)


def test_two_jump_channels_fire_in_proportion_to_their_rates():
    model = loads_model(TWO_JUMPS, name='two_jumps')
    ensemble = simulate_paths(model, dt=0.002, T=5.0, n_paths=1000, seed=14)
    counts, _ = jump_statistics(ensemble)
    total = counts.sum()
    assert total == pytest.approx(1000 * 4 * 5, rel=0.05)
    share = counts[0] / total
    assert abs(share - 0.25) <= 3 * math.sqrt(0.25 * 0.75 / total)
    first = first_jump_times(ensemble)
    assert np.all(np.isfinite(first))
    assert stats.kstest(first, 'expon', args=(0, 0.25)).pvalue > 1e-3


def test_negative_intensity_stops_the_run():
    model = loads_model(NEGATIVE_RATE, name='negative')
    with pytest.raises(SimulationError) as info:
        simulate_paths(model, dt=0.01, n_paths=2, seed=0)
    assert info.value.time == 0.0


def test_argument_checks(jump_rate, lqr):
    with pytest.raises(ValueError):
        simulate_paths(jump_rate, linear_law(jump_rate, 0.0), n_paths=2)
    with pytest.raises(ValueError):
        simulate_paths(lqr, n_paths=2)
    foreign = PolynomialController(('y',), ('u',), ((1,),), np.array([[[1.0]]]))
    with pytest.raises(ValueError):
        simulate_paths(lqr, foreign, n_paths=2)
    explicit = loads_model(BROWNIAN.replace('kind = dirac\npoint = 0', 'kind = explicit\nmoment.1 = 1'), name='explicit')
    with pytest.raises(ValueError):
        simulate_paths(explicit, n_paths=2)


def test_floor_reflections_are_counted(fishery):
    law = PolynomialController.constant(fishery.state_vars, fishery.input_vars, 5.0)
    ensemble = simulate_paths(fishery, law, dt=0.01, T=2.0, n_paths=20, seed=7)
    assert ensemble.reflections > 0
    assert ensemble.paths.min() >= 0.0


def test_moment_csv(brownian, tmp_path):
    ensemble = simulate_paths(brownian, dt=0.1, n_paths=50, seed=8)
    path = write_moment_csv(ensemble, [(1,), (2,)], tmp_path / 'moments.csv', stride=5)
    with path.open() as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ['t', 'moment', 'estimate', 'se']
    assert [(r[0], r[1]) for r in rows[1:]] == [('0', 'x'), ('0.5', 'x'), ('1', 'x'),
                                                ('0', 'x^2'), ('0.5', 'x^2'), ('1', 'x^2')]
    mean, se = moment_trajectory(ensemble, (2,))
    assert float(rows[-1][2]) == pytest.approx(mean[-1])
    assert se[0] == 0.0


def test_long_run_cost_of_a_reset_process(jump_rate):
    # resetting Brownian motion at rate 1 has stationary E[x^2] = 1
    law = PolynomialController.constant(jump_rate.state_vars, jump_rate.input_vars, 1.0)
    ensemble = simulate_paths(jump_rate, law, dt=0.01, T=20.0, n_paths=400, seed=9)
    estimate = estimate_long_run_cost(ensemble, tail=0.5)
    assert estimate.value == pytest.approx(1.0 + 10.0, abs=0.25)
    with pytest.raises(ValueError):
        estimate_long_run_cost(ensemble, tail=0.0)


def test_moment_estimate_interval():
    estimate = MomentEstimate.from_samples(np.array([1.0, 2.0, 3.0]))
    assert estimate.value == 2.0
    assert estimate.standard_error == pytest.approx(1.0 / math.sqrt(3))
    assert estimate.contains(2.5)
    assert not estimate.contains(5.0)
