"""
Tests for polynomial controllers: evaluation, extraction and the file format.
"""

import numpy as np
import pytest

from momentsdp.exceptions import ControllerError, ModelFileError
from momentsdp.models import loads_model
from momentsdp.sdp import SolverOptions, assemble, solve
from momentsdp.services.controller import (
    PolynomialController,
    default_controller_monomials,
    dumps_controller,
    extract_controller,
    load_controller,
    loads_controller,
    save_controller,
)
from momentsdp.services.moment_system import build_auxiliary_system

from .conftest import INFEASIBLE

OPTIONS = SolverOptions(tolerance=1e-8, max_iterations=200, backend='embedded')


def affine_law(times=None):
    grid = 1 if times is None else len(times)
    coefficients = np.zeros((grid, 2, 1))
    coefficients[:, 0, 0] = 0.5
    coefficients[:, 1, 0] = -2.0
    if times is not None:
        coefficients[:, 1, 0] = -np.arange(1, grid + 1)
    return PolynomialController(('x',), ('u',), ((0,), (1,)), coefficients, times)


def test_evaluate_and_clip():
    law = affine_law()
    assert law.evaluate(0.0, [1.0]) == pytest.approx([-1.5])
    np.testing.assert_allclose(law.evaluate_many(3.0, np.array([[0.0], [1.0], [-1.0]]))[:, 0], [0.5, -1.5, 2.5])
    clipped = law.clip(-1.0, 1.0)
    np.testing.assert_allclose(clipped.evaluate_many(0.0, np.array([[0.0], [1.0], [-1.0]]))[:, 0], [0.5, -1.0, 1.0])
    assert law.lo is None
    with pytest.raises(ControllerError):
        law.clip(1.0, -1.0)


def test_constant_law():
    law = PolynomialController.constant(('x1', 'x2'), ('u',), 3.0)
    assert law.degree == 0
    assert law.evaluate(0.0, [5.0, -2.0]) == pytest.approx([3.0])


def test_grid_lookup_takes_the_nearest_point():
    law = affine_law(times=np.array([0.0, 1.0, 2.0]))
    assert law.grid_index(0.4) == 0
    assert law.grid_index(0.5) == 0
    assert law.grid_index(0.6) == 1
    assert law.grid_index(7.0) == 2
    assert law.evaluate(1.9, [1.0]) == pytest.approx([0.5 - 3.0])


def test_shape_checks():
    with pytest.raises(ControllerError):
        PolynomialController(('x',), ('u',), ((1,),), np.zeros((1, 2, 1)))
    with pytest.raises(ControllerError):
        PolynomialController(('x',), ('u',), ((1,),), np.zeros((2, 1, 1)))
    with pytest.raises(ControllerError):
        PolynomialController(('x',), ('u',), ((1, 0),), np.zeros((1, 1, 1)))


def test_file_round_trip(tmp_path):
    law = affine_law(times=np.array([0.0, 0.5, 1.0])).clip(-4.0, 4.0)
    path = save_controller(law, tmp_path / 'law.txt')
    loaded = load_controller(path)
    assert loaded.monomials == law.monomials
    np.testing.assert_array_equal(loaded.coefficients, law.coefficients)
    np.testing.assert_array_equal(loaded.times, law.times)
    np.testing.assert_array_equal(loaded.hi, [4.0])


def test_time_invariant_law_is_written_at_infinity():
    text = dumps_controller(affine_law())
    assert '\ninf 0.5 -2\n' in text
    loaded = loads_controller(text)
    assert loaded.times is None
    assert loaded.evaluate(10.0, [1.0]) == pytest.approx([-1.5])


@pytest.mark.parametrize('text, field', [
    ('[controller]\nstate = x\ninput = u\n\n[coefficients]\ninf 1\n', 'controller.monomials'),
    ('[controller]\nstate = x\ninput = u\nmonomials = 1, x\n\n[coefficients]\ninf 1\n', 'coefficients'),
    ('[controller]\nstate = x\ninput = u\nmonomials = 2*x\n\n[coefficients]\ninf 1\n', 'controller.monomials'),
    ('[controller]\nstate = x\ninput = u\nmonomials = x\n\n[coefficients]\ninf one\n', 'coefficients'),
    ('[controller]\nstate = x\ninput = u\nmonomials = x\nlo = 0, 1\n\n[coefficients]\ninf 1\n', 'controller.lo'),
])
def test_malformed_controller_files(text, field):
    with pytest.raises(ModelFileError) as info:
        loads_controller(text)
    assert info.value.field == field


def test_missing_controller_file(tmp_path):
    with pytest.raises(ModelFileError):
        load_controller(tmp_path / 'absent.txt')


def test_default_monomials():
    assert default_controller_monomials(2, 1) == [(0, 0), (1, 0), (0, 1)]
    assert default_controller_monomials(1, 0) == [(0,)]


def test_lqr_extraction_recovers_the_riccati_gain(lqr):
    aux = build_auxiliary_system(lqr, 1)
    solution = solve(assemble(aux, 2.0, 20), OPTIONS)
    law = extract_controller(solution)
    assert law.monomials == ((0,), (1,))
    assert law.coefficients.shape == (21, 2, 1)
    np.testing.assert_allclose(law.coefficients[:, 1, 0], -1.0, atol=1e-3)
    np.testing.assert_allclose(law.coefficients[:, 0, 0], 0.0, atol=1e-3)
    np.testing.assert_array_equal(law.coefficients[-1], law.coefficients[-2])


def test_steady_state_extraction(lqr):
    model = lqr.with_horizon(None).with_objective(terminal=lqr.polynomial('x^2 + u^2'))
    solution = solve(assemble(build_auxiliary_system(model, 1)), OPTIONS)
    law = extract_controller(solution, controller_monomials=[(1, 0)])
    assert law.times is None
    assert law.coefficients[0, 0, 0] == pytest.approx(-1.0, abs=1e-4)


def test_matching_defaults_to_every_monomial_up_to_the_controller_degree(lqr):
    solution = solve(assemble(build_auxiliary_system(lqr, 1), 2.0, 10), OPTIONS)
    implicit = extract_controller(solution, controller_monomials=[(1,)])
    explicit = extract_controller(solution, controller_monomials=[(1,)], matching_monomials=[(0,), (1,)])
    assert implicit.monomials == ((1,),)
    assert implicit.coefficients.shape == (11, 1, 1)
    np.testing.assert_array_equal(implicit.coefficients, explicit.coefficients)
    np.testing.assert_allclose(implicit.coefficients[:, 0, 0], -1.0, atol=1e-3)


def test_extraction_needs_an_optimal_controlled_solution(logistic, lqr):
    infeasible = loads_model(INFEASIBLE, name='infeasible')
    failed = solve(assemble(build_auxiliary_system(infeasible, 1)), OPTIONS)
    with pytest.raises(ControllerError):
        extract_controller(failed)
    uncontrolled = solve(assemble(build_auxiliary_system(logistic, 1)), OPTIONS)
    assert uncontrolled.ok
    with pytest.raises(ControllerError):
        extract_controller(uncontrolled)
    controlled = solve(assemble(build_auxiliary_system(lqr, 1), 2.0, 4), OPTIONS)
    with pytest.raises(ControllerError):
        extract_controller(controlled, degree=2)
