"""
Tests for the auxiliary linear moment system.
"""

import numpy as np
import pytest

from shared.types import Sense

from momentsdp.exceptions import ClosureError
from momentsdp.models import loads_model
from momentsdp.services.moment_system import (
    MomentBasis,
    build_auxiliary_system,
    build_localizing_matrix,
    check_closure,
    default_basis,
    dump_aux,
    moment_inputs_enabled,
    relaxation_plan,
    rescale,
)

from .conftest import CUBIC_DRIFT


def test_birth_death_basis_stops_where_closure_fails(logistic):
    basis = default_basis(logistic, 2)
    assert basis.state_labels() == ['1', 'x', 'x^2', 'x^3']
    assert basis.input_labels() == ['x^4']
    basis = default_basis(logistic, 1)
    assert basis.state_labels() == ['1', 'x']
    assert basis.input_labels() == ['x^2']


def test_controlled_basis_orders_input_moments(lqr):
    basis = default_basis(lqr, 1)
    assert basis.state_labels() == ['1', 'x', 'x^2']
    assert basis.input_labels() == ['u', 'x*u', 'u^2']


def test_dynamics_rows_follow_the_generator(logistic):
    aux = build_auxiliary_system(logistic, 2)
    np.testing.assert_allclose(aux.A[0], 0.0)
    np.testing.assert_allclose(aux.A[1], [0, 2, -1, 0])
    np.testing.assert_allclose(aux.A[2], [0, 4, 3, -2])
    np.testing.assert_allclose(aux.B[3], [-3])
    np.testing.assert_allclose(aux.x0, [1, 1, 1, 1])


def test_constant_terms_land_on_the_unit_moment(lqr):
    aux = build_auxiliary_system(lqr, 1)
    # d/dt E[x^2] = 2 E[x u] + 1
    np.testing.assert_allclose(aux.A[2], [1, 0, 0])
    np.testing.assert_allclose(aux.B[2], [0, 2, 0])
    np.testing.assert_allclose(aux.x0, [1, 0, 1])


def test_cost_rows_are_in_minimisation_form(fishery, lqr):
    aux = build_auxiliary_system(fishery, 1)
    assert aux.sense is Sense.MAX and aux.objective_sign == -1.0
    u = aux.basis.locate((0, 1))
    assert u == ('u', 1)
    assert aux.D[1] == -1.0
    lqr_aux = build_auxiliary_system(lqr, 1)
    np.testing.assert_allclose(lqr_aux.C, [0, 0, 1])
    np.testing.assert_allclose(lqr_aux.D, [0, 0, 1])
    np.testing.assert_allclose(lqr_aux.H, [0, 0, 1])


def test_moment_matrix_of_a_point_mass_is_rank_one(lqr):
    aux = build_auxiliary_system(lqr, 1)
    M, = aux.psd_maps
    assert M.size == 3
    x, u = 0.5, -2.0
    X = np.array([1, x, x * x])
    U = np.array([u, x * u, u * u])
    v = np.array([1, x, u])
    np.testing.assert_allclose(M.evaluate(X, U), np.outer(v, v))
    assert not M.state_coefficients[0].any()
    assert M.constant[0, 0] == 1.0


def test_localizing_matrix_carries_the_multiplier(logistic):
    basis = default_basis(logistic, 2)
    upper = logistic.constraints[1].polynomial
    M = build_localizing_matrix(logistic, upper, basis, 1, name='upper')
    x = 1.5
    X = np.array([1, x, x ** 2, x ** 3])
    U = np.array([x ** 4])
    np.testing.assert_allclose(M.evaluate(X, U), (3 - x) * np.array([[1, x], [x, x * x]]))


def test_relaxation_plan(logistic, fishery, jump_rate):
    plan = relaxation_plan(logistic, 2)
    assert [(name, degree) for name, _, degree in plan.localizing] == [('lower', 1), ('upper', 1)]
    plan = relaxation_plan(fishery, 1)
    assert [name for name, _, _ in plan.odd_rows] == ['harvest']
    assert moment_inputs_enabled(fishery)
    assert not moment_inputs_enabled(jump_rate)
    with pytest.raises(ValueError):
        relaxation_plan(logistic, 0)


def test_odd_power_rows(fishery):
    aux = build_auxiliary_system(fishery, 1)
    rows, = aux.linear_maps
    assert rows.name == 'harvest' and rows.rows == 1
    assert not rows.J.any()
    np.testing.assert_allclose(rows.L[0], [0, 1, 0, 0])


def test_jump_rate_basis_reaches_twice_the_order(jump_rate):
    basis = default_basis(jump_rate, 2)
    assert basis.state_labels() == ['1', 'x', 'x^2', 'x^3', 'x^4']
    assert set(basis.input_labels()) >= {'u', 'x*u', 'x^2*u', 'x^3*u', 'x^4*u'}


def test_closure_failure_names_the_monomial():
    model = loads_model(CUBIC_DRIFT, name='cubic')
    with pytest.raises(ClosureError) as info:
        default_basis(model, 1)
    assert info.value.monomial == 'x^3'
    assert default_basis(model, 2).state_labels() == ['1', 'x', 'x^2']


def test_explicit_basis_is_checked(lqr):
    context = lqr.variables
    basis = MomentBasis(context, 1, [(0, 0), (1, 0), (2, 0)], [(0, 1)])
    with pytest.raises(ClosureError) as info:
        check_closure(lqr, basis)
    assert info.value.monomial == 'x*u'
    with pytest.raises(ValueError):
        MomentBasis(context, 1, [(1, 0)])
    with pytest.raises(ValueError):
        MomentBasis(context, 1, [(0, 0), (0, 1)])


def test_missing_initial_moment(write_model):
    from momentsdp.models import load_model

    text = CUBIC_DRIFT.replace('kind = dirac\npoint = 0', 'kind = explicit\nmoment.1 = 1\nmoment.x = 0')
    model = load_model(write_model(text))
    with pytest.raises(ClosureError):
        build_auxiliary_system(model, 2)


def test_objective_override(logistic):
    aux = build_auxiliary_system(logistic, 2, objective=logistic.polynomial('x^2 + 1'))
    assert aux.sense is Sense.MIN
    np.testing.assert_allclose(aux.H, [1, 0, 1, 0])
    assert not aux.C.any()


def test_rescaling_keeps_plain_moments(logistic):
    aux = build_auxiliary_system(logistic, 2)
    scaled = rescale(aux, 2.0)
    np.testing.assert_allclose(scaled.state_scale, [1, 2, 4, 8])
    np.testing.assert_allclose(scaled.x0 * scaled.state_scale, aux.x0)
    X, U = scaled.unscale(scaled.x0, np.zeros(1))
    np.testing.assert_allclose(X, aux.x0)
    twice = rescale(scaled, 2.0)
    assert twice.scale == 4.0
    with pytest.raises(ValueError):
        rescale(aux, 0.0)


def test_dump_lists_every_matrix(logistic):
    text = dump_aux(build_auxiliary_system(logistic, 2))
    assert 'order 2' in text
    assert 'state 1, x, x^2, x^3' in text
    assert 'A 4 4' in text and 'B 4 1' in text
    assert 'psd moment 3' in text
    assert 'psd upper 2' in text
