"""
Tests for the model types, validation and the model-file format.
"""

import pytest

from shared.types import InitialKind, Sense

from momentsdp.exceptions import ModelFileError, ModelValidationError
from momentsdp.models import (
    InitialDistribution,
    dumps_model,
    input_bounds,
    load_model,
    loads_model,
    state_floor_variables,
    validate,
)

from .conftest import BROWNIAN, DATA_DIR, bundled

BUNDLED = ['logistic', 'lqr', 'fishery', 'jump_rate', 'sampled_feedback']


@pytest.mark.parametrize('name', BUNDLED)
def test_bundled_models_load_and_validate(name):
    model = bundled(name)
    assert model.name == name
    assert validate(model) == []


@pytest.mark.parametrize('name', BUNDLED)
def test_model_text_round_trip(name):
    model = bundled(name)
    assert loads_model(dumps_model(model), model.name) == model


def test_bundled_model_shapes(lqr, fishery, jump_rate, sampled_feedback, logistic):
    assert (lqr.n, lqr.n_u, lqr.n_w) == (1, 1, 1)
    assert lqr.initial.kind is InitialKind.GAUSSIAN
    assert fishery.sense is Sense.MAX
    assert fishery.relaxation.odd_power('harvest') == 1
    assert jump_rate.is_steady_state and jump_rate.is_controlled
    assert sampled_feedback.variables == ('x1', 'x2', 'u')
    assert not logistic.is_controlled
    assert len(logistic.jumps) == 2
    assert logistic.horizon == 5 and logistic.steps == 500


def test_unspecified_jump_map_entries_keep_the_state(sampled_feedback):
    jump, = sampled_feedback.jumps
    assert jump.jump_map[0] == sampled_feedback.polynomial('x1')
    assert jump.jump_map[1] == sampled_feedback.polynomial('u')


def test_gaussian_initial_moments():
    initial = InitialDistribution.gaussian([1.0], [[2.0]])
    assert [initial.moment((k,)) for k in range(5)] == pytest.approx([1, 1, 3, 7, 25])
    joint = InitialDistribution.gaussian([0.0, 0.0], [[1.0, 0.5], [0.5, 2.0]])
    assert joint.moment((1, 1)) == pytest.approx(0.5)
    assert joint.moment((2, 2)) == pytest.approx(1.0 * 2.0 + 2 * 0.5 ** 2)


def test_dirac_and_explicit_initial_moments():
    assert InitialDistribution.dirac([2.0, -1.0]).moment((2, 1)) == -4.0
    explicit = InitialDistribution.explicit({(0,): 1.0, (1,): 0.5})
    assert explicit.moment((1,)) == 0.5
    with pytest.raises(KeyError):
        explicit.moment((2,))


def test_input_bounds_and_state_floors(jump_rate, fishery, lqr):
    lo, hi = input_bounds(jump_rate)
    assert lo.tolist() == [0.0] and hi.tolist() == [10.0]
    lo, hi = input_bounds(fishery)
    assert lo.tolist() == [0.0] and hi.tolist() == [float('inf')]
    assert state_floor_variables(fishery) == [0]
    assert state_floor_variables(lqr) == []


def test_with_objective_and_horizon(lqr):
    steady = lqr.with_horizon(None)
    assert steady.is_steady_state and steady.steps == lqr.steps
    swapped = lqr.with_objective(terminal=lqr.polynomial('x^4'), sense=Sense.MAX)
    assert swapped.running_cost.is_zero()
    assert swapped.sense is Sense.MAX


def test_missing_section_names_the_field():
    text = BROWNIAN.replace('[initial]\nkind = dirac\npoint = 0\n', '')
    with pytest.raises(ModelFileError) as info:
        loads_model(text)
    assert info.value.field == 'initial'


def test_unknown_key_reports_field_and_line():
    text = '[vars]\nnames = x\n\n[cost]\nrunning = 0\nbogus = 1\n'
    with pytest.raises(ModelFileError) as info:
        loads_model(text)
    assert info.value.field == 'cost.bogus'
    assert info.value.line == 6


def test_undeclared_variable_is_a_file_error():
    text = BROWNIAN.replace('terminal = x^2', 'terminal = y^2')
    with pytest.raises(ModelFileError) as info:
        loads_model(text)
    assert info.value.field == 'cost.terminal'


def test_unknown_section_is_rejected():
    with pytest.raises(ModelFileError):
        loads_model(BROWNIAN + '\n[extras]\nfoo = 1\n')


def test_dimension_mismatch_is_a_validation_error():
    text = BROWNIAN.replace('point = 0', 'point = 0, 1')
    with pytest.raises(ModelValidationError) as info:
        loads_model(text)
    assert [d.field for d in info.value.diagnostics] == ['initial.point']


def test_validation_collects_every_diagnostic():
    text = BROWNIAN.replace('kind = dirac\npoint = 0', 'kind = gaussian\nmean = 0\ncovariance = -1')
    text = text.replace('steps = 10', 'steps = 10\n\n[relaxation]\nodd_powers.nothing = 2')
    with pytest.raises(ModelValidationError) as info:
        loads_model(text)
    fields = [d.field for d in info.value.diagnostics]
    assert 'initial.covariance' in fields
    assert fields.count('relaxation.odd_powers.nothing') == 2


def test_steady_state_horizon_keyword(jump_rate):
    assert jump_rate.horizon is None
    assert 'T = steady-state' in dumps_model(jump_rate)


def test_load_model_missing_file(tmp_path):
    with pytest.raises(ModelFileError):
        load_model(tmp_path / 'absent.model')


def test_model_name_comes_from_the_file_stem(write_model):
    path = write_model(BROWNIAN, name='walk')
    assert load_model(path).name == 'walk'
    assert DATA_DIR.is_dir()
