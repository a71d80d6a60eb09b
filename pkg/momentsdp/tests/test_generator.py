"""
Tests for the jump-diffusion generator on polynomial test functions.
"""

import pytest

from momentsdp.exceptions import ContextMismatchError
from momentsdp.models import loads_model
from momentsdp.services.generator import (
    apply_generator,
    apply_generator_basis,
    generator_degree_report,
    state_monomials,
)

OU = """
[vars]
names = x

[drift]
x = -x

[diffusion]
x.1 = 1

[cost]
running = 0

[initial]
kind = dirac
point = 0

[horizon]
T = 1
"""


def assert_same(p, q):
    assert p.context == q.context
    assert set(p.terms) == set(q.terms)
    for m, c in q.terms.items():
        assert float(p.coefficient(m)) == pytest.approx(float(c))


def test_birth_death_generator(logistic):
    image = apply_generator(logistic, logistic.polynomial('x'))
    assert_same(image, logistic.polynomial('2*x - x^2'))
    image = apply_generator(logistic, logistic.polynomial('x^2'))
    assert_same(image, logistic.polynomial('-2*x^3 + 3*x^2 + 4*x'))


def test_controlled_diffusion_generator(lqr):
    assert_same(apply_generator(lqr, lqr.polynomial('x')), lqr.polynomial('u'))
    assert_same(apply_generator(lqr, lqr.polynomial('x^2')), lqr.polynomial('2*x*u + 1'))


def test_multiplicative_noise_generator(fishery):
    image = apply_generator(fishery, fishery.polynomial('x^2'))
    assert_same(image, fishery.polynomial('3*x^2 - 0.2*x^3 - 2*x*u'))


def test_reset_jump_generator(jump_rate):
    image = apply_generator(jump_rate, jump_rate.polynomial('x^2'))
    assert_same(image, jump_rate.polynomial('1 - x^2*u'))


def test_jump_to_input_generator(sampled_feedback):
    image = apply_generator(sampled_feedback, sampled_feedback.polynomial('x2^2'))
    assert_same(image, sampled_feedback.polynomial('u^2 - x2^2'))
    image = apply_generator(sampled_feedback, sampled_feedback.polynomial('x1*x2'))
    assert_same(image, sampled_feedback.polynomial('x2^2 + x1*u - x1*x2'))


def test_constants_are_annihilated(lqr):
    assert apply_generator(lqr, lqr.polynomial('7')).is_zero()


def test_state_context_test_functions_are_lifted(lqr):
    from momentsdp.algebra import parse_polynomial

    image = apply_generator(lqr, parse_polynomial('x^2', ('x',)))
    assert image.context == ('x', 'u')


def test_input_dependent_test_function_is_rejected(lqr):
    with pytest.raises(ContextMismatchError):
        apply_generator(lqr, lqr.polynomial('x*u'))


def test_basis_images_keep_order_across_workers(fishery):
    monomials = state_monomials(fishery, 4)
    serial = apply_generator_basis(fishery, monomials)
    threaded = apply_generator_basis(fishery, monomials, max_workers=3)
    assert [r.input_monomial for r in serial] == monomials
    assert [r.image for r in serial] == [r.image for r in threaded]


def test_degree_report():
    ou = loads_model(OU, name='ou')
    report = dict(generator_degree_report(ou, 4))
    assert report == {(1,): 1, (2,): 2, (3,): 3, (4,): 4}
    assert_same(apply_generator(ou, ou.polynomial('x^4')), ou.polynomial('-4*x^4 + 6*x^2'))
    with pytest.raises(ValueError):
        generator_degree_report(ou, 0)
