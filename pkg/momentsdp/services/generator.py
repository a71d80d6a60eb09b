"""
Generator of a polynomial jump diffusion applied to polynomial test functions.

    (L h)(x, u) = dh/dx . f + 1/2 Tr(d2h/dx2 . g g^T) + sum_i (h(phi_i(x, u)) - h(x)) lambda_i(x, u)

The expected value of L h drives d/dt E[h(x(t))], which is what makes the
moment dynamics linear in the moments.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Sequence, Tuple

from ..algebra.monomials import MultiIndex, monomials_up_to
from ..algebra.polynomial import Polynomial
from ..exceptions import ContextMismatchError
from ..models.model import JumpDiffusionModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeneratorResult:
    """L applied to the state monomial `input_monomial` (full-context multi-index)."""

    input_monomial: MultiIndex
    image: Polynomial


def _lift(model: JumpDiffusionModel, h: Polynomial) -> Polynomial:
    """View `h` in the full (state, input) context, rejecting input dependence."""
    if h.context == model.state_vars:
        return h.embed(model.variables)
    if h.context != model.variables:
        raise ContextMismatchError(f"test function context {h.context} does not match model {model.variables}")
    uses_inputs = [v for v in h.variables() if v in model.input_vars]
    if uses_inputs:
        raise ContextMismatchError(f"test function references input variable(s) {', '.join(uses_inputs)}")
    return h


def apply_generator(model: JumpDiffusionModel, h: Polynomial) -> Polynomial:
    """
    Apply the generator of `model` to the state-only polynomial `h`.

    Args:
        model: Jump-diffusion model
        h: Test function over the state variables (or the full context with no input terms)

    Returns:
        Polynomial: L h over the model's full variable context

    Raises:
        ContextMismatchError: if h references input variables
    """
    h = _lift(model, h)
    result = Polynomial.zero(model.variables)
    gradient = [h.differentiate(v) for v in model.state_vars]

    for j in range(model.n):
        if not gradient[j].is_zero():
            result = result + gradient[j] * model.drift[j]

    if model.n_w:
        covariance = model.diffusion_covariance
        for j, xj in enumerate(model.state_vars):
            if gradient[j].is_zero():
                continue
            for l, xl in enumerate(model.state_vars):
                if covariance[j][l].is_zero():
                    continue
                result = result + gradient[j].differentiate(xl) * covariance[j][l] * Fraction(1, 2)

    if model.jumps:
        identity = {v: Polynomial.variable(v, model.variables) for v in model.input_vars}
        for jump in model.jumps:
            subst = dict(zip(model.state_vars, jump.jump_map))
            subst.update(identity)
            increment = h.compose(subst) - h
            if not increment.is_zero():
                result = result + increment * jump.intensity
    return result


def apply_generator_basis(model: JumpDiffusionModel, monomials: Sequence[MultiIndex],
                          max_workers: int = 1) -> List[GeneratorResult]:
    """
    Apply L to each full-context state monomial; output order follows `monomials`.

    Args:
        model: Jump-diffusion model
        monomials: Full-context multi-indices with zero input exponents
        max_workers: Thread-pool size (1 runs inline)
    """
    def image(m: MultiIndex) -> GeneratorResult:
        return GeneratorResult(tuple(m), apply_generator(model, Polynomial.monomial(m, model.variables)))

    if max_workers <= 1 or len(monomials) < 2:
        return [image(m) for m in monomials]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(image, monomials))


def state_monomials(model: JumpDiffusionModel, max_degree: int) -> List[MultiIndex]:
    """Pure-state monomials up to `max_degree` as full-context multi-indices."""
    pad = (0,) * model.n_u
    return [m + pad for m in monomials_up_to(model.n, max_degree)]


def generator_degree_report(model: JumpDiffusionModel, max_degree: int) -> List[Tuple[MultiIndex, int]]:
    """
    Degree of L x^m for every state monomial of degree 1..max_degree.

    Args:
        model: Jump-diffusion model
        max_degree: Largest monomial degree to report (>= 1)

    Returns:
        List of (monomial, image degree); the image degree is -1 when L x^m = 0
    """
    if max_degree < 1:
        raise ValueError(f"max_degree must be >= 1, got {max_degree}")
    monomials = [m for m in state_monomials(model, max_degree) if sum(m)]
    rows = [(r.input_monomial, r.image.degree()) for r in apply_generator_basis(model, monomials)]
    for m, deg in rows:
        logger.debug(f"generator image of {m}: degree {deg}")
    return rows


def image_monomials(results: Iterable[GeneratorResult]) -> List[MultiIndex]:
    seen = set()
    for r in results:
        seen.update(r.image.terms)
    return sorted(seen)
