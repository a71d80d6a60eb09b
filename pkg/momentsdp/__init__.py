"""
momentsdp: moment-based SDP bounds and feedback laws for polynomial jump diffusions.

Typical use:

    model = load_model('momentsdp/data/logistic.model')
    aux = build_auxiliary_system(model, order=2)
    pair = bound_pair(aux, model.polynomial('x^2'), model.horizon, model.steps)
"""

from shared import __version__

from .algebra import Polynomial, parse_polynomial
from .exceptions import (
    ClosureError,
    ContextMismatchError,
    ControllerError,
    ModelFileError,
    ModelValidationError,
    MomentSdpError,
    PolynomialParseError,
    SimulationError,
    SolverError,
)
from .models import JumpDiffusionModel, load_model, save_model, validate
from .sdp import SolverOptions, assemble, bound_pair, solve, write_sdpa
from .services import (
    build_auxiliary_system,
    extract_controller,
    simulate_paths,
)

__all__ = [
    '__version__',
    'Polynomial',
    'parse_polynomial',
    'JumpDiffusionModel',
    'load_model',
    'save_model',
    'validate',
    'build_auxiliary_system',
    'assemble',
    'solve',
    'SolverOptions',
    'bound_pair',
    'write_sdpa',
    'extract_controller',
    'simulate_paths',
    'MomentSdpError',
    'ContextMismatchError',
    'PolynomialParseError',
    'ModelFileError',
    'ModelValidationError',
    'ClosureError',
    'SolverError',
    'SimulationError',
    'ControllerError',
]
