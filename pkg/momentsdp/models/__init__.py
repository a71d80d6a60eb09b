"""
Model types, validation and the model-file format.
"""

from .model import (
    BasisOverride,
    Constraint,
    Diagnostic,
    InitialDistribution,
    Jump,
    JumpDiffusionModel,
    RelaxationOptions,
    input_bounds,
    state_floor_variables,
    validate,
)
from .model_file import dumps_model, load_model, loads_model, save_model

__all__ = [
    'BasisOverride',
    'Constraint',
    'Diagnostic',
    'InitialDistribution',
    'Jump',
    'JumpDiffusionModel',
    'RelaxationOptions',
    'input_bounds',
    'state_floor_variables',
    'validate',
    'load_model',
    'loads_model',
    'save_model',
    'dumps_model',
]
