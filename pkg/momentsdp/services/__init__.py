"""
Services built on the model: generator, moment system, controllers, simulation and oracles.
"""

from .controller import PolynomialController, extract_controller, load_controller, save_controller
from .ctmc import ctmc_stationary_oracle, stationary_moment
from .generator import apply_generator, apply_generator_basis
from .moment_system import (
    AuxiliaryLinearSystem,
    MomentBasis,
    build_auxiliary_system,
    default_basis,
    dump_aux,
)
from .riccati import lqr_riccati_oracle
from .simulate import (
    MomentEstimate,
    TrajectoryEnsemble,
    empirical_moment,
    estimate_cost,
    estimate_long_run_cost,
    simulate_paths,
    write_moment_csv,
)

__all__ = [
    'apply_generator',
    'apply_generator_basis',
    'MomentBasis',
    'AuxiliaryLinearSystem',
    'default_basis',
    'build_auxiliary_system',
    'dump_aux',
    'PolynomialController',
    'extract_controller',
    'save_controller',
    'load_controller',
    'MomentEstimate',
    'TrajectoryEnsemble',
    'simulate_paths',
    'estimate_cost',
    'estimate_long_run_cost',
    'empirical_moment',
    'write_moment_csv',
    'ctmc_stationary_oracle',
    'stationary_moment',
    'lqr_riccati_oracle',
]
