"""
SDP assembly, solving and SDPA export.
"""

from .assemble import (
    BoundPair,
    assemble,
    assemble_finite_horizon,
    assemble_steady_state,
    bound_pair,
    solve_many,
    with_terminal_objective,
)
from .backends import get_backend, solve
from .problem import BACKENDS, ConeBlock, NonnegativeRows, SdpProblem, SdpSolution, Segment, SolverOptions
from .sdpa import SdpaFile, read_sdpa, write_sdpa

__all__ = [
    'BACKENDS',
    'SolverOptions',
    'Segment',
    'ConeBlock',
    'NonnegativeRows',
    'SdpProblem',
    'SdpSolution',
    'assemble',
    'assemble_steady_state',
    'assemble_finite_horizon',
    'solve',
    'solve_many',
    'get_backend',
    'BoundPair',
    'bound_pair',
    'with_terminal_objective',
    'SdpaFile',
    'read_sdpa',
    'write_sdpa',
]
