"""
Enumerations shared across the momentsdp packages.
"""

from enum import Enum


class Sense(str, Enum):
    """Optimisation direction of an objective functional."""

    MIN = 'min'
    MAX = 'max'

    @property
    def sign(self) -> float:
        return 1.0 if self is Sense.MIN else -1.0


class SolveStatus(str, Enum):
    """Termination status reported by every SDP backend."""

    OPTIMAL = 'optimal'
    INFEASIBLE = 'infeasible'
    UNBOUNDED = 'unbounded'
    NUMERICAL_FAILURE = 'numerical-failure'


class InitialKind(str, Enum):
    DIRAC = 'dirac'
    GAUSSIAN = 'gaussian'
    EXPLICIT = 'explicit'


__all__ = ['Sense', 'SolveStatus', 'InitialKind']
