"""
Exception hierarchy for the momentsdp toolkit.

Input problems subclass ValueError so callers that only know the built-in
types still catch them. The CLI maps these classes onto exit codes.
"""

from typing import TYPE_CHECKING, Any, List, Optional, Sequence

if TYPE_CHECKING:
    from .sdp.problem import SdpSolution


class MomentSdpError(Exception):
    """Base class for every error raised by momentsdp."""


class ContextMismatchError(MomentSdpError, ValueError):
    """Two polynomials (or a polynomial and a model) use different variable contexts."""


class PolynomialParseError(MomentSdpError, ValueError):
    """A polynomial expression does not follow the grammar."""

    def __init__(self, message: str, position: int, text: str = ''):
        self.position = position
        self.text = text
        super().__init__(f"{message} at offset {position}")


class ModelFileError(MomentSdpError, ValueError):
    """A model or controller file violates its schema."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        location = []
        if field:
            location.append(f"field '{field}'")
        if line is not None:
            location.append(f"line {line}")
        suffix = f" ({', '.join(location)})" if location else ''
        super().__init__(f"{message}{suffix}")


class ModelValidationError(MomentSdpError, ValueError):
    """A model failed validation; carries every diagnostic."""

    def __init__(self, diagnostics: Sequence[Any]):
        self.diagnostics: List[Any] = list(diagnostics)
        joined = '; '.join(str(d) for d in self.diagnostics)
        super().__init__(f"invalid model: {joined}")


class ClosureError(MomentSdpError, ValueError):
    """A monomial needed by the moment system is not housed in the basis."""

    def __init__(self, message: str, monomial: str):
        self.monomial = monomial
        super().__init__(f"{message}: {monomial}")


class SolverError(MomentSdpError):
    """An SDP solve ended without an optimal status."""

    def __init__(self, message: str, solution: Optional['SdpSolution'] = None):
        self.solution = solution
        super().__init__(message)

    @property
    def status(self) -> Optional[str]:
        return None if self.solution is None else self.solution.status.value


class SimulationError(MomentSdpError):
    """The simulator met a state it cannot advance from."""

    def __init__(self, message: str, time: float, state: Any = None):
        self.time = time
        self.state = state
        super().__init__(f"{message} at t={time:g}, state={state}")


class ControllerError(MomentSdpError, ValueError):
    """Controller extraction or evaluation received inconsistent inputs."""
