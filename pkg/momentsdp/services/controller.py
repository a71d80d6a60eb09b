"""
Polynomial feedback laws fitted to SDP moment solutions.

At every grid point the coefficients k solve the least-squares matching

    sum_i k_i E[x^(d_i + m_j)] ~= E[u x^(m_j)]     for every matching monomial m_j,

so the law u = sum_i k_i x^(d_i) reproduces the input/state correlations the
relaxation found.
"""

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple, Union

import numpy as np

from shared.config import config

from ..algebra.monomials import MultiIndex, format_monomial, monomials_up_to
from ..algebra.parser import parse_monomial
from ..exceptions import ControllerError, ModelFileError, PolynomialParseError
from .moment_system import MomentBasis

if TYPE_CHECKING:
    from ..sdp.problem import SdpSolution

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PolynomialController:
    """u(t, x) = clip(sum_i k_i(t) x^(d_i), lo, hi).

    `coefficients` has shape (grid points, monomials, inputs); `times` is None
    for a time-invariant law with a single grid point.
    """

    state_vars: Tuple[str, ...]
    input_vars: Tuple[str, ...]
    monomials: Tuple[MultiIndex, ...]
    coefficients: np.ndarray
    times: Optional[np.ndarray] = None
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None

    def __post_init__(self):
        coefficients = np.asarray(self.coefficients, dtype=float)
        expected = (len(self.monomials), len(self.input_vars))
        if coefficients.ndim != 3 or coefficients.shape[1:] != expected:
            raise ControllerError(f"coefficients must have shape (grid, {expected[0]}, {expected[1]}), "
                                  f"got {coefficients.shape}")
        grid = 1 if self.times is None else len(self.times)
        if coefficients.shape[0] != grid:
            raise ControllerError(f"{coefficients.shape[0]} coefficient sets for {grid} grid points")
        for m in self.monomials:
            if len(m) != len(self.state_vars):
                raise ControllerError(f"monomial {m} does not match the state variables {self.state_vars}")
        object.__setattr__(self, 'coefficients', coefficients)
        if self.times is not None:
            object.__setattr__(self, 'times', np.asarray(self.times, dtype=float))

    @classmethod
    def constant(cls, state_vars: Sequence[str], input_vars: Sequence[str],
                 value: Union[float, Sequence[float]]) -> 'PolynomialController':
        """Open-loop law u = value."""
        value = np.broadcast_to(np.asarray(value, dtype=float), (len(input_vars),))
        return cls(tuple(state_vars), tuple(input_vars), ((0,) * len(state_vars),),
                   value.reshape(1, 1, -1).copy())

    @property
    def n_u(self) -> int:
        return len(self.input_vars)

    @property
    def degree(self) -> int:
        return max((sum(m) for m in self.monomials), default=0)

    def grid_index(self, t: float) -> int:
        """Nearest grid point to `t`; ties go to the earlier point."""
        if self.times is None:
            return 0
        return int(np.argmin(np.abs(self.times - t)))

    def features(self, x: np.ndarray) -> np.ndarray:
        """x^(d_i) for a batch of states of shape (..., n)."""
        x = np.asarray(x, dtype=float)
        exps = np.array(self.monomials, dtype=float).reshape(len(self.monomials), len(self.state_vars))
        return np.prod(x[..., None, :] ** exps, axis=-1)

    def evaluate_many(self, t: float, x: np.ndarray) -> np.ndarray:
        """Inputs for a batch of states (paths, n) at time t, clipped."""
        u = self.features(x) @ self.coefficients[self.grid_index(t)]
        if self.lo is not None or self.hi is not None:
            u = np.clip(u,
                        -np.inf if self.lo is None else self.lo,
                        np.inf if self.hi is None else self.hi)
        return u

    def evaluate(self, t: float, x: Sequence[float]) -> np.ndarray:
        return self.evaluate_many(t, np.asarray(x, dtype=float)[None, :])[0]

    def clip(self, lo: Union[float, Sequence[float]], hi: Union[float, Sequence[float]]) -> 'PolynomialController':
        """
        Copy that saturates its output into [lo, hi]; the polynomial itself is unchanged.

        Raises:
            ControllerError: if lo > hi for some input
        """
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (self.n_u,)).copy()
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (self.n_u,)).copy()
        if np.any(lo > hi):
            raise ControllerError(f"clip bounds are inverted: lo={lo.tolist()}, hi={hi.tolist()}")
        return replace(self, lo=lo, hi=hi)

    def describe(self, step: int = 0) -> str:
        """Human-readable law at one grid point."""
        laws = []
        for a, name in enumerate(self.input_vars):
            terms = [f"{self.coefficients[step, i, a]:+.6g}*{format_monomial(m, self.state_vars)}"
                     for i, m in enumerate(self.monomials)]
            laws.append(f"{name} = {' '.join(terms) or '0'}")
        return '; '.join(laws)


def _pad(m: MultiIndex, width: int) -> MultiIndex:
    return tuple(m) + (0,) * (width - len(m))


def _state_monomials(given: Optional[Sequence[MultiIndex]], degree: int, n_state: int) -> List[MultiIndex]:
    if given is None:
        return default_controller_monomials(n_state, degree)
    for m in given:
        if any(tuple(m)[n_state:]):
            raise ControllerError(f"controller monomial {m} involves an input")
    return [tuple(m)[:n_state] for m in given]


def extract_controller(solution: 'SdpSolution', controller_monomials: Optional[Sequence[MultiIndex]] = None,
                       matching_monomials: Optional[Sequence[MultiIndex]] = None,
                       basis: Optional[MomentBasis] = None, degree: int = 1,
                       regularization: Optional[float] = None) -> PolynomialController:
    """
    Fit a polynomial feedback law to the moments of an optimal SDP solution.

    Args:
        solution: Optimal solution of a controlled problem
        controller_monomials: State monomials d_i (state-context multi-indices);
            defaults to every state monomial of degree <= `degree`
        matching_monomials: State monomials m_j; defaults to every state monomial up to
            the controller degree
        basis: Moment basis of the solution; defaults to the one it was built from
        degree: Controller degree used for the defaults
        regularization: Ridge added to the normal equations

    Returns:
        PolynomialController: one coefficient set per grid point

    Raises:
        ControllerError: if the solution is not optimal or a needed moment is not housed
    """
    if not solution.ok:
        raise ControllerError(f"cannot extract a controller from a {solution.status.value} solution")
    aux = solution.problem.aux
    if aux is None:
        raise ControllerError("solution carries no moment basis")
    basis = basis or aux.basis
    n_state = basis.n_state
    n_u = len(basis.context) - n_state
    if n_u == 0:
        raise ControllerError("model has no inputs")
    regularization = config.LSQ_REGULARIZATION if regularization is None else regularization

    d_list = _state_monomials(controller_monomials, degree, n_state)
    top = max(sum(d) for d in d_list)
    m_list = _state_monomials(matching_monomials, top, n_state)
    width = len(basis.context)

    needed_xx = [[_pad(tuple(a + b for a, b in zip(d, m)), width) for d in d_list] for m in m_list]
    needed_ux = [[tuple(m) + tuple(1 if k == a else 0 for k in range(n_u)) for a in range(n_u)]
                 for m in m_list]
    for row in needed_xx + needed_ux:
        for mono in row:
            if not basis.houses(mono):
                raise ControllerError(f"moment {basis.label(mono)} needed for the fit is not housed in the basis")

    steps = solution.problem.steps
    P = np.empty((steps, len(m_list), len(d_list)))
    R = np.empty((steps, len(m_list), n_u))
    for step in range(steps):
        table = solution.moments(step)
        P[step] = [[table[mono] for mono in row] for row in needed_xx]
        R[step] = [[table[mono] for mono in row] for row in needed_ux]

    PT = np.swapaxes(P, 1, 2)
    normal = PT @ P + regularization * np.eye(len(d_list))
    coefficients = np.linalg.solve(normal, PT @ R)

    times = solution.problem.times
    if times is not None and steps > 1 and not aux.terminal_uses_inputs:
        # inputs at the final grid point do not enter the objective
        coefficients[-1] = coefficients[-2]

    controller = PolynomialController(
        state_vars=basis.context[:n_state],
        input_vars=basis.context[n_state:],
        monomials=tuple(d_list),
        coefficients=coefficients,
        times=times,
    )
    logger.info(f"extracted degree-{controller.degree} controller over {len(d_list)} monomials "
                f"at {steps} grid points: {controller.describe(0)}")
    return controller


def dumps_controller(controller: PolynomialController) -> str:
    def bounds(values: Optional[np.ndarray], fill: float) -> str:
        values = np.full(controller.n_u, fill) if values is None else values
        return ', '.join(f"{v:.17g}" for v in values)

    lines = [
        '# momentsdp polynomial controller',
        '[controller]',
        f"state = {', '.join(controller.state_vars)}",
        f"input = {', '.join(controller.input_vars)}",
        f"monomials = {', '.join(format_monomial(m, controller.state_vars) for m in controller.monomials)}",
        f"lo = {bounds(controller.lo, -np.inf)}",
        f"hi = {bounds(controller.hi, np.inf)}",
        '',
        '[coefficients]',
        '# t, then one column per (input, monomial), input-major',
    ]
    times = [np.inf] if controller.times is None else controller.times
    for step, t in enumerate(times):
        values = controller.coefficients[step].T.ravel()
        lines.append(' '.join([f"{t:.17g}"] + [f"{v:.17g}" for v in values]))
    return '\n'.join(lines) + '\n'


def save_controller(controller: PolynomialController, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_controller(controller), encoding='utf-8')
    logger.info(f"wrote controller {path}")
    return path


def _names(value: str) -> Tuple[str, ...]:
    return tuple(v.strip() for v in value.split(',') if v.strip())


def loads_controller(text: str) -> PolynomialController:
    """
    Parse the controller file format written by `save_controller`.

    Raises:
        ModelFileError: on any schema violation
    """
    header = {}
    rows: List[Tuple[int, List[float]]] = []
    section = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if line.startswith('[') and line.endswith(']'):
            section = line[1:-1].strip()
            if section not in ('controller', 'coefficients'):
                raise ModelFileError(f"unknown section [{section}]", line=number)
            continue
        if section == 'controller':
            key, sep, value = line.partition('=')
            if not sep:
                raise ModelFileError("expected 'key = value'", line=number)
            header[key.strip()] = (value.strip(), number)
        elif section == 'coefficients':
            try:
                rows.append((number, [float(v) for v in line.split()]))
            except ValueError:
                raise ModelFileError("coefficient rows must be numbers", field='coefficients', line=number)
        else:
            raise ModelFileError("content outside a section", line=number)

    for key in ('state', 'input', 'monomials'):
        if key not in header:
            raise ModelFileError("missing key", field=f"controller.{key}")
    state_vars = _names(header['state'][0])
    input_vars = _names(header['input'][0])
    monomials = []
    for text_m in _names(header['monomials'][0]):
        try:
            monomials.append(parse_monomial(text_m, state_vars))
        except PolynomialParseError as exc:
            raise ModelFileError(str(exc), field='controller.monomials', line=header['monomials'][1])

    width = 1 + len(monomials) * len(input_vars)
    for number, values in rows:
        if len(values) != width:
            raise ModelFileError(f"expected {width} values, got {len(values)}", field='coefficients', line=number)
    if not rows:
        raise ModelFileError("no coefficient rows", field='coefficients')

    times = np.array([values[0] for _, values in rows])
    coefficients = np.array([np.reshape(values[1:], (len(input_vars), len(monomials))).T for _, values in rows])
    steady = len(rows) == 1 and np.isinf(times[0])

    def bounds(key: str) -> Optional[np.ndarray]:
        if key not in header:
            return None
        try:
            values = np.array([float(v) for v in _names(header[key][0])])
        except ValueError:
            raise ModelFileError("bounds must be numbers", field=f"controller.{key}", line=header[key][1])
        if len(values) != len(input_vars):
            raise ModelFileError("one bound per input expected", field=f"controller.{key}", line=header[key][1])
        return values

    controller = PolynomialController(state_vars, input_vars, tuple(monomials), coefficients,
                                      None if steady else times)
    lo, hi = bounds('lo'), bounds('hi')
    if lo is not None or hi is not None:
        controller = controller.clip(-np.inf if lo is None else lo, np.inf if hi is None else hi)
    return controller


def load_controller(path: Union[str, Path]) -> PolynomialController:
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        logger.error(f"Failed to read controller file {path}: {exc}")
        raise ModelFileError(f"cannot read {path}: {exc}")
    return loads_controller(text)


def default_controller_monomials(n_state: int, degree: int) -> List[MultiIndex]:
    """Every state monomial of degree <= `degree`, in basis order."""
    return monomials_up_to(n_state, degree)


__all__ = [
    'PolynomialController',
    'extract_controller',
    'default_controller_monomials',
    'dumps_controller',
    'loads_controller',
    'save_controller',
    'load_controller',
]
