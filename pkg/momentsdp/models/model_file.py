"""
Reading and writing the line-oriented model-file format.

A model file is UTF-8 text made of `[section]` headers followed by
`key = value` lines; `#` starts a comment line. See docs/file_formats.md for
the full schema. Unknown sections or keys are errors reported with the field
name and line number.
"""

import logging
import re
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

from shared.types import InitialKind, Sense

from ..algebra.monomials import format_monomial
from ..algebra.parser import parse_monomial, parse_polynomial
from ..algebra.polynomial import Polynomial, format_number
from ..exceptions import ModelFileError, ModelValidationError, PolynomialParseError
from .model import (
    BasisOverride,
    Constraint,
    InitialDistribution,
    Jump,
    JumpDiffusionModel,
    RelaxationOptions,
    validate,
)

logger = logging.getLogger(__name__)

_SECTION = re.compile(r'^\[([A-Za-z_][A-Za-z_0-9]*(?:\.[0-9]+)?)\]$')
_IDENT = re.compile(r'^[A-Za-z_][A-Za-z_0-9]*$')
_FIXED_SECTIONS = (
    'vars', 'inputs', 'drift', 'diffusion', 'constraints', 'cost',
    'initial', 'horizon', 'relaxation', 'basis',
)
STEADY_STATE = 'steady-state'


class Entry(NamedTuple):
    key: str
    value: str
    line: int


class _Section(NamedTuple):
    name: str
    line: int
    entries: Dict[str, Entry]


def _split_sections(text: str) -> Dict[str, _Section]:
    sections: Dict[str, _Section] = {}
    current: Optional[_Section] = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        header = _SECTION.match(line)
        if header:
            name = header.group(1)
            if name not in _FIXED_SECTIONS and not re.fullmatch(r'jump\.[0-9]+', name):
                raise ModelFileError(f"unknown section [{name}]", name, number)
            if name in sections:
                raise ModelFileError(f"duplicate section [{name}]", name, number)
            current = _Section(name, number, {})
            sections[name] = current
            continue
        if current is None:
            raise ModelFileError("key outside of any section", None, number)
        if '=' not in line:
            raise ModelFileError("expected 'key = value'", current.name, number)
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ModelFileError("empty key", current.name, number)
        if key in current.entries:
            raise ModelFileError("duplicate key", f"{current.name}.{key}", number)
        current.entries[key] = Entry(key, value, number)
    return sections


class _Reader:
    """Turns parsed sections into a JumpDiffusionModel."""

    def __init__(self, sections: Dict[str, _Section], name: str):
        self.sections = sections
        self.name = name
        self.state_vars: Tuple[str, ...] = ()
        self.input_vars: Tuple[str, ...] = ()

    @property
    def context(self) -> Tuple[str, ...]:
        return self.state_vars + self.input_vars

    def section(self, name: str, required: bool = False) -> Optional[_Section]:
        found = self.sections.get(name)
        if found is None and required:
            raise ModelFileError(f"missing section [{name}]", name)
        return found

    def poly(self, section: str, entry: Entry) -> Polynomial:
        try:
            return parse_polynomial(entry.value, self.context)
        except PolynomialParseError as e:
            raise ModelFileError(f"polynomial parse error: {e}", f"{section}.{entry.key}", entry.line) from e

    def number(self, section: str, entry: Entry, text: Optional[str] = None) -> float:
        try:
            return float(text if text is not None else entry.value)
        except ValueError as e:
            raise ModelFileError(f"expected a number, got {entry.value!r}", f"{section}.{entry.key}", entry.line) from e

    def numbers(self, section: str, entry: Entry) -> Tuple[float, ...]:
        return tuple(self.number(section, entry, part) for part in entry.value.split(',') if part.strip())

    def unknown(self, section: _Section, allowed: Tuple[str, ...]) -> None:
        for key, entry in section.entries.items():
            if key not in allowed:
                raise ModelFileError("unknown key", f"{section.name}.{key}", entry.line)

    def names(self, section_name: str, required: bool) -> Tuple[str, ...]:
        section = self.section(section_name, required)
        if section is None:
            return ()
        self.unknown(section, ('names',))
        entry = section.entries.get('names')
        if entry is None:
            if required:
                raise ModelFileError("missing key", f"{section_name}.names", section.line)
            return ()
        names = tuple(part.strip() for part in entry.value.split(',') if part.strip())
        for name in names:
            if not _IDENT.match(name):
                raise ModelFileError(f"invalid variable name {name!r}", f"{section_name}.names", entry.line)
        return names

    def read(self) -> JumpDiffusionModel:
        self.state_vars = self.names('vars', required=True)
        self.input_vars = self.names('inputs', required=False)
        if not self.state_vars:
            raise ModelFileError("no state variables declared", 'vars.names')
        clash = set(self.state_vars) & set(self.input_vars)
        if clash:
            raise ModelFileError(f"names declared as both state and input: {', '.join(sorted(clash))}", 'inputs.names')

        drift = self.read_drift()
        diffusion = self.read_diffusion()
        jumps = self.read_jumps()
        constraints = self.read_constraints()
        running, terminal, sense = self.read_cost()
        initial = self.read_initial()
        horizon, steps = self.read_horizon()
        relaxation = self.read_relaxation()
        override = self.read_basis()
        return JumpDiffusionModel(
            state_vars=self.state_vars,
            input_vars=self.input_vars,
            drift=drift,
            diffusion=diffusion,
            jumps=jumps,
            constraints=constraints,
            running_cost=running,
            terminal_cost=terminal,
            initial=initial,
            horizon=horizon,
            steps=steps,
            sense=sense,
            relaxation=relaxation,
            basis_override=override,
            name=self.name,
        )

    def read_drift(self) -> Tuple[Polynomial, ...]:
        zero = Polynomial.zero(self.context)
        drift = {v: zero for v in self.state_vars}
        section = self.section('drift')
        if section is not None:
            self.unknown(section, self.state_vars)
            for key, entry in section.entries.items():
                drift[key] = self.poly('drift', entry)
        return tuple(drift[v] for v in self.state_vars)

    def read_diffusion(self) -> Tuple[Tuple[Polynomial, ...], ...]:
        entries: Dict[Tuple[int, int], Polynomial] = {}
        section = self.section('diffusion')
        if section is not None:
            for key, entry in section.entries.items():
                var, _, column = key.rpartition('.')
                if var not in self.state_vars or not column.isdigit() or int(column) < 1:
                    raise ModelFileError("unknown key (expected <state>.<column>)", f"diffusion.{key}", entry.line)
                entries[(self.state_vars.index(var), int(column) - 1)] = self.poly('diffusion', entry)
        n_w = max((col + 1 for _, col in entries), default=0)
        zero = Polynomial.zero(self.context)
        return tuple(
            tuple(entries.get((i, k), zero) for k in range(n_w))
            for i in range(len(self.state_vars))
        )

    def read_jumps(self) -> Tuple[Jump, ...]:
        jump_sections = sorted(
            (s for name, s in self.sections.items() if name.startswith('jump.')),
            key=lambda s: int(s.name.split('.')[1]),
        )
        jumps = []
        allowed = tuple(f"map.{v}" for v in self.state_vars) + ('intensity',)
        for section in jump_sections:
            self.unknown(section, allowed)
            if 'intensity' not in section.entries:
                raise ModelFileError("missing key", f"{section.name}.intensity", section.line)
            jump_map = tuple(
                self.poly(section.name, section.entries[f"map.{v}"])
                if f"map.{v}" in section.entries else Polynomial.variable(v, self.context)
                for v in self.state_vars
            )
            jumps.append(Jump(jump_map, self.poly(section.name, section.entries['intensity'])))
        return tuple(jumps)

    def read_constraints(self) -> Tuple[Constraint, ...]:
        section = self.section('constraints')
        if section is None:
            return ()
        constraints = []
        for key, entry in section.entries.items():
            if not _IDENT.match(key):
                raise ModelFileError("constraint names must be identifiers", f"constraints.{key}", entry.line)
            constraints.append(Constraint(key, self.poly('constraints', entry)))
        return tuple(constraints)

    def read_cost(self) -> Tuple[Polynomial, Polynomial, Sense]:
        section = self.section('cost', required=True)
        self.unknown(section, ('running', 'terminal', 'sense'))
        if 'running' not in section.entries:
            raise ModelFileError("missing key", 'cost.running', section.line)
        running = self.poly('cost', section.entries['running'])
        terminal = (
            self.poly('cost', section.entries['terminal'])
            if 'terminal' in section.entries else Polynomial.zero(self.context)
        )
        sense = Sense.MIN
        if 'sense' in section.entries:
            entry = section.entries['sense']
            try:
                sense = Sense(entry.value.lower())
            except ValueError as e:
                raise ModelFileError("sense must be 'min' or 'max'", 'cost.sense', entry.line) from e
        return running, terminal, sense

    def read_initial(self) -> InitialDistribution:
        section = self.section('initial', required=True)
        if 'kind' not in section.entries:
            raise ModelFileError("missing key", 'initial.kind', section.line)
        kind_entry = section.entries['kind']
        try:
            kind = InitialKind(kind_entry.value.lower())
        except ValueError as e:
            raise ModelFileError("kind must be dirac, gaussian or explicit", 'initial.kind', kind_entry.line) from e

        if kind is InitialKind.DIRAC:
            self.unknown(section, ('kind', 'point'))
            point = self.required(section, 'point')
            return InitialDistribution.dirac(self.numbers('initial', point))
        if kind is InitialKind.GAUSSIAN:
            self.unknown(section, ('kind', 'mean', 'covariance'))
            mean = self.numbers('initial', self.required(section, 'mean'))
            cov_entry = self.required(section, 'covariance')
            rows = [row for row in cov_entry.value.split(';') if row.strip()]
            covariance = [
                tuple(self.number('initial', cov_entry, part) for part in row.split(',') if part.strip())
                for row in rows
            ]
            return InitialDistribution.gaussian(mean, covariance)

        moments = {}
        state_context = self.state_vars
        for key, entry in section.entries.items():
            if key == 'kind':
                continue
            if not key.startswith('moment.'):
                raise ModelFileError("unknown key", f"initial.{key}", entry.line)
            try:
                m = parse_monomial(key[len('moment.'):], state_context)
            except PolynomialParseError as e:
                raise ModelFileError(f"bad monomial: {e}", f"initial.{key}", entry.line) from e
            moments[m] = self.number('initial', entry)
        return InitialDistribution.explicit(moments)

    def required(self, section: _Section, key: str) -> Entry:
        if key not in section.entries:
            raise ModelFileError("missing key", f"{section.name}.{key}", section.line)
        return section.entries[key]

    def read_horizon(self) -> Tuple[Optional[float], Optional[int]]:
        section = self.section('horizon', required=True)
        self.unknown(section, ('T', 'steps'))
        entry = self.required(section, 'T')
        horizon = None if entry.value.lower() == STEADY_STATE else self.number('horizon', entry)
        steps = None
        if 'steps' in section.entries:
            steps_entry = section.entries['steps']
            if not steps_entry.value.isdigit():
                raise ModelFileError("steps must be a positive integer", 'horizon.steps', steps_entry.line)
            steps = int(steps_entry.value)
        return horizon, steps

    def read_relaxation(self) -> RelaxationOptions:
        section = self.section('relaxation')
        if section is None:
            return RelaxationOptions()
        moment_inputs = None
        scale = None
        odd_powers: List[Tuple[str, int]] = []
        for key, entry in section.entries.items():
            if key == 'moment_inputs':
                if entry.value.lower() not in ('true', 'false'):
                    raise ModelFileError("expected true or false", 'relaxation.moment_inputs', entry.line)
                moment_inputs = entry.value.lower() == 'true'
            elif key == 'scale':
                scale = self.number('relaxation', entry)
            elif key.startswith('odd_powers.'):
                if not entry.value.isdigit():
                    raise ModelFileError("expected an odd positive integer", f"relaxation.{key}", entry.line)
                odd_powers.append((key[len('odd_powers.'):], int(entry.value)))
            else:
                raise ModelFileError("unknown key", f"relaxation.{key}", entry.line)
        return RelaxationOptions(moment_inputs, scale, tuple(odd_powers))

    def read_basis(self) -> Optional[BasisOverride]:
        section = self.section('basis')
        if section is None:
            return None
        self.unknown(section, ('state', 'input'))
        state = self.monomial_list(self.required(section, 'state'))
        inputs = self.monomial_list(section.entries['input']) if 'input' in section.entries else ()
        return BasisOverride(state, inputs)

    def monomial_list(self, entry: Entry):
        out = []
        for part in entry.value.split(','):
            if not part.strip():
                continue
            try:
                out.append(parse_monomial(part.strip(), self.context))
            except PolynomialParseError as e:
                raise ModelFileError(f"bad monomial: {e}", f"basis.{entry.key}", entry.line) from e
        return tuple(out)


def loads_model(text: str, name: str = 'model') -> JumpDiffusionModel:
    """
    Parse and validate model-file text.

    Args:
        text: Model-file contents
        name: Name recorded on the model

    Returns:
        JumpDiffusionModel: the validated model

    Raises:
        ModelFileError: schema violation or polynomial parse error (field, line)
        ModelValidationError: dimension mismatch or another invariant failure
    """
    model = _Reader(_split_sections(text), name).read()
    diagnostics = validate(model)
    if diagnostics:
        raise ModelValidationError(diagnostics)
    return model


def load_model(path: Union[str, Path]) -> JumpDiffusionModel:
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        logger.error(f"Failed to read model file {path}: {e}")
        raise ModelFileError(f"cannot read model file {path}: {e}") from e
    model = loads_model(text, name=path.stem)
    logger.info(f"Loaded model '{model.name}': {model.n} state(s), {model.n_u} input(s), {len(model.jumps)} jump(s)")
    return model


def dumps_model(model: JumpDiffusionModel) -> str:
    """Canonical model-file text; `loads_model(dumps_model(m), m.name) == m`."""
    lines = [f"# {model.name}", '', '[vars]', f"names = {', '.join(model.state_vars)}"]
    if model.input_vars:
        lines += ['', '[inputs]', f"names = {', '.join(model.input_vars)}"]

    lines += ['', '[drift]']
    lines += [f"{v} = {p}" for v, p in zip(model.state_vars, model.drift)]

    lines += ['', '[diffusion]']
    for v, row in zip(model.state_vars, model.diffusion):
        lines += [f"{v}.{k} = {p}" for k, p in enumerate(row, start=1)]

    for j, jump in enumerate(model.jumps, start=1):
        lines += ['', f"[jump.{j}]"]
        lines += [f"map.{v} = {p}" for v, p in zip(model.state_vars, jump.jump_map)]
        lines.append(f"intensity = {jump.intensity}")

    if model.constraints:
        lines += ['', '[constraints]']
        lines += [f"{c.name} = {c.polynomial}" for c in model.constraints]

    lines += [
        '', '[cost]',
        f"running = {model.running_cost}",
        f"terminal = {model.terminal_cost}",
        f"sense = {model.sense.value}",
    ]

    initial = model.initial
    lines += ['', '[initial]', f"kind = {initial.kind.value}"]
    if initial.kind is InitialKind.DIRAC:
        lines.append(f"point = {', '.join(format_number(v) for v in initial.point)}")
    elif initial.kind is InitialKind.GAUSSIAN:
        lines.append(f"mean = {', '.join(format_number(v) for v in initial.mean)}")
        rows = '; '.join(', '.join(format_number(v) for v in row) for row in initial.covariance)
        lines.append(f"covariance = {rows}")
    else:
        for m, value in initial.moments:
            lines.append(f"moment.{format_monomial(m, model.state_vars)} = {format_number(value)}")

    lines += ['', '[horizon]']
    lines.append(f"T = {STEADY_STATE if model.horizon is None else format_number(model.horizon)}")
    if model.steps is not None:
        lines.append(f"steps = {model.steps}")

    relaxation = model.relaxation
    if relaxation != RelaxationOptions():
        lines += ['', '[relaxation]']
        if relaxation.moment_inputs is not None:
            lines.append(f"moment_inputs = {'true' if relaxation.moment_inputs else 'false'}")
        if relaxation.scale is not None:
            lines.append(f"scale = {format_number(relaxation.scale)}")
        lines += [f"odd_powers.{name} = {k}" for name, k in relaxation.odd_powers]

    if model.basis_override is not None:
        override = model.basis_override
        lines += ['', '[basis]']
        lines.append(f"state = {', '.join(format_monomial(m, model.variables) for m in override.state)}")
        if override.input:
            lines.append(f"input = {', '.join(format_monomial(m, model.variables) for m in override.input)}")
    return '\n'.join(lines) + '\n'


def save_model(model: JumpDiffusionModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(dumps_model(model), encoding='utf-8')
    logger.info(f"Wrote model '{model.name}' to {path}")
    return path
