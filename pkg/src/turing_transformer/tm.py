"""Reference deterministic Turing machine.

This is the ground truth every compiled simulation is checked against.  The
tape is a sparse two-sided map with a blank default, and the machine halts
only on its accept state.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import (
    DuplicateIdentifier,
    EvenWindow,
    MissingTransition,
    SteppedAcceptingState,
    TmSyntaxError,
    UnknownStateInTransition,
    UnknownSymbolInTransition,
    ValidationError,
)

BLANK = "#"
FILE_BLANK = "_"
LEFT, RIGHT = "L", "R"
MOVES = {LEFT: -1, RIGHT: +1}


@dataclass(frozen=True)
class Transition:
    next_state: str
    write: str
    move: str

    def __post_init__(self):
        if self.move not in MOVES:
            raise ValueError(f"move must be 'L' or 'R', got {self.move!r}")


@dataclass(frozen=True)
class TmSpec:
    """A deterministic single-tape machine.

    ``transitions`` maps ``(state, symbol)`` to a :class:`Transition`; it must be
    total over the non-accepting states.
    """

    states: tuple
    alphabet: tuple
    transitions: Mapping
    start_state: str
    accept_state: str
    blank: str = BLANK

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        trans = {}
        for key, value in dict(self.transitions).items():
            if not isinstance(value, Transition):
                value = Transition(*value)
            trans[tuple(key)] = value
        object.__setattr__(self, "transitions", trans)

    @property
    def n_states(self):
        return len(self.states)

    @property
    def n_symbols(self):
        return len(self.alphabet)

    @property
    def n_transitions(self):
        return len(self.transitions)


@dataclass(frozen=True)
class ValidatedSpec(TmSpec):
    """A :class:`TmSpec` that passed :func:`validate`, with ordinal tables."""

    state_index: Mapping = field(default_factory=dict, compare=False)
    symbol_index: Mapping = field(default_factory=dict, compare=False)

    def rules(self):
        """Transitions in a deterministic (state ordinal, symbol ordinal) order."""
        return sorted(
            self.transitions.items(),
            key=lambda kv: (self.state_index[kv[0][0]], self.symbol_index[kv[0][1]]),
        )


def _check_unique(items, what):
    seen = set()
    for item in items:
        if item in seen:
            raise DuplicateIdentifier(f"duplicate {what} {item!r}")
        seen.add(item)


def validate(spec, locations=None):
    """Check the structural invariants of ``spec`` and attach index tables.

    ``locations`` optionally maps ``(state, symbol)`` keys to source line
    numbers so errors can point at the offending row.
    """
    if isinstance(spec, ValidatedSpec):
        return spec
    locations = locations or {}
    _check_unique(spec.states, "state")
    _check_unique(spec.alphabet, "symbol")
    states, symbols = set(spec.states), set(spec.alphabet)
    if spec.blank not in symbols:
        raise ValidationError(f"blank symbol {spec.blank!r} is not in the alphabet")
    for name, state in (("start", spec.start_state), ("accept", spec.accept_state)):
        if state not in states:
            raise ValidationError(f"{name} state {state!r} is not declared")

    for (state, symbol), rule in spec.transitions.items():
        line = locations.get((state, symbol))
        if state not in states:
            raise UnknownStateInTransition(f"unknown state {state!r}", line)
        if rule.next_state not in states:
            raise UnknownStateInTransition(f"unknown state {rule.next_state!r}", line)
        if symbol not in symbols:
            raise UnknownSymbolInTransition(f"unknown symbol {symbol!r}", line)
        if rule.write not in symbols:
            raise UnknownSymbolInTransition(f"unknown symbol {rule.write!r}", line)
        if state == spec.accept_state:
            raise ValidationError(
                f"accept state {state!r} must not have outgoing transitions", line
            )

    for state in spec.states:
        if state == spec.accept_state:
            continue
        for symbol in spec.alphabet:
            if (state, symbol) not in spec.transitions:
                raise MissingTransition(f"no transition for ({state!r}, {symbol!r})")

    return ValidatedSpec(
        states=spec.states,
        alphabet=spec.alphabet,
        transitions=spec.transitions,
        start_state=spec.start_state,
        accept_state=spec.accept_state,
        blank=spec.blank,
        state_index={q: i for i, q in enumerate(spec.states)},
        symbol_index={s: i for i, s in enumerate(spec.alphabet)},
    )


@dataclass(frozen=True)
class TapeConfiguration:
    """Machine state, sparse tape and head position.

    Cells holding the blank are never stored, so two configurations with the
    same visible tape compare equal.
    """

    state: str
    tape: Mapping = field(default_factory=dict)
    head: int = 0

    def read(self, cell, blank=BLANK):
        return self.tape.get(cell, blank)

    def tape_string(self, blank=BLANK):
        """Contiguous tape contents between the outermost non-blank cells."""
        if not self.tape:
            return ""
        lo, hi = min(self.tape), max(self.tape)
        return "".join(self.tape.get(i, blank) for i in range(lo, hi + 1))


def initial_configuration(spec, input_symbols: Iterable[str]):
    tape = {i: s for i, s in enumerate(input_symbols) if s != spec.blank}
    for s in tape.values():
        if s not in spec.alphabet:
            raise UnknownSymbolInTransition(f"input symbol {s!r} not in alphabet")
    return TapeConfiguration(spec.start_state, tape, 0)


def write_cell(tape, cell, symbol, blank=BLANK):
    """Return a copy of ``tape`` with ``cell`` set to ``symbol``."""
    tape = dict(tape)
    if symbol == blank:
        tape.pop(cell, None)
    else:
        tape[cell] = symbol
    return tape


def step(spec, config):
    if config.state == spec.accept_state:
        raise SteppedAcceptingState(f"configuration is already in {config.state!r}")
    rule = spec.transitions[(config.state, config.read(config.head, spec.blank))]
    tape = write_cell(config.tape, config.head, rule.write, spec.blank)
    return TapeConfiguration(rule.next_state, tape, config.head + MOVES[rule.move])


@dataclass
class RunTrace:
    configs: list
    halted: bool

    @property
    def final(self):
        return self.configs[-1]

    @property
    def steps(self):
        return len(self.configs) - 1

    def __len__(self):
        return len(self.configs)

    def __getitem__(self, i):
        return self.configs[i]


def run(spec, input_symbols, max_steps):
    """Run from the initial configuration for at most ``max_steps`` steps."""
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    config = (
        input_symbols
        if isinstance(input_symbols, TapeConfiguration)
        else initial_configuration(spec, input_symbols)
    )
    configs = [config]
    while len(configs) <= max_steps and config.state != spec.accept_state:
        config = step(spec, config)
        configs.append(config)
    return RunTrace(configs, config.state == spec.accept_state)


@dataclass(frozen=True)
class WindowView:
    state: str
    symbols: tuple

    @property
    def k(self):
        return len(self.symbols)

    @property
    def head_offset(self):
        return len(self.symbols) // 2

    @property
    def head_symbol(self):
        return self.symbols[self.head_offset]


def check_window(k):
    if k < 1 or k % 2 == 0:
        raise EvenWindow(f"window size must be odd and >= 1, got {k}")


def window(config, k, blank=BLANK):
    check_window(k)
    half = k // 2
    symbols = tuple(config.read(config.head - half + i, blank) for i in range(k))
    return WindowView(config.state, symbols)


# --- spec file format -------------------------------------------------------

_SECTIONS = ("states", "alphabet", "blank", "start", "accept", "delta")
_HEADER = re.compile(r"^([A-Za-z_]+)\s*:(.*)$")
_ROW = re.compile(r"^(\S+)\s+(\S+)\s*->\s*(\S+)\s+(\S+)\s+(\S+)\s*$")


def _from_file(token):
    return BLANK if token == FILE_BLANK else token


def _to_file(symbol):
    if symbol == FILE_BLANK:
        raise ValueError(f"symbol {FILE_BLANK!r} is reserved in spec files")
    return FILE_BLANK if symbol == BLANK else symbol


def parse_spec(text):
    """Parse the line-oriented machine format and validate the result."""
    lines = text.splitlines()
    values = {}
    delta_rows = []
    section = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        header = _HEADER.match(line)
        if header and header.group(1) in _SECTIONS and "->" not in line:
            section = header.group(1)
            if section in values or (section == "delta" and delta_rows):
                raise TmSyntaxError(f"duplicate section {section!r}", lineno)
            rest = header.group(2).split()
            if section == "delta":
                if rest:
                    raise TmSyntaxError("delta rows go on their own lines", lineno,
                                        raw.index(":") + 2)
                values["delta"] = True
            else:
                values[section] = (rest, lineno)
            continue
        if header and "->" not in line:
            raise TmSyntaxError(f"unknown section {header.group(1)!r}", lineno)
        if section != "delta":
            raise TmSyntaxError("expected a section header", lineno, raw.index(line[0]) + 1)
        row = _ROW.match(line)
        if row is None:
            raise TmSyntaxError("expected 'state symbol -> state symbol L|R'", lineno,
                                raw.index(line[0]) + 1)
        if row.group(5) not in MOVES:
            raise TmSyntaxError(f"move must be L or R, got {row.group(5)!r}", lineno,
                                raw.rindex(row.group(5)) + 1)
        delta_rows.append((lineno, row.groups()))

    missing = [s for s in _SECTIONS if s not in values]
    if missing:
        where = 1 if not any(l.strip() for l in lines) else len(lines) + 1
        raise TmSyntaxError(f"missing section(s): {', '.join(missing)}", where)

    def single(name):
        tokens, lineno = values[name]
        if len(tokens) != 1:
            raise TmSyntaxError(f"{name}: expects exactly one value", lineno)
        return tokens[0]

    transitions, locations = {}, {}
    for lineno, (q, s, q2, s2, move) in delta_rows:
        key = (q, _from_file(s))
        if key in transitions:
            raise DuplicateIdentifier(f"duplicate transition for ({q}, {s})", lineno)
        transitions[key] = Transition(q2, _from_file(s2), move)
        locations[key] = lineno

    spec = TmSpec(
        states=tuple(values["states"][0]),
        alphabet=tuple(_from_file(t) for t in values["alphabet"][0]),
        transitions=transitions,
        start_state=single("start"),
        accept_state=single("accept"),
        blank=_from_file(single("blank")),
    )
    return validate(spec, locations)


def parse_spec_file(path):
    return parse_spec(Path(path).read_text())


def serialize_spec(spec):
    spec = validate(spec)
    out = [
        "states: " + " ".join(spec.states),
        "alphabet: " + " ".join(_to_file(s) for s in spec.alphabet),
        "blank: " + _to_file(spec.blank),
        "start: " + spec.start_state,
        "accept: " + spec.accept_state,
        "delta:",
    ]
    for (q, s), rule in spec.rules():
        out.append(f"{q} {_to_file(s)} -> {rule.next_state} {_to_file(rule.write)} {rule.move}")
    return "\n".join(out) + "\n"
