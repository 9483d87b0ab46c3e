"""Synthesize transformer weights that execute one machine step per layer.

The compiled layer works on the encoding from :mod:`.encoding`:

* attention: rows 0 and ``i_h`` may see each other and themselves, every
  other row only itself.  Query/key projections are zero, so the two live
  entries of rows 0 and ``i_h`` each get weight exactly 1/2.  After the
  residual, token 0 holds ``1.5 e(q) + 0.5 e(g)`` and token ``i_h`` holds
  ``0.5 e(q) + 1.5 e(g)``; both carry ``2 p(center)``.
* FFN: per rule ``(q, g)`` one state neuron and one symbol neuron, both
  keyed on ``2 e(q) + 2 e(g) + p(center)`` with bias ``-5.5``.  On a match the
  pre-activation is 0.5 at tokens 0 and ``i_h`` and at most -0.5 anywhere
  else.  Output columns are ``3 (e(q') - e(q))`` and ``3 (e(g') - e(g))``.
  ``d`` pass-through neurons complete the hidden width and write nothing.
* cleanup: token 0 keeps its state block / 1.5, token ``i_h`` its symbol
  block / 1.5, other tokens their symbol block / 2; positional codes are
  rewritten.

Head movement is not part of the network; :func:`simulate` decodes, moves
the head and shifts the window, reading entering cells from a shadow tape.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .encoding import EmbeddingLayout, decode, encode, hamming, layout
from .errors import AmbiguousArgmax
from .layer import (
    UNQUANTIZED,
    Canonicalizer,
    FfnWeights,
    LayerWeights,
    WriteLog,
    layer_error_bound,
    layer_forward,
    quantize,
)
from .tm import (
    MOVES,
    TapeConfiguration,
    WindowView,
    check_window,
    initial_configuration,
    run,
    validate,
    window,
    write_cell,
)

KEY_WEIGHT = 2.0
POSITION_WEIGHT = 1.0
NEURON_BIAS = -5.5
UPDATE_GAIN = 3.0


def head_index(k):
    return k // 2 + 1


def build_attention_mask(k):
    check_window(k)
    ih = head_index(k)
    mask = np.full((k + 1, k + 1), -np.inf)
    np.fill_diagonal(mask, 0.0)
    mask[0, ih] = mask[ih, 0] = 0.0
    return mask


def build_ffn_weights(spec, lay: EmbeddingLayout):
    spec = validate(spec)
    rules = spec.rules()
    n = len(rules)
    d = lay.d
    h = 2 * n + d
    W1 = np.zeros((h, d))
    b1 = np.zeros(h)
    W2 = np.zeros((d, h))
    center = lay.position_coord(0)
    for i, ((q, g), rule) in enumerate(rules):
        for neuron in (i, n + i):
            W1[neuron, lay.state_coord(q)] = KEY_WEIGHT
            W1[neuron, lay.symbol_coord(g)] = KEY_WEIGHT
            W1[neuron, center] = POSITION_WEIGHT
            b1[neuron] = NEURON_BIAS
        W2[lay.state_coord(rule.next_state), i] += UPDATE_GAIN
        W2[lay.state_coord(q), i] -= UPDATE_GAIN
        W2[lay.symbol_coord(rule.write), n + i] += UPDATE_GAIN
        W2[lay.symbol_coord(g), n + i] -= UPDATE_GAIN
    W1[2 * n:, :] = np.eye(d)
    return FfnWeights(W1, b1, W2, np.zeros(d))


def build_canonicalizer(lay: EmbeddingLayout):
    n, d = lay.n_tokens, lay.d
    ih = lay.head_token
    divisor = np.zeros((n, d))
    divisor[0, lay.state_block] = 1.5
    divisor[1:, lay.symbol_block] = 2.0
    divisor[ih, lay.symbol_block] = 1.5
    offset = np.zeros((n, d))
    offset[:, lay.position_block] = lay.positional_codes()
    return Canonicalizer(divisor, offset)


@dataclass(frozen=True)
class CompiledProgram:
    spec: object
    layout: EmbeddingLayout
    weights: LayerWeights
    qc: object = UNQUANTIZED

    @property
    def k(self):
        return self.layout.k

    @property
    def n_trans(self):
        return self.spec.n_transitions

    @property
    def hidden(self):
        return self.weights.ffn.hidden

    def with_quantization(self, qc):
        return CompiledProgram(self.spec, self.layout, self.weights, qc)


def compile_machine(spec, k, qc=UNQUANTIZED):
    spec = validate(spec)
    lay = layout(spec, k)
    d = lay.d
    weights = LayerWeights(
        mask=build_attention_mask(k),
        W_Q=np.zeros((d, d)),
        W_K=np.zeros((d, d)),
        W_V=np.eye(d),
        ffn=build_ffn_weights(spec, lay),
        canonicalize=build_canonicalizer(lay),
    )
    return CompiledProgram(spec, lay, weights, qc)


def _fmt(x):
    return "%.17g" % x


def dump_weights(program):
    """Sectioned text dump (mask, W1, b1, W2, b2), row-major, 17 significant digits."""
    w = program.weights
    out = []
    for name, arr in (("mask", w.mask), ("W1", w.ffn.W1), ("b1", w.ffn.b1),
                      ("W2", w.ffn.W2), ("b2", w.ffn.b2)):
        arr = np.atleast_2d(arr)
        out.append(f"{name} {arr.shape[0]} {arr.shape[1]}")
        out.extend(" ".join(_fmt(v) for v in row) for row in arr)
    return "\n".join(out) + "\n"


# --- simulation -------------------------------------------------------------


@dataclass
class StepRecord:
    step: int
    decoded: WindowView | None
    reference: WindowView
    distance: float
    saturations: int = 0
    layer_deviation: float = 0.0
    layer_bound: float = 0.0
    n_ops: float = 0.0
    writes: int = 0  # quantized writes since the start of the run
    note: str = ""

    @property
    def agreement(self):
        return self.decoded == self.reference

    @property
    def hamming(self):
        if self.decoded is None:
            return self.reference.k + 1
        return hamming(self.decoded, self.reference)


@dataclass
class SimTrace:
    records: list
    final: TapeConfiguration | None = None
    halted: bool = False
    diverged: bool = False
    hidden: np.ndarray | None = field(default=None, repr=False)

    @property
    def first_disagreement(self):
        """Index of the first step whose decoded window differs, or None."""
        for rec in self.records:
            if not rec.agreement:
                return rec.step
        return None

    @property
    def all_agree(self):
        return self.first_disagreement is None

    @property
    def first_saturation(self):
        for rec in self.records:
            if rec.saturations:
                return rec.step
        return None

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["step", "agreement", "distance", "saturations",
                     "layer_deviation", "layer_error_bound", "writes", "hamming"])
        for r in self.records:
            wr.writerow([r.step, int(r.agreement), _fmt(r.distance), r.saturations,
                         _fmt(r.layer_deviation), _fmt(r.layer_bound), r.writes, r.hamming])
        return buf.getvalue()


class _Runner:
    """Carries the hidden state, shadow tape and head between layer applications."""

    def __init__(self, program, config):
        self.program = program
        self.spec = program.spec
        self.lay = program.layout
        self.blank = self.spec.blank
        self.tape = dict(config.tape)
        self.head = config.head
        self.log = WriteLog()
        self.H = quantize(encode(window(config, self.lay.k, self.blank), self.lay),
                          program.qc, self.log)
        self.total_writes = self.log.writes

    def decoded(self):
        return decode(self.H, self.lay)

    def configuration(self):
        view = self.decoded()
        tape = self.tape
        half = self.lay.k // 2
        for i, sym in enumerate(view.symbols):
            tape = write_cell(tape, self.head - half + i, sym, self.blank)
        return TapeConfiguration(view.state, tape, self.head)

    def step(self):
        """Apply the layer and recenter.  Returns (deviation, bound)."""
        lay, qc, w = self.lay, self.program.qc, self.program.weights
        before = self.decoded()
        rule = self.spec.transitions.get((before.state, before.head_symbol))
        if rule is None:
            raise AmbiguousArgmax(f"no rule for ({before.state}, {before.head_symbol})")
        self.log.reset()
        H1 = layer_forward(self.H, w, qc, self.log)
        if qc.enabled:
            exact = layer_forward(self.H, w, UNQUANTIZED)
            deviation = float(np.max(np.abs(H1 - exact)))
            bound = float(np.max(layer_error_bound(self.H, w, qc)))
        else:
            deviation = bound = 0.0
        after = decode(H1, lay)
        half = lay.k // 2
        self.tape = write_cell(self.tape, self.head, after.head_symbol, self.blank)

        move = MOVES[rule.move]
        content = slice(0, lay.n_states + lay.n_symbols)
        H2 = H1.copy()
        if move > 0:
            leaving, leaving_cell = 1, self.head - half
            H2[1:lay.k, content] = H1[2:, content]
            entering, entering_cell = lay.k, self.head + 1 + half
        else:
            leaving, leaving_cell = lay.k, self.head + half
            H2[2:, content] = H1[1:lay.k, content]
            entering, entering_cell = 1, self.head - 1 - half
        self.tape = write_cell(self.tape, leaving_cell, after.symbols[leaving - 1], self.blank)
        fresh = np.zeros(lay.d)
        fresh[lay.symbol_coord(self.tape.get(entering_cell, self.blank))] = 1.0
        H2[entering, content] = quantize(fresh[content], qc, self.log)
        self.H = H2
        self.head += move
        self.total_writes += self.log.writes
        return deviation, bound


def _record(step, runner, ref_config, spec, lay, deviation=0.0, bound=0.0):
    ref_view = window(ref_config, lay.k, spec.blank)
    try:
        decoded, note = runner.decoded(), ""
    except AmbiguousArgmax as exc:
        decoded, note = None, str(exc)
    distance = float(np.max(np.abs(runner.H - encode(ref_view, lay))))
    qc = runner.program.qc
    return StepRecord(
        step=step,
        decoded=decoded,
        reference=ref_view,
        distance=distance,
        saturations=runner.log.saturations,
        layer_deviation=deviation,
        layer_bound=bound,
        n_ops=bound / qc.max_error if qc.enabled else 0.0,
        writes=runner.total_writes,
        note=note,
    )


def simulate(program, input_symbols, steps):
    """Run the compiled layer ``steps`` times and compare against the interpreter.

    ``input_symbols`` is an input string/sequence or a starting
    :class:`TapeConfiguration`.  The run stops early when the decoded state is
    the accept state or when decoding fails (recorded as a divergence).
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    spec, lay = program.spec, program.layout
    start = (input_symbols if isinstance(input_symbols, TapeConfiguration)
             else initial_configuration(spec, input_symbols))
    ref = run(spec, start, steps)
    runner = _Runner(program, start)
    records = [_record(0, runner, ref[0], spec, lay)]
    diverged = records[0].decoded is None
    halted = False
    for s in range(1, steps + 1):
        if diverged:
            break
        if records[-1].decoded.state == spec.accept_state:
            halted = True
            break
        try:
            deviation, bound = runner.step()
        except AmbiguousArgmax as exc:
            ref_config = ref[min(s, len(ref) - 1)]
            rec = StepRecord(s, None, window(ref_config, lay.k, spec.blank), float("inf"),
                             runner.log.saturations, note=str(exc))
            records.append(rec)
            diverged = True
            break
        rec = _record(s, runner, ref[min(s, len(ref) - 1)], spec, lay, deviation, bound)
        records.append(rec)
        diverged = rec.decoded is None
    else:
        halted = not diverged and records[-1].decoded.state == spec.accept_state
    final = None if diverged else runner.configuration()
    return SimTrace(records, final, halted, diverged, runner.H)


def run_from(program, config, steps):
    """Simulate from a decoded configuration; used for round hand-offs."""
    return simulate(program, config, steps)
