import itertools

import numpy as np
import pytest

from turing_transformer import machines
from turing_transformer.compiler import (
    NEURON_BIAS,
    build_attention_mask,
    compile_machine,
    dump_weights,
    head_index,
    simulate,
)
from turing_transformer.encoding import decode, encode
from turing_transformer.layer import QuantizationConfig, UNQUANTIZED, layer_forward, masked_attention
from turing_transformer.tm import TapeConfiguration, TmSpec, WindowView, step, window, BLANK


def zeros_of(mask):
    return {tuple(ix) for ix in np.argwhere(mask == 0)}


def test_mask_k3():
    assert head_index(3) == 2
    assert zeros_of(build_attention_mask(3)) == {(0, 2), (2, 0), (0, 0), (1, 1), (2, 2), (3, 3)}


def test_mask_k1():
    assert zeros_of(build_attention_mask(1)) == {(0, 1), (1, 0), (0, 0), (1, 1)}


@pytest.mark.parametrize("k", [1, 3, 5, 7, 9])
def test_mask_rows_have_a_zero(k):
    assert np.all((build_attention_mask(k) == 0).any(axis=1))


def test_sizes(inc_program, bundled):
    # 2 states, 2 symbols, k=3
    assert (inc_program.layout.d, inc_program.hidden) == (7, 2 * 2 + 7)
    flip = compile_machine(bundled["bit_flip"], 5)
    assert flip.layout.d == 11 and flip.hidden == 2 * 6 + 11


def test_compile_deterministic(inc):
    assert dump_weights(compile_machine(inc, 3)) == dump_weights(compile_machine(inc, 3))


@pytest.mark.parametrize("name", sorted(machines.SOURCES))
def test_weight_structure(name):
    prog = compile_machine(machines.load(name), 3)
    ffn, n, d = prog.weights.ffn, prog.n_trans, prog.layout.d
    rule_rows = np.count_nonzero(ffn.W1[:2 * n], axis=1)
    assert np.all(rule_rows == 3)  # state, symbol and centre position
    assert np.array_equal(ffn.W1[2 * n:], np.eye(d))
    assert not ffn.W2[:, 2 * n:].any()
    assert np.all(np.count_nonzero(ffn.W2[:, :2 * n], axis=0) <= 2)


def test_attention_mixes_state_and_head_tokens(inc_program):
    lay = inc_program.layout
    X = encode(WindowView("q0", ("1", "1", BLANK)), lay)
    out = masked_attention(X, inc_program.weights)
    ih = lay.head_token
    half = 0.5 * (X[0] + X[ih])
    assert np.array_equal(out[0], half) and np.array_equal(out[ih], half)
    others = [i for i in range(lay.n_tokens) if i not in (0, ih)]
    assert np.array_equal(out[others], X[others])


def preactivations(prog, view):
    X = encode(view, prog.layout)
    u = X + masked_attention(X, prog.weights)
    ffn = prog.weights.ffn
    return u, u @ ffn.W1.T + ffn.b1


def test_matching_neuron_fires_half(inc_program):
    spec, n = inc_program.spec, inc_program.n_trans
    for i, ((q, g), _) in enumerate(spec.rules()):
        view = WindowView(q, ("1", g, "1"))
        _, z = preactivations(inc_program, view)
        ih = inc_program.layout.head_token
        for tok in (0, ih):
            assert z[tok, i] == 0.5 and z[tok, n + i] == 0.5


def test_non_matching_neurons_are_off(bundled):
    for spec in bundled.values():
        prog = compile_machine(spec, 3)
        n = prog.n_trans
        for q in spec.states:
            for syms in itertools.product(spec.alphabet, repeat=3):
                _, z = preactivations(prog, WindowView(q, syms))
                for i, ((rq, rg), _) in enumerate(spec.rules()):
                    for tok in range(prog.layout.n_tokens):
                        fires = tok in (0, prog.layout.head_token) and (rq, rg) == (q, syms[1])
                        if not fires:
                            assert z[tok, i] <= -0.5 and z[tok, n + i] <= -0.5
    assert NEURON_BIAS == -5.5


def test_state_update_after_cleanup(inc_program):
    lay = inc_program.layout
    for (q, g), rule in inc_program.spec.rules():
        view = WindowView(q, ("1", g, "1"))
        out = layer_forward(encode(view, lay), inc_program.weights)
        assert decode(out, lay) == WindowView(rule.next_state, ("1", rule.write, "1"))
        assert np.array_equal(out, encode(decode(out, lay), lay))


@pytest.mark.parametrize("name", sorted(machines.SOURCES))
def test_layer_matches_step_on_every_window(name):
    spec = machines.load(name)
    prog = compile_machine(spec, 3)
    for q in spec.states:
        if q == spec.accept_state:
            continue
        for syms in itertools.product(spec.alphabet, repeat=3):
            cfg = TapeConfiguration(q, {i - 1: s for i, s in enumerate(syms) if s != spec.blank}, 0)
            nxt = step(spec, cfg)
            expect = WindowView(nxt.state, window(cfg, 3, spec.blank).symbols[:1]
                                + (nxt.read(0, spec.blank),) + syms[2:])
            assert decode(layer_forward(encode(WindowView(q, syms), prog.layout), prog.weights),
                          prog.layout) == expect


def test_identity_machine_is_fixed_point():
    spec = TmSpec(("q", "acc"), (BLANK, "1"),
                  {("q", BLANK): ("q", BLANK, "R"), ("q", "1"): ("q", "1", "R")}, "q", "acc")
    prog = compile_machine(spec, 3)
    for syms in itertools.product(spec.alphabet, repeat=3):
        X = encode(WindowView("q", syms), prog.layout)
        assert decode(layer_forward(X, prog.weights), prog.layout) == decode(X, prog.layout)


def test_fine_quantization_decodes_like_exact(bundled):
    spec = bundled["bit_flip"]
    exact = compile_machine(spec, 3)
    fine = exact.with_quantization(QuantizationConfig(2**16, 4.0))
    for q in spec.states:
        for syms in itertools.product(spec.alphabet, repeat=3):
            X = encode(WindowView(q, syms), exact.layout)
            a = decode(layer_forward(X, exact.weights), exact.layout)
            b = decode(layer_forward(X, fine.weights, fine.qc), exact.layout)
            assert a == b


def test_simulate_increment(inc_program):
    trace = simulate(inc_program, "111", 10)
    assert trace.all_agree and trace.halted
    assert trace.final.tape_string(inc_program.spec.blank) == "1111"


def test_simulate_zero_steps(inc_program):
    trace = simulate(inc_program, "111", 0)
    assert len(trace.records) == 1 and trace.records[0].distance == 0.0


def test_coarser_grid_fails_no_later(bundled):
    spec = bundled["three_state_loop"]
    horizon = []
    for q in (2**3, 2**4):
        trace = simulate(compile_machine(spec, 3, QuantizationConfig(q)), "", 50)
        first = trace.first_disagreement
        assert first is not None
        horizon.append(first)
    assert horizon[0] <= horizon[1]


def test_trace_csv_header(inc_program):
    head = simulate(inc_program, "1", 2).to_csv().splitlines()[0]
    assert head == "step,agreement,distance,saturations,layer_deviation,layer_error_bound,writes,hamming"
