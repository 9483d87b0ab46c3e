import pytest
from hypothesis import given, settings, strategies as st

from turing_transformer import machines
from turing_transformer.errors import (
    EvenWindow,
    MissingTransition,
    SteppedAcceptingState,
    TmSyntaxError,
    UnknownStateInTransition,
    UnknownSymbolInTransition,
)
from turing_transformer.tm import (
    BLANK,
    TapeConfiguration,
    TmSpec,
    Transition,
    parse_spec,
    parse_spec_file,
    run,
    serialize_spec,
    step,
    validate,
    window,
)


def increment_spec(**overrides):
    fields = dict(
        states=("q0", "qacc"),
        alphabet=(BLANK, "1"),
        transitions={("q0", "1"): ("q0", "1", "R"), ("q0", BLANK): ("qacc", "1", "R")},
        start_state="q0",
        accept_state="qacc",
    )
    fields.update(overrides)
    return TmSpec(**fields)


def test_validate_accepts_increment():
    spec = validate(increment_spec())
    assert spec.state_index == {"q0": 0, "qacc": 1}
    assert spec.symbol_index[BLANK] == 0


def test_missing_row():
    with pytest.raises(MissingTransition):
        validate(increment_spec(transitions={("q0", "1"): ("q0", "1", "R")}))


def test_unknown_written_symbol():
    bad = {("q0", "1"): ("q0", "Z", "R"), ("q0", BLANK): ("qacc", "1", "R")}
    with pytest.raises(UnknownSymbolInTransition):
        validate(increment_spec(transitions=bad))


def test_step_single_rule(inc):
    out = step(inc, TapeConfiguration("q0", {0: "1"}, 0))
    assert out == TapeConfiguration("q0", {0: "1"}, 1)


def test_step_reads_blank_by_default(inc):
    assert step(inc, TapeConfiguration("q0", {}, 0)) == TapeConfiguration("qacc", {0: "1"}, 1)


def test_step_on_accept_raises(inc):
    with pytest.raises(SteppedAcceptingState):
        step(inc, TapeConfiguration("qacc", {}, 0))


def test_run_increment(inc):
    trace = run(inc, "111", 10)
    assert trace.halted and trace.steps == 4
    assert trace.final.tape_string() == "1111"


def test_run_zero_budget(inc):
    trace = run(inc, "111", 0)
    assert len(trace) == 1 and not trace.halted


def test_self_loop_never_halts():
    spec = TmSpec(("q0", "qacc"), (BLANK,), {("q0", BLANK): ("q0", BLANK, "R")}, "q0", "qacc")
    trace = run(spec, "", 5)
    assert len(trace) == 6 and not trace.halted


def test_window_blank_fill():
    view = window(TapeConfiguration("q0", {0: "1", 1: "0"}, 0), 3)
    assert view.state == "q0" and view.symbols == (BLANK, "1", "0")


def test_window_empty_tape():
    assert window(TapeConfiguration("q0", {}, 7), 5).symbols == (BLANK,) * 5


def test_even_window():
    with pytest.raises(EvenWindow):
        window(TapeConfiguration("q0"), 4)


@pytest.mark.parametrize("name", sorted(machines.SOURCES))
def test_round_trip_serializer(name):
    spec = machines.load(name)
    assert parse_spec(serialize_spec(spec)) == spec


def test_parse_file(tmp_path, inc):
    path = tmp_path / "inc.tm"
    path.write_text(serialize_spec(inc))
    assert parse_spec_file(path).n_states == 2


def test_parse_unknown_state_has_row():
    text = machines.UNARY_INCREMENT.replace("q0 _ -> qacc 1 R", "q0 _ -> qzz 1 R")
    with pytest.raises(UnknownStateInTransition) as err:
        parse_spec(text)
    assert err.value.line == 9


def test_parse_empty_file():
    with pytest.raises(TmSyntaxError) as err:
        parse_spec("")
    assert err.value.line == 1


def test_parse_bad_move_column():
    text = machines.UNARY_INCREMENT.replace("q0 1 -> q0 1 R", "q0 1 -> q0 1 X")
    with pytest.raises(TmSyntaxError) as err:
        parse_spec(text)
    assert (err.value.line, err.value.column) == (8, 14)


def test_transition_rejects_bad_move():
    with pytest.raises(ValueError):
        Transition("q0", "1", "U")


# properties over every bundled machine and random inputs

names = st.sampled_from(sorted(machines.SOURCES))


def inputs_for(spec):
    symbols = [s for s in spec.alphabet if s != spec.blank]
    return st.lists(st.sampled_from(symbols), max_size=8).map("".join)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_step_locality_and_determinism(data):
    spec = machines.load(data.draw(names))
    n = data.draw(st.integers(0, 30))
    trace = run(spec, data.draw(inputs_for(spec)), n)
    for before, after in zip(trace.configs, trace.configs[1:]):
        assert step(spec, before) == after
        assert abs(after.head - before.head) == 1
        changed = {c for c in set(before.tape) | set(after.tape)
                   if before.read(c) != after.read(c)}
        assert changed <= {before.head}


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_run_prefix_extension(data):
    spec = machines.load(data.draw(names))
    x = data.draw(inputs_for(spec))
    n = data.draw(st.integers(0, 40))
    short, longer = run(spec, x, n), run(spec, x, n + 1)
    if short.halted:
        assert longer.configs == short.configs
    else:
        assert longer.configs[:-1] == short.configs and len(longer) == len(short) + 1
