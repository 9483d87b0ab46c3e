"""Bundled test machines, stored in the on-disk spec format."""

from .tm import parse_spec

UNARY_INCREMENT = """\
# append one 1 to a unary number
states: q0 qacc
alphabet: _ 1
blank: _
start: q0
accept: qacc
delta:
q0 1 -> q0 1 R
q0 _ -> qacc 1 R
"""

BIT_FLIP = """\
# invert every bit, then walk back to the left end
states: q0 q1 qacc
alphabet: _ 0 1
blank: _
start: q0
accept: qacc
delta:
q0 0 -> q0 1 R
q0 1 -> q0 0 R
q0 _ -> q1 _ L
q1 0 -> q1 0 L
q1 1 -> q1 1 L
q1 _ -> qacc _ R
"""

# 1^n -> 1^n _ 1^n; marks each input cell with X while its copy is written.
# Rows on X that cannot be reached still exist to keep delta total.
UNARY_COPY = """\
# copy a unary string past a blank separator
states: q0 q1 q2 q3 q4 q5 qacc
alphabet: _ 1 X
blank: _
start: q0
accept: qacc
delta:
q0 1 -> q1 X R
q0 _ -> q5 _ L
q0 X -> q0 X R
q1 1 -> q1 1 R
q1 _ -> q2 _ R
q1 X -> q1 X R
q2 1 -> q2 1 R
q2 _ -> q3 1 L
q2 X -> q2 X R
q3 1 -> q3 1 L
q3 _ -> q4 _ L
q3 X -> q3 X L
q4 1 -> q4 1 L
q4 X -> q0 X R
q4 _ -> q0 _ R
q5 X -> q5 1 L
q5 _ -> qacc _ R
q5 1 -> q5 1 L
"""

TWO_SYMBOL_SHIFT = """\
# shift a string over {a, b} one cell to the right
states: s ca cb qacc
alphabet: _ a b
blank: _
start: s
accept: qacc
delta:
s a -> ca _ R
s b -> cb _ R
s _ -> qacc _ R
ca a -> ca a R
ca b -> cb a R
ca _ -> qacc a R
cb a -> ca b R
cb b -> cb b R
cb _ -> qacc b R
"""

THREE_STATE_LOOP = """\
# never halts: writes 1 0 and drifts right one cell every three steps
states: A B C qacc
alphabet: _ 0 1
blank: _
start: A
accept: qacc
delta:
A _ -> B 1 R
A 0 -> B 1 R
A 1 -> B 1 R
B _ -> C 0 R
B 0 -> C 0 R
B 1 -> C 0 R
C _ -> A _ L
C 0 -> A 0 L
C 1 -> A 1 L
"""

SOURCES = {
    "unary_increment": UNARY_INCREMENT,
    "bit_flip": BIT_FLIP,
    "unary_copy": UNARY_COPY,
    "two_symbol_shift": TWO_SYMBOL_SHIFT,
    "three_state_loop": THREE_STATE_LOOP,
}

# Inputs long enough to keep each machine busy for ~100 steps.
LONG_INPUTS = {
    "unary_increment": "1" * 99,
    "bit_flip": "01" * 25,
    "unary_copy": "1" * 7,
    "two_symbol_shift": "ab" * 50,
    "three_state_loop": "",
}

# Inputs on which the halting machines stop within 100 steps.
SHORT_INPUTS = {
    "unary_increment": "111",
    "bit_flip": "0110",
    "unary_copy": "11",
    "two_symbol_shift": "abba",
}


def load(name):
    try:
        return parse_spec(SOURCES[name])
    except KeyError:
        raise KeyError(f"no bundled machine {name!r}; choose from {sorted(SOURCES)}") from None


def all_machines():
    return {name: load(name) for name in SOURCES}
