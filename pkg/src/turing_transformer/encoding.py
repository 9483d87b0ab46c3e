"""One-hot encoding of a machine window into a token sequence, and its inverse.

Each token is ``d = n_states + n_symbols + k`` wide: a state block, a symbol
block and a one-hot positional block over the ``k`` window offsets.  Token 0
carries the state and reuses the positional code of the head cell; tokens
``1..k`` carry the window symbols.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousArgmax, DimensionMismatch, UnknownSymbol
from .tm import WindowView, check_window, validate


@dataclass(frozen=True)
class EmbeddingLayout:
    states: tuple
    alphabet: tuple
    k: int

    def __post_init__(self):
        check_window(self.k)

    @property
    def n_states(self):
        return len(self.states)

    @property
    def n_symbols(self):
        return len(self.alphabet)

    @property
    def d_p(self):
        return self.k

    @property
    def d(self):
        return self.n_states + self.n_symbols + self.d_p

    @property
    def n_tokens(self):
        return self.k + 1

    @property
    def state_block(self):
        return slice(0, self.n_states)

    @property
    def symbol_block(self):
        return slice(self.n_states, self.n_states + self.n_symbols)

    @property
    def position_block(self):
        return slice(self.n_states + self.n_symbols, self.d)

    @property
    def head_token(self):
        """Sequence index ``i_h`` of the token under the head."""
        return self.k // 2 + 1

    def state_coord(self, state):
        return self.states.index(state)

    def symbol_coord(self, symbol):
        return self.n_states + self.alphabet.index(symbol)

    def position_coord(self, token):
        """Coordinate of the positional one-hot for sequence index ``token``."""
        offset = self.k // 2 if token == 0 else token - 1
        return self.n_states + self.n_symbols + offset

    def positional_codes(self):
        """(k+1, d_p) matrix of the canonical positional block of every token."""
        codes = np.zeros((self.n_tokens, self.d_p))
        codes[0, self.k // 2] = 1.0
        codes[1:, :] = np.eye(self.k)
        return codes


def layout(spec, k):
    spec = validate(spec)
    return EmbeddingLayout(spec.states, spec.alphabet, k)


def encode(view, lay):
    if view.k != lay.k:
        raise DimensionMismatch(f"window has {view.k} cells, layout expects {lay.k}")
    if view.state not in lay.states:
        raise UnknownSymbol(f"unknown state {view.state!r}")
    x = np.zeros((lay.n_tokens, lay.d))
    x[0, lay.state_coord(view.state)] = 1.0
    for i, symbol in enumerate(view.symbols, start=1):
        if symbol not in lay.alphabet:
            raise UnknownSymbol(f"unknown symbol {symbol!r}")
        x[i, lay.symbol_coord(symbol)] = 1.0
    x[:, lay.position_block] = lay.positional_codes()
    return x


def _argmax_unique(values, token):
    best = np.max(values)
    hits = np.flatnonzero(values == best)
    if len(hits) != 1:
        raise AmbiguousArgmax(f"token {token}: {len(hits)}-way tie at value {best!r}")
    return int(hits[0])


def decode(seq, lay):
    """Invert :func:`encode` by per-block argmax.

    Scaling a token or perturbing it by less than half the gap between its
    two largest block coordinates does not change the result.
    """
    seq = np.asarray(seq, dtype=float)
    if seq.shape != (lay.n_tokens, lay.d):
        raise DimensionMismatch(f"expected shape {(lay.n_tokens, lay.d)}, got {seq.shape}")
    state = lay.states[_argmax_unique(seq[0, lay.state_block], 0)]
    symbols = tuple(
        lay.alphabet[_argmax_unique(seq[i, lay.symbol_block], i)]
        for i in range(1, lay.n_tokens)
    )
    return WindowView(state, symbols)


def hamming(a, b):
    """Number of differing cells between two windows, plus one if states differ."""
    return int(a.state != b.state) + sum(x != y for x, y in zip(a.symbols, b.symbols))
