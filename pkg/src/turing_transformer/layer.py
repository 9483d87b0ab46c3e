"""Single-layer transformer forward pass under uniform write quantization.

Every matrix product, activation, residual add and the post-layer cleanup is
followed by a quantized write onto the grid of ``levels`` evenly spaced values
on ``[-C, C]``.  Alongside the forward pass, :func:`layer_error_bound`
propagates a worst-case bound on how far the quantized result can drift from
the exact one for the same input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch


@dataclass(frozen=True)
class QuantizationConfig:
    """``levels=None`` means exact float64 arithmetic."""

    levels: int | None = None
    dynamic_range: float = 16.0

    def __post_init__(self):
        if self.levels is not None and self.levels < 2:
            raise ValueError("levels must be >= 2")
        if not self.dynamic_range > 0:
            raise ValueError("dynamic_range must be positive")

    @property
    def enabled(self):
        return self.levels is not None

    @property
    def step(self):
        """Grid spacing ``2C/(Q-1)``."""
        return 2.0 * self.dynamic_range / (self.levels - 1) if self.enabled else 0.0

    @property
    def max_error(self):
        """Largest rounding error of one write, ``C/(Q-1)``."""
        return self.dynamic_range / (self.levels - 1) if self.enabled else 0.0


UNQUANTIZED = QuantizationConfig()


@dataclass
class WriteLog:
    """Tally of quantized writes and of values clamped to the dynamic range."""

    writes: int = 0
    saturations: int = 0

    def reset(self):
        self.writes = 0
        self.saturations = 0


def quantize(x, qc, log=None):
    """Round ``x`` to the nearest grid value, clamping to ``[-C, C]`` first."""
    x = np.asarray(x, dtype=float)
    if log is not None:
        log.writes += x.size
    if not qc.enabled:
        return x.copy() if x.ndim else float(x)
    c = qc.dynamic_range
    clipped = np.clip(x, -c, c)
    if log is not None:
        log.saturations += int(np.count_nonzero(clipped != x))
    out = -c + np.rint((clipped + c) / qc.step) * qc.step
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class FfnWeights:
    W1: np.ndarray  # (h, d)
    b1: np.ndarray  # (h,)
    W2: np.ndarray  # (d, h)
    b2: np.ndarray  # (d,)

    @property
    def hidden(self):
        return self.W1.shape[0]


@dataclass(frozen=True)
class Canonicalizer:
    """Fixed post-layer cleanup ``h -> h / divisor + offset``.

    A zero divisor zeroes that coordinate.  Division rather than
    multiplication by the reciprocal keeps dyadic values exact.
    """

    divisor: np.ndarray  # (k+1, d)
    offset: np.ndarray  # (k+1, d)

    def __call__(self, h):
        keep = self.divisor != 0
        out = np.zeros_like(h)
        np.divide(h, self.divisor, out=out, where=keep)
        return out + self.offset


@dataclass(frozen=True)
class LayerWeights:
    mask: np.ndarray  # (n, n) over {0, -inf}
    W_Q: np.ndarray
    W_K: np.ndarray
    W_V: np.ndarray
    ffn: FfnWeights
    canonicalize: Canonicalizer | None = field(default=None)

    def __post_init__(self):
        m = self.mask
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch("mask must be square")
        if np.any(np.diag(m) != 0):
            raise ValueError("mask diagonal must be 0")


def _check(X, d):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != d:
        raise DimensionMismatch(f"expected (n, {d}) hidden state, got {X.shape}")
    return X


def masked_softmax(scores, mask):
    """Row-wise softmax over the entries where ``mask == 0``.

    Masked entries are excluded from the normalisation and get weight 0.0
    exactly, rather than being pushed down by a large negative number.
    """
    allowed = mask == 0
    weights = np.zeros_like(scores)
    for i in range(scores.shape[0]):
        s = scores[i, allowed[i]]
        e = np.exp(s - s.max())
        weights[i, allowed[i]] = e / e.sum()
    return weights


def masked_attention(X, weights, qc=UNQUANTIZED, log=None, return_weights=False):
    d = weights.W_Q.shape[0]
    X = _check(X, d)
    n = X.shape[0]
    if weights.mask.shape != (n, n):
        raise DimensionMismatch(f"mask is {weights.mask.shape}, sequence has {n} tokens")
    q = quantize(X @ weights.W_Q, qc, log)
    k = quantize(X @ weights.W_K, qc, log)
    v = quantize(X @ weights.W_V, qc, log)
    allowed = weights.mask == 0
    scores = np.where(allowed, q @ k.T / np.sqrt(d), 0.0)
    scores[allowed] = quantize(scores[allowed], qc, log)
    a = masked_softmax(scores, weights.mask)
    a[allowed] = quantize(a[allowed], qc, log)
    out = quantize(a @ v, qc, log)
    return (out, a) if return_weights else out


def ffn_forward(u, ffn, qc=UNQUANTIZED, log=None):
    """``W2 relu(W1 u + b1) + b2`` on a vector or on each row of a matrix."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != ffn.W1.shape[1]:
        raise DimensionMismatch(f"input width {u.shape[-1]} != {ffn.W1.shape[1]}")
    z = quantize(u @ ffn.W1.T + ffn.b1, qc, log)
    act = quantize(np.maximum(z, 0.0), qc, log)
    return quantize(act @ ffn.W2.T + ffn.b2, qc, log)


def layer_forward(X, weights, qc=UNQUANTIZED, log=None):
    """Attention with residual, per-token FFN with residual, then cleanup."""
    X = _check(X, weights.W_Q.shape[0])
    u = quantize(X + masked_attention(X, weights, qc, log), qc, log)
    h = quantize(u + ffn_forward(u, weights.ffn, qc, log), qc, log)
    if weights.canonicalize is not None:
        h = quantize(weights.canonicalize(h), qc, log)
    return h


def layer_error_bound(X, weights, qc):
    """Per-coordinate bound on ``|layer_forward(X, qc) - layer_forward(X, exact)|``.

    Each quantized write adds ``C/(Q-1)``; linear maps carry bounds through
    ``|W|``, ReLU is 1-Lipschitz and the masked softmax moves at most
    ``2 * max|score error|`` of probability mass.  Valid while no value is
    clamped.  Returns a (k+1, d) array; zero when ``qc`` is exact.
    """
    X = _check(X, weights.W_Q.shape[0])
    if not qc.enabled:
        return np.zeros_like(X)
    # values halfway between grid points round with error exactly C/(Q-1);
    # the slack absorbs the float64 evaluation of that tie
    dq = qc.max_error * (1 + 1e-9)
    d = X.shape[1]
    aw = np.abs

    # the quantized forward values are needed for the product terms
    q = quantize(X @ weights.W_Q, qc)
    k = quantize(X @ weights.W_K, qc)
    v = quantize(X @ weights.W_V, qc)
    e_q = e_k = e_v = np.full_like(X, dq)
    allowed = weights.mask == 0
    e_s = (aw(q) @ e_k.T + e_q @ aw(k).T + e_q @ e_k.T) / np.sqrt(d) + dq
    scores = np.where(allowed, q @ k.T / np.sqrt(d), 0.0)
    scores[allowed] = quantize(scores[allowed], qc)
    a = masked_softmax(scores, weights.mask)
    a[allowed] = quantize(a[allowed], qc)
    row_shift = 2.0 * np.max(np.where(allowed, e_s, 0.0), axis=1, keepdims=True)
    e_a = np.where(allowed, np.minimum(row_shift, 1.0) + dq, 0.0)
    e_o = aw(a) @ e_v + e_a @ aw(v) + e_a @ e_v + dq

    e_u = e_o + dq  # X itself is shared by both paths
    ffn = weights.ffn
    e_z = e_u @ aw(ffn.W1).T + dq
    e_act = e_z + dq
    e_f = e_act @ aw(ffn.W2).T + dq
    e_h = e_u + e_f + dq
    if weights.canonicalize is not None:
        c = weights.canonicalize
        e_h = np.divide(e_h, aw(c.divisor), out=np.zeros_like(e_h), where=c.divisor != 0) + dq
    return e_h
