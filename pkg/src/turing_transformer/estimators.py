"""scikit-learn style wrappers.

:class:`TuringMachineTransformer` compiles a machine in ``fit``; ``transform``
applies the compiled layer to flattened encoded windows and ``predict`` runs
whole inputs to their final tapes.  :class:`EmpiricalRademacher` estimates
Rademacher complexity from a function-value table.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .bounds import empirical_rademacher
from .compiler import compile_machine, simulate
from .layer import QuantizationConfig, layer_forward
from .machines import SOURCES, load
from .tm import TmSpec


def resolve_machine(tm):
    if isinstance(tm, TmSpec):
        return tm
    if isinstance(tm, str) and tm in SOURCES:
        return load(tm)
    raise ValueError(f"tm must be a TmSpec or one of {sorted(SOURCES)}, got {tm!r}")


class TuringMachineTransformer(TransformerMixin, BaseEstimator):
    """One compiled transformer layer per machine step.

    Parameters
    ----------
    tm : TmSpec or str
        Machine to compile, or the name of a bundled one.
    k : int
        Odd window size.
    levels : int or None
        Quantization levels; ``None`` for exact arithmetic.
    dynamic_range : float
        Quantization range ``C``.
    max_steps : int
        Step cap used by :meth:`predict`.
    """

    def __init__(self, tm="unary_increment", k=3, levels=None, dynamic_range=16.0,
                 max_steps=100):
        self.tm = tm
        self.k = k
        self.levels = levels
        self.dynamic_range = dynamic_range
        self.max_steps = max_steps

    def fit(self, X=None, y=None):
        qc = QuantizationConfig(self.levels, self.dynamic_range)
        self.program_ = compile_machine(resolve_machine(self.tm), self.k, qc)
        lay = self.program_.layout
        self.n_tokens_ = lay.n_tokens
        self.n_features_in_ = lay.n_tokens * lay.d
        return self

    def transform(self, X):
        """Apply one layer to each row of ``X``, a flattened ``(k+1, d)`` encoding."""
        check_is_fitted(self, "program_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        p = self.program_
        shape = (p.layout.n_tokens, p.layout.d)
        return np.stack([layer_forward(row.reshape(shape), p.weights, p.qc).ravel()
                         for row in X])

    def predict(self, X):
        """Final tape string for each input string in ``X``."""
        check_is_fitted(self, "program_")
        out = []
        for inp in X:
            trace = simulate(self.program_, inp, self.max_steps)
            out.append(None if trace.final is None
                       else trace.final.tape_string(self.program_.spec.blank))
        return np.array(out, dtype=object)


class EmpiricalRademacher(BaseEstimator):
    """Monte-Carlo Rademacher complexity of a finite class.

    ``fit`` takes an ``(n_samples, n_functions)`` value table and sets
    ``estimate_`` and ``stderr_``.
    """

    def __init__(self, trials=10_000, seed=0):
        self.trials = trials
        self.seed = seed

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        self.estimate_, self.stderr_ = empirical_rademacher(X, self.trials, self.seed)
        return self
