"""Closed-form learning-theory bounds for windowed, multi-round sequence models.

All evaluators are pure functions of a :class:`ModelCapacity` and query
parameters.  The three sample-complexity bounds share one bracket of a
capacity, a mixed and a confidence term; the sequence and multi-round
versions multiply it by different Lipschitz prefactors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateLipschitz,
    EmptyClass,
    InvalidConfidence,
    InvalidRounds,
    InvalidSimplexPoint,
    NonPositiveSample,
)


@dataclass(frozen=True)
class ModelCapacity:
    b_spec: float = 1.0
    l_phi: float = 1.0
    l_max: int = 1
    r_x: float = 1.0
    k: float = 1.0
    loss_lipschitz: float = 1.0
    loss_bound: float = 1.0

    def __post_init__(self):
        for name in ("b_spec", "l_phi", "r_x", "k", "loss_lipschitz", "loss_bound"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if int(self.l_max) != self.l_max or self.l_max < 1:
            raise ValueError(f"l_max must be an integer >= 1, got {self.l_max!r}")

    @property
    def l_model(self):
        return self.b_spec * self.l_phi ** (self.l_max - 1)


@dataclass(frozen=True)
class Terms:
    capacity: float
    mixed: float
    confidence: float

    @property
    def total(self):
        return self.capacity + self.mixed + self.confidence

    def scaled(self, factor):
        return Terms(self.capacity * factor, self.mixed * factor, self.confidence * factor)


def _check_m(m):
    if not m >= 1:
        raise NonPositiveSample(f"sample size must be >= 1, got {m!r}")


def _log_inv_delta(delta):
    if not 0 < delta < 1:
        raise InvalidConfidence(f"confidence delta must lie in (0, 1), got {delta!r}")
    return -math.log(delta)


def _check_eps(eps):
    if not (eps > 0 and math.isfinite(eps)):
        raise ValueError(f"eps must be positive and finite, got {eps!r}")


def rademacher_bound(cap, m):
    _check_m(m)
    return cap.l_model * cap.r_x * math.sqrt(cap.k) / math.sqrt(m)


def generalization_bound(cap, empirical_loss, m, confidence_delta):
    """Empirical loss + 2 * Rademacher bound + ``C sqrt(log(1/delta) / 2m)``."""
    log_term = _log_inv_delta(confidence_delta)
    return (empirical_loss + 2.0 * rademacher_bound(cap, m)
            + cap.loss_bound * math.sqrt(log_term / (2.0 * m)))


def bracket(cap, confidence_delta):
    """The three-term numerator shared by every sample-complexity bound."""
    log_term = _log_inv_delta(confidence_delta)
    L, C, lm = cap.loss_lipschitz, cap.loss_bound, cap.l_model
    return Terms(
        capacity=4.0 * L**2 * lm**2 * cap.r_x**2 * cap.k,
        mixed=4.0 * L * lm * cap.r_x * C * math.sqrt(cap.k) * math.sqrt(log_term / 2.0),
        confidence=C**2 * log_term / 2.0,
    )


def sample_complexity_next_token(cap, eps, confidence_delta):
    """Required sample size for one-step prediction, with its term breakdown."""
    _check_eps(eps)
    terms = bracket(cap, confidence_delta).scaled(1.0 / eps**2)
    return terms.total, terms


def _nondegenerate(cap):
    if cap.l_model == 1:
        raise DegenerateLipschitz("model Lipschitz constant equals 1; the bound is undefined")
    return cap.l_model


def sequence_prefactor(cap, T):
    lm = _nondegenerate(cap)
    return lm ** (2 * T) / (lm - 1) ** 4


def multiround_prefactor(cap, T, R):
    lm = _nondegenerate(cap)
    if int(R) != R or not 1 <= R <= T:
        raise InvalidRounds(f"rounds must be an integer in 1..{T}, got {R!r}")
    return lm ** (2 * T / R + 2) * R**2 / (lm - 1) ** 4


def sample_complexity_sequence(cap, eps, confidence_delta, T, *, terms=False):
    _check_eps(eps)
    t = bracket(cap, confidence_delta).scaled(sequence_prefactor(cap, T) / eps**2)
    return (t.total, t) if terms else t.total


def sample_complexity_multiround(cap, eps, confidence_delta, T, R, *, terms=False):
    _check_eps(eps)
    t = bracket(cap, confidence_delta).scaled(multiround_prefactor(cap, T, R) / eps**2)
    return (t.total, t) if terms else t.total


def optimal_rounds(cap, eps, confidence_delta, T):
    """Round count in ``1..T`` minimising the multi-round bound (smallest on ties)."""
    if int(T) != T or T < 1:
        raise InvalidRounds(f"T must be an integer >= 1, got {T!r}")
    values = [sample_complexity_multiround(cap, eps, confidence_delta, T, R)
              for R in range(1, int(T) + 1)]
    return int(np.argmin(values)) + 1


# --- Monte-Carlo Rademacher complexity -------------------------------------


def empirical_rademacher(values, trials=10_000, seed=0, batch=1_000):
    """Estimate ``E_sigma sup_f (1/n) sum_i sigma_i f(x_i)`` from a value table.

    ``values`` is ``(n, n_functions)``: column ``j`` holds ``f_j`` evaluated
    at the ``n`` sample points.  Returns ``(estimate, standard_error)``.
    """
    table = np.asarray(values, dtype=float)
    if table.ndim != 2 or table.shape[0] == 0 or table.shape[1] == 0:
        raise EmptyClass("need at least one sample point and one function")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = table.shape[0]
    rng = np.random.default_rng(seed)
    sups = np.empty(trials)
    for start in range(0, trials, batch):
        stop = min(start + batch, trials)
        sigma = rng.choice((-1.0, 1.0), size=(stop - start, n))
        sups[start:stop] = np.max(sigma @ table, axis=1) / n
    stderr = float(sups.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.inf
    return float(sups.mean()), stderr


def linear_class_table(X, directions):
    """Value table of ``x -> <w, x>`` for each row ``w`` of ``directions``."""
    return np.asarray(X, dtype=float) @ np.asarray(directions, dtype=float).T


# --- cross-entropy Lipschitz audit -----------------------------------------


@dataclass(frozen=True)
class LipschitzAudit:
    eps_clip: float
    grad_norms: np.ndarray
    losses: np.ndarray
    fd_rel_errors: np.ndarray

    @property
    def lipschitz_bound(self):
        return 1.0 / self.eps_clip

    @property
    def loss_bound(self):
        return -math.log(self.eps_clip)

    @property
    def gradients_bounded(self):
        return bool(np.all(self.grad_norms <= self.lipschitz_bound * (1 + 1e-12)))

    @property
    def losses_bounded(self):
        return bool(np.all(self.losses <= self.loss_bound * (1 + 1e-12)))

    def fd_matches(self, rtol=1e-4):
        return bool(np.all(self.fd_rel_errors <= rtol))

    @property
    def passed(self):
        return self.gradients_bounded and self.losses_bounded and self.fd_matches()


def ce_lipschitz_audit(eps_clip, prob_vectors, labels=None, h=1e-6):
    """Audit cross-entropy on clipped probability vectors.

    The loss at true class ``k`` is ``-log p_k``; its gradient in ``p`` has a
    single nonzero entry ``-1/p_k``.  The analytic norm is compared with a
    central finite difference of step ``h``.  Without ``labels`` the least
    likely class of each vector is audited, which is the worst case.
    """
    if not 0 < eps_clip < 1:
        raise InvalidSimplexPoint(f"eps_clip must lie in (0, 1), got {eps_clip!r}")
    P = np.atleast_2d(np.asarray(prob_vectors, dtype=float))
    if labels is None:
        labels = np.argmin(P, axis=1)
    labels = np.asarray(labels, dtype=int).reshape(-1)
    if labels.shape[0] != P.shape[0]:
        raise InvalidSimplexPoint("one label per probability vector is required")
    if np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-9):
        raise InvalidSimplexPoint("probability vectors must sum to 1")
    if np.any(P < eps_clip):
        raise InvalidSimplexPoint(f"entries must be >= eps_clip = {eps_clip}")
    if np.any((labels < 0) | (labels >= P.shape[1])):
        raise InvalidSimplexPoint("label out of range")
    p_true = P[np.arange(P.shape[0]), labels]
    grad = 1.0 / p_true
    losses = -np.log(p_true)
    fd = np.abs((-np.log(p_true + h)) - (-np.log(p_true - h))) / (2 * h)
    return LipschitzAudit(float(eps_clip), grad, losses, np.abs(fd - grad) / grad)


def clipped_simplex_points(n, dim, eps_clip, rng):
    """Random points of the simplex with every entry at least ``eps_clip``."""
    if dim * eps_clip >= 1:
        raise InvalidSimplexPoint("dim * eps_clip must be < 1")
    raw = rng.dirichlet(np.ones(dim), size=n)
    return eps_clip + (1 - dim * eps_clip) * raw
