"""Round-to-round error propagation and the effect of lowering propagation factors.

A ledger lists, per round ``r``, the propagation factor ``gamma_r`` carrying
round ``r-1``'s error forward, a weight ``lambda_r``, the empirical loss and
a slack term.  Round ``i``'s local error ``eta_i = loss_i + slack_i``
reaches round ``r >= i`` scaled by ``prod_{j=i+1}^{r} gamma_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GammaOutOfRange, IndexOutOfRange, InvalidLedger, ZeroGamma

SIMPLEX_TOL = 1e-12


def _as_list(xs):
    return [float(x) for x in xs]


@dataclass(frozen=True)
class ErrorLedger:
    """``gamma`` holds ``gamma_2..gamma_R``; the other lists have length R."""

    gamma: tuple
    empirical: tuple
    slack: tuple
    lam: tuple = field(default=None)

    def __post_init__(self):
        emp = _as_list(self.empirical)
        R = len(emp)
        if R < 1:
            raise InvalidLedger("ledger needs at least one round")
        lam = [1.0 / R] * R if self.lam is None else _as_list(self.lam)
        gamma, slack = _as_list(self.gamma), _as_list(self.slack)
        if len(gamma) != R - 1 or len(slack) != R or len(lam) != R:
            raise InvalidLedger(
                f"lengths must be gamma={R - 1}, lambda=slack={R}; got "
                f"{len(gamma)}, {len(lam)}, {len(slack)}")
        for name, xs in (("gamma", gamma), ("lambda", lam), ("empirical", emp),
                         ("slack", slack)):
            if not all(math.isfinite(x) and x >= 0 for x in xs):
                raise InvalidLedger(f"{name} entries must be finite and nonnegative")
        if abs(math.fsum(lam) - 1.0) > SIMPLEX_TOL:
            raise InvalidLedger(f"lambda must sum to 1, sums to {math.fsum(lam)!r}")
        for name, xs in (("gamma", gamma), ("lam", lam), ("empirical", emp), ("slack", slack)):
            object.__setattr__(self, name, tuple(xs))

    @classmethod
    def uniform(cls, R, gamma, eta, lam=None):
        return cls([gamma] * (R - 1), [eta] * R, [0.0] * R, lam)

    @property
    def R(self):
        return len(self.empirical)

    @property
    def eta(self):
        return [a + b for a, b in zip(self.empirical, self.slack)]

    def g(self, j):
        """Propagation factor into round ``j`` (1-based, ``j >= 2``)."""
        return self.gamma[j - 2]


def _products(gamma_of, R):
    """``P[i, r] = prod_{j=i+1}^{r} gamma_j`` for ``1 <= i <= r <= R`` (0-based arrays)."""
    P = np.zeros((R, R))
    for i in range(1, R + 1):
        acc = 1.0
        P[i - 1, i - 1] = acc
        for r in range(i + 1, R + 1):
            acc *= gamma_of(r)
            P[i - 1, r - 1] = acc
    return P


def aggregate_error(ledger, r):
    """Error bound at round ``r`` via ``L_r = eta_r + gamma_r L_{r-1}``."""
    if not 1 <= r <= ledger.R:
        raise IndexOutOfRange(f"round {r} outside 1..{ledger.R}")
    eta = ledger.eta
    acc = eta[0]
    for j in range(2, r + 1):
        acc = eta[j - 1] + ledger.g(j) * acc
    return acc


def aggregate_error_direct(ledger, r):
    """Same quantity as :func:`aggregate_error`, summed term by term."""
    if not 1 <= r <= ledger.R:
        raise IndexOutOfRange(f"round {r} outside 1..{ledger.R}")
    eta = ledger.eta
    total = 0.0
    for i in range(1, r + 1):
        prod = 1.0
        for j in range(i + 1, r + 1):
            prod *= ledger.g(j)
        total += prod * eta[i - 1]
    return total


@dataclass(frozen=True)
class CumulativeBound:
    bound: float
    Lambda: np.ndarray  # (R,)
    G: np.ndarray  # (R, R), G[r, i] = lambda_r prod gamma; zero for i > r
    by_rounds: float  # sum_r lambda_r * aggregate_error(r)


def cumulative_bound(ledger, rtol=1e-12):
    R = ledger.R
    P = _products(ledger.g, R)
    G = (P * np.asarray(ledger.lam)[None, :]).T
    Lam = G.sum(axis=0)
    eta = np.asarray(ledger.eta)
    bound = float(math.fsum(Lam * eta))
    by_rounds = math.fsum(l * aggregate_error(ledger, r)
                          for r, l in enumerate(ledger.lam, start=1))
    if not math.isclose(bound, by_rounds, rel_tol=rtol, abs_tol=1e-300):
        raise ArithmeticError(f"reordered sums disagree: {bound!r} vs {by_rounds!r}")
    return CumulativeBound(bound, Lam, G, by_rounds)


def _check_gamma(gamma):
    if not 0 <= gamma < 1:
        raise GammaOutOfRange(f"gamma must lie in [0, 1), got {gamma!r}")


def uniform_closed_form(gamma, lambda_scalar, eta, R):
    """``eta*lambda/(1-gamma) * sum_{i=1}^{R} (1 - gamma^(R-i+1))`` in closed form."""
    _check_gamma(gamma)
    if lambda_scalar < 0 or eta < 0:
        raise ValueError("lambda and eta must be nonnegative")
    if R < 1:
        raise ValueError("R must be >= 1")
    if gamma == 0:
        return eta * lambda_scalar * R
    geo = gamma * (1 - gamma**R) / (1 - gamma)  # sum_{m=1}^{R} gamma^m
    return eta * lambda_scalar / (1 - gamma) * (R - geo)


def uniform_direct_sum(gamma, lambda_scalar, eta, R):
    _check_gamma(gamma)
    return eta * lambda_scalar / (1 - gamma) * math.fsum(
        1 - gamma ** (R - i + 1) for i in range(1, R + 1))


@dataclass(frozen=True)
class DivergenceScan:
    R: tuple
    bounds: tuple
    slope: float  # per-round increment at the largest R
    asymptotic_slope: float  # eta * lambda / (1 - gamma)

    @property
    def increasing(self):
        return all(a < b for a, b in zip(self.bounds, self.bounds[1:]))


def divergence_scan(gamma, lambda_scalar, eta, R_list):
    Rs = tuple(sorted(int(r) for r in R_list))
    vals = tuple(uniform_closed_form(gamma, lambda_scalar, eta, r) for r in Rs)
    top = Rs[-1]
    slope = (uniform_closed_form(gamma, lambda_scalar, eta, top)
             - uniform_closed_form(gamma, lambda_scalar, eta, max(top - 1, 1))) if top > 1 else vals[-1]
    return DivergenceScan(Rs, vals, slope, eta * lambda_scalar / (1 - gamma))


# --- interventions ---------------------------------------------------------


@dataclass(frozen=True)
class InterventionPlan:
    hint_rounds: frozenset
    gamma_prime: float

    def __post_init__(self):
        object.__setattr__(self, "hint_rounds", frozenset(int(h) for h in self.hint_rounds))
        if not (self.gamma_prime >= 0 and math.isfinite(self.gamma_prime)):
            raise InvalidLedger("gamma_prime must be finite and nonnegative")

    def check(self, ledger):
        if any(not 2 <= h <= ledger.R for h in self.hint_rounds):
            raise IndexOutOfRange(f"hint rounds must lie in 2..{ledger.R}")


def _uniform_gamma(ledger):
    if not ledger.gamma:
        return None
    g = ledger.gamma[0]
    if any(x != g for x in ledger.gamma):
        raise InvalidLedger("intervention analysis needs a uniform gamma")
    return g


@dataclass(frozen=True)
class InterventionResult:
    mu: np.ndarray  # (R, R), mu[i, r]; zero for r < i
    h: np.ndarray  # (R, R) hint counts
    kappa: np.ndarray
    Lambda: np.ndarray
    delta_L: float
    bound: float
    modified_bound: float


def intervention(ledger, plan):
    """Shrinkage factors ``kappa_i`` and bound reduction from hinting rounds.

    With uniform ``gamma``, ``mu_i(r) = lambda_r gamma^(r-i) / Lambda_i`` and
    ``kappa_i = sum_r mu_i(r) (gamma'/gamma)^h(i, r)`` where ``h(i, r)`` counts
    hint rounds in ``i+1..r``.  Uses ``0**0 == 1``.
    """
    plan.check(ledger)
    R = ledger.R
    gamma = _uniform_gamma(ledger)
    if gamma is None:  # a single round: no factor to hint, every kappa is 1
        gamma, ratio = 1.0, 1.0
    else:
        if gamma == 0:
            raise ZeroGamma("gamma is 0, so gamma'/gamma is undefined")
        if plan.gamma_prime > gamma:
            raise InvalidLedger(f"gamma_prime {plan.gamma_prime} exceeds gamma {gamma}")
        ratio = plan.gamma_prime / gamma
    lam = np.asarray(ledger.lam)
    base = cumulative_bound(ledger)
    mu = np.zeros((R, R))
    hcount = np.zeros((R, R), dtype=int)
    kappa = np.zeros(R)
    for i in range(1, R + 1):
        for r in range(i, R + 1):
            hcount[i - 1, r - 1] = sum(1 for j in plan.hint_rounds if i < j <= r)
            mu[i - 1, r - 1] = lam[r - 1] * gamma ** (r - i)
        Li = base.Lambda[i - 1]
        if Li > 0:
            mu[i - 1] /= Li
            kappa[i - 1] = math.fsum(mu[i - 1, r - 1] * ratio ** hcount[i - 1, r - 1]
                                     for r in range(i, R + 1))
        else:
            kappa[i - 1] = 1.0
    # sum of (1 - kappa_i) Lambda_i eta_i, expanded so every term is >= 0
    eta = ledger.eta
    delta = math.fsum(lam[r - 1] * gamma ** (r - i) * (1 - ratio ** hcount[i - 1, r - 1])
                      * eta[i - 1] for i in range(1, R + 1) for r in range(i, R + 1))
    return InterventionResult(mu, hcount, kappa, base.Lambda, delta,
                              base.bound, base.bound - delta)


def modified_lambda_oracle(ledger, plan):
    """Recompute every ``Lambda_i`` after replacing ``gamma_j`` by ``gamma'`` at hints."""
    plan.check(ledger)
    R = ledger.R

    def g(j):
        return plan.gamma_prime if j in plan.hint_rounds else ledger.g(j)

    out = []
    for i in range(1, R + 1):
        total = []
        for r in range(i, R + 1):
            prod = 1.0
            for j in range(i + 1, r + 1):
                prod *= g(j)
            total.append(ledger.lam[r - 1] * prod)
        out.append(math.fsum(total))
    return np.array(out)
