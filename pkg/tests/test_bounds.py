import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from turing_transformer import bounds as b
from turing_transformer.errors import (
    DegenerateLipschitz,
    EmptyClass,
    InvalidConfidence,
    InvalidRounds,
    InvalidSimplexPoint,
    NonPositiveSample,
)

UNIT = b.ModelCapacity()

# Independent expression trees for every closed form.
B, Lphi, l, Rx, k, L, C, m, eps, delta, T, R = sp.symbols(
    "B Lphi l Rx k L C m eps delta T R", positive=True)
LM = B * Lphi ** (l - 1)
LOG = sp.log(1 / delta)
CAP = 4 * L**2 * B**2 * Lphi ** (2 * (l - 1)) * Rx**2 * k
MIX = 4 * L * B * Lphi ** (l - 1) * Rx * C * sp.sqrt(k) * sp.sqrt(LOG / 2)
CONF = C**2 * LOG / 2
EXPR = {
    "rademacher": LM * Rx * sp.sqrt(k) / sp.sqrt(m),
    "next_token": (CAP + MIX + CONF) / eps**2,
    "sequence": LM ** (2 * T) / (eps**2 * (LM - 1) ** 4) * (CAP + MIX + CONF),
    "multiround": LM ** (2 * T / R + 2) * R**2 / (eps**2 * (LM - 1) ** 4) * (CAP + MIX + CONF),
}
ARGS = (B, Lphi, l, Rx, k, L, C, m, eps, delta, T, R)
ORACLE = {name: sp.lambdify(ARGS, e, "mpmath") for name, e in EXPR.items()}


def evaluate(name, cap, m_, eps_, delta_, T_, R_):
    import mpmath
    mpmath.mp.dps = 40
    args = (cap.b_spec, cap.l_phi, cap.l_max, cap.r_x, cap.k, cap.loss_lipschitz,
            cap.loss_bound, m_, eps_, delta_, T_, R_)
    return float(ORACLE[name](*[mpmath.mpf(a) for a in args]))


def implementation(name, cap, m_, eps_, delta_, T_, R_):
    return {
        "rademacher": lambda: b.rademacher_bound(cap, m_),
        "next_token": lambda: b.sample_complexity_next_token(cap, eps_, delta_)[0],
        "sequence": lambda: b.sample_complexity_sequence(cap, eps_, delta_, T_),
        "multiround": lambda: b.sample_complexity_multiround(cap, eps_, delta_, T_, R_),
    }[name]()


def random_draw(rng):
    cap = b.ModelCapacity(
        b_spec=rng.uniform(0.2, 3.0), l_phi=rng.uniform(0.5, 1.5), l_max=int(rng.integers(1, 5)),
        r_x=rng.uniform(0.1, 5), k=float(rng.integers(1, 64)), loss_lipschitz=rng.uniform(0.1, 5),
        loss_bound=rng.uniform(0.1, 5))
    T_ = int(rng.integers(1, 30))
    return cap, int(rng.integers(1, 10**6)), rng.uniform(0.01, 2), rng.uniform(1e-6, 0.99), \
        T_, int(rng.integers(1, T_ + 1))


def fidelity_failures(draws=1000, seed=7, rtol=1e-12):
    """Relative mismatches between implementation and oracle over random draws."""
    rng = np.random.default_rng(seed)
    worst, count = 0.0, 0
    while count < draws:
        params = random_draw(rng)
        if params[0].l_model == 1:
            continue
        count += 1
        for name in EXPR:
            got, want = implementation(name, *params), evaluate(name, *params)
            worst = max(worst, abs(got - want) / abs(want))
    return worst


def test_formula_fidelity_sample():
    assert fidelity_failures(draws=100) <= 1e-12


def test_rademacher_examples():
    assert b.rademacher_bound(UNIT, 1) == 1
    assert b.rademacher_bound(b.ModelCapacity(b_spec=2, l_max=3, k=4), 16) == 1
    assert math.isclose(b.rademacher_bound(UNIT, 8) / b.rademacher_bound(UNIT, 16), math.sqrt(2))
    with pytest.raises(NonPositiveSample):
        b.rademacher_bound(UNIT, 0)


def test_generalization_examples():
    assert math.isclose(b.generalization_bound(UNIT, 0, 1, 1 / math.e), 2 + math.sqrt(0.5),
                        rel_tol=1e-12)
    near_one = b.generalization_bound(UNIT, 0, 1, 1 - 1e-15)
    assert math.isclose(near_one, 2.0, rel_tol=1e-6)
    vals = [b.generalization_bound(UNIT, 0.1, m_, 0.05) for m_ in (1, 10, 100, 1000)]
    assert vals == sorted(vals, reverse=True)
    with pytest.raises(InvalidConfidence):
        b.generalization_bound(UNIT, 0, 1, 1.0)


def test_next_token_worked_point():
    m_, terms = b.sample_complexity_next_token(UNIT, 1, math.exp(-2))
    assert (terms.capacity, terms.mixed, terms.confidence) == (4.0, 4.0, 1.0)
    assert m_ == 9.0
    assert b.sample_complexity_next_token(UNIT, 0.5, math.exp(-2))[0] == 36.0


def test_term_homogeneity_in_k():
    d = 1 - 1e-12
    t1 = b.sample_complexity_next_token(b.ModelCapacity(k=1), 1, d)[1]
    t4 = b.sample_complexity_next_token(b.ModelCapacity(k=4), 1, d)[1]
    assert math.isclose(t4.capacity / t1.capacity, 4)
    assert math.isclose(t4.mixed / t1.mixed, 2)
    assert math.isclose(t4.confidence / t1.confidence, 1)


def test_sequence_examples():
    cap = b.ModelCapacity(b_spec=2)
    d = math.exp(-2)
    bracket = b.sample_complexity_next_token(cap, 1, d)[0]
    assert b.sample_complexity_sequence(cap, 1, d, 1) == 4 * bracket
    assert b.sample_complexity_sequence(cap, 1, d, 6) / b.sample_complexity_sequence(cap, 1, d, 5) == 4
    with pytest.raises(DegenerateLipschitz):
        b.sample_complexity_sequence(UNIT, 1, d, 3)


def test_multiround_prefactors():
    cap = b.ModelCapacity(b_spec=2)
    assert b.multiround_prefactor(cap, 20, 20) == 6400
    assert b.multiround_prefactor(cap, 20, 1) == 2.0**42
    with pytest.raises(InvalidRounds):
        b.multiround_prefactor(cap, 20, 21)


def test_multiround_r1_exceeds_sequence_by_lmodel_squared():
    cap = b.ModelCapacity(b_spec=1.7, l_phi=1.1, l_max=2)
    ratio = (b.sample_complexity_multiround(cap, 0.3, 0.05, 9, 1)
             / b.sample_complexity_sequence(cap, 0.3, 0.05, 9))
    assert math.isclose(ratio, cap.l_model**2, rel_tol=1e-12)


def test_exponential_factor_nonincreasing_in_r():
    cap = b.ModelCapacity(b_spec=2)
    vals = [cap.l_model ** (2 * 20 / r) for r in range(1, 21)]
    assert all(x >= y for x, y in zip(vals, vals[1:]))


def test_optimal_rounds_matches_sweep():
    cap = b.ModelCapacity(b_spec=2)
    vals = [b.sample_complexity_multiround(cap, 1, 0.1, 20, r) for r in range(1, 21)]
    assert b.optimal_rounds(cap, 1, 0.1, 20) == vals.index(min(vals)) + 1
    assert b.optimal_rounds(cap, 1, 0.1, 1) == 1
    assert b.optimal_rounds(b.ModelCapacity(b_spec=1 + 1e-9), 1, 0.1, 20) == 1


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 10), st.floats(1e-6, 0.99), st.floats(1.01, 3), st.integers(1, 15))
def test_inverse_square_scaling(eps_, delta_, bs, T_):
    cap = b.ModelCapacity(b_spec=bs)
    for f in (lambda e: b.sample_complexity_next_token(cap, e, delta_)[0],
              lambda e: b.sample_complexity_sequence(cap, e, delta_, T_),
              lambda e: b.sample_complexity_multiround(cap, e, delta_, T_, T_)):
        assert math.isclose(f(eps_ / 2) / f(eps_), 4, rel_tol=1e-12)


def test_empirical_rademacher_examples():
    est, _ = b.empirical_rademacher(np.array([[-1.0, 1.0]]), trials=500)
    assert est == 1.0
    assert b.empirical_rademacher(np.zeros((5, 1)), trials=100) == (0.0, 0.0)
    with pytest.raises(EmptyClass):
        b.empirical_rademacher(np.zeros((3, 0)))


def test_empirical_rademacher_seeded():
    table = np.random.default_rng(1).standard_normal((20, 7))
    assert b.empirical_rademacher(table, 300, seed=5) == b.empirical_rademacher(table, 300, seed=5)


def test_linear_class_below_closed_form():
    rng = np.random.default_rng(3)
    for _ in range(100):
        X = rng.standard_normal((20, 4))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        W = rng.standard_normal((32, 4))
        W /= np.linalg.norm(W, axis=1, keepdims=True)
        est, se = b.empirical_rademacher(b.linear_class_table(X, W), 500,
                                         seed=int(rng.integers(2**31)))
        assert est <= b.rademacher_bound(UNIT, 20) + 3 * se


def test_ce_audit_examples():
    audit = b.ce_lipschitz_audit(0.01, [[0.5, 0.5]], [0])
    assert audit.grad_norms[0] == 2.0
    clip = b.ce_lipschitz_audit(0.01, [[0.01, 0.99]], [0])
    assert math.isclose(clip.grad_norms[0], 100.0) and clip.losses[0] == -math.log(0.01)
    assert clip.passed
    assert audit.fd_rel_errors[0] <= 1e-4


@pytest.mark.parametrize("bad", [[[0.5, 0.6]], [[0.005, 0.995]]])
def test_ce_audit_rejects_bad_points(bad):
    with pytest.raises(InvalidSimplexPoint):
        b.ce_lipschitz_audit(0.01, bad, [0])
