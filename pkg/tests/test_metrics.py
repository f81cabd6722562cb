import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from msdn._validation import ContractError
from msdn.metrics import betainc, ema, micro_f1, paired_ttest, student_t_cdf, student_t_sf_two_sided


def brute_counts(P, T):
    tp = fp = fn = 0
    exact = 0
    for prow, trow in zip(P.tolist(), T.tolist()):
        exact += prow == trow
        for p, t in zip(prow, trow):
            tp += p == 1 and t == 1
            fp += p == 1 and t == 0
            fn += p == 0 and t == 1
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
    return exact / len(P), f1


def test_metrics_match_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n, d = rng.integers(1, 12, size=2)
        density = rng.uniform(0, 1)
        P = (rng.uniform(size=(n, d)) < density).astype(int)
        T = (rng.uniform(size=(n, d)) < density).astype(int)
        if rng.uniform() < 0.2:
            T = P.copy()
        e, f = brute_counts(P, T)
        assert ema(P, T) == e
        assert micro_f1(P, T) == f


def test_ema_examples():
    Y = np.array([[1, 0], [0, 1]])
    assert ema(Y, Y) == 1.0
    assert ema(Y, np.array([[1, 0], [1, 1]])) == 0.5
    assert ema(np.zeros((2, 2)), np.array([[1, 0], [0, 1]])) == 0.0


def test_micro_f1_examples():
    assert micro_f1(np.array([[1, 1], [1, 0]]), np.array([[1, 0], [1, 1]])) == pytest.approx(2 / 3, abs=1e-12)
    assert micro_f1(np.array([[1, 0]]), np.array([[1, 0]])) == 1.0
    assert micro_f1(np.zeros((3, 2)), np.zeros((3, 2))) == 0.0


def test_shape_mismatch():
    with pytest.raises(ContractError):
        ema(np.zeros((2, 2)), np.zeros((2, 3)))
    with pytest.raises(ContractError):
        micro_f1(np.zeros((2, 2)), np.zeros((3, 2)))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_ema_one_iff_micro_f1_one(n, d, seed):
    rng = np.random.default_rng(seed)
    T = rng.integers(0, 2, size=(n, d))
    T[0, 0] = 1
    P = T.copy() if seed % 2 else rng.integers(0, 2, size=(n, d))
    assert (ema(P, T) == 1.0) == (micro_f1(P, T) == 1.0)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_ema_row_permutation_invariant(n, d, seed):
    rng = np.random.default_rng(seed)
    P, T = rng.integers(0, 2, size=(2, n, d))
    perm = rng.permutation(n)
    assert ema(P[perm], T[perm]) == ema(P, T)


# -- t-test -------------------------------------------------------------------------

def test_ttest_worked_example():
    diff = np.array([0.5, 0.1, 0.3, 0.2, 0.4])
    v = paired_ttest(diff, np.zeros(5))
    assert v.mean_diff == pytest.approx(0.3, abs=1e-12)
    assert v.t == pytest.approx(0.3 / (np.std(diff, ddof=1) / math.sqrt(5)), rel=1e-12)
    assert v.t == pytest.approx(4.2426, abs=1e-4)
    assert v.p_value == pytest.approx(0.0132, abs=1e-4)
    ref = stats.ttest_rel(diff, np.zeros(5))
    assert v.t == pytest.approx(ref.statistic, rel=1e-12)
    assert v.p_value == pytest.approx(ref.pvalue, abs=1e-10)
    assert v.verdict == "win" and not v.degenerate


def test_ttest_identical_is_tie():
    a = [0.1, 0.5, 0.3]
    v = paired_ttest(a, a)
    assert v.verdict == "tie" and v.degenerate


def test_ttest_constant_difference_is_degenerate():
    v = paired_ttest(np.ones(5) * 2, np.ones(5))
    assert v.verdict == "win" and v.degenerate and v.p_value == 0.0
    assert paired_ttest(np.ones(5), np.ones(5) * 2).verdict == "loss"


@pytest.mark.parametrize("a, b", [([1.0], [0.0]), ([1.0, 2.0], [1.0]), ([[1.0, 2.0]], [[1.0, 2.0]])])
def test_ttest_contract(a, b):
    with pytest.raises(ContractError):
        paired_ttest(a, b)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=2, max_size=10))
def test_ttest_antisymmetric(pairs):
    a, b = map(list, zip(*pairs))
    flip = {"win": "loss", "loss": "win", "tie": "tie"}
    assert paired_ttest(b, a).verdict == flip[paired_ttest(a, b).verdict]


def test_ttest_p_value_against_scipy():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(2, 12))
        a, b = rng.uniform(size=(2, n))
        a = a + rng.normal(scale=0.3)
        v = paired_ttest(a, b)
        ref = stats.ttest_rel(a, b)
        assert v.p_value == pytest.approx(ref.pvalue, abs=1e-8)


def test_betainc_against_scipy():
    rng = np.random.default_rng(4)
    for _ in range(500):
        a, b = rng.uniform(0.05, 60, size=2)
        x = rng.uniform()
        assert betainc(a, b, x) == pytest.approx(special.betainc(a, b, x), abs=1e-10)
    assert betainc(2.0, 3.0, 0.0) == 0.0 and betainc(2.0, 3.0, 1.0) == 1.0
    with pytest.raises(ContractError):
        betainc(1.0, 1.0, 1.5)


def test_student_t_against_scipy():
    for df in (1, 2, 4, 9, 30):
        for t in (-8.0, -2.1, -0.3, 0.0, 0.7, 3.5, 40.0):
            assert student_t_cdf(t, df) == pytest.approx(stats.t.cdf(t, df), abs=1e-10)
            assert student_t_sf_two_sided(t, df) == pytest.approx(2 * stats.t.sf(abs(t), df), abs=1e-10)
    assert student_t_cdf(math.inf, 3) == 1.0 and student_t_sf_two_sided(-math.inf, 3) == 0.0
