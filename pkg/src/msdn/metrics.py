"""Exact-match accuracy, micro-averaged F1 and the paired t-test.

The Student-t CDF is computed from the regularized incomplete beta function
using the modified Lentz continued fraction, so no statistics package is
needed at runtime.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import ContractError


def _pair(Y_pred, Y_true):
    Y_pred = np.asarray(Y_pred)
    Y_true = np.asarray(Y_true)
    if Y_pred.shape != Y_true.shape:
        raise ContractError(f"prediction shape {Y_pred.shape} does not match truth shape {Y_true.shape}")
    if Y_pred.ndim == 1:
        Y_pred, Y_true = Y_pred[:, None], Y_true[:, None]
    return Y_pred.astype(bool), Y_true.astype(bool)


def ema(Y_pred, Y_true):
    """Fraction of rows whose whole predicted label vector is correct."""
    Y_pred, Y_true = _pair(Y_pred, Y_true)
    if Y_pred.shape[0] == 0:
        return 0.0
    return float(np.mean(np.all(Y_pred == Y_true, axis=1)))


def micro_f1(Y_pred, Y_true):
    """``2 TP / (2 TP + FP + FN)`` over all cells; 0 when there are no positives at all."""
    Y_pred, Y_true = _pair(Y_pred, Y_true)
    tp = np.count_nonzero(Y_pred & Y_true)
    fp = np.count_nonzero(Y_pred & ~Y_true)
    fn = np.count_nonzero(~Y_pred & Y_true)
    denom = 2 * tp + fp + fn
    return 2.0 * tp / denom if denom else 0.0


def _betacf(a, b, x, max_iter=300, eps=1e-16):
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c, d = 1.0, 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a, b, x):
    """Regularized incomplete beta ``I_x(a, b)``."""
    if not 0.0 <= x <= 1.0:
        raise ContractError(f"x must be in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_cdf(t, df):
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    tail = 0.5 * betainc(df / 2.0, 0.5, df / (df + t * t))
    return 1.0 - tail if t > 0 else tail


def student_t_sf_two_sided(t, df):
    """``P(|T| >= |t|)`` for ``T`` with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return betainc(df / 2.0, 0.5, df / (df + t * t))


@dataclass(frozen=True)
class TTestVerdict:
    """Outcome of comparing a reference model (``a``) against a baseline (``b``).

    ``verdict`` is from the reference model's side: ``"win"`` means ``a`` is
    significantly better.
    """

    baseline: str
    t: float
    p_value: float
    mean_diff: float
    verdict: str
    degenerate: bool = False


def paired_ttest(a, b, alpha=0.05, baseline=""):
    """Two-sided paired t-test on ``a - b`` with ``n - 1`` degrees of freedom.

    Zero-variance differences have no t statistic: all-zero differences are a
    tie, otherwise the sign decides and the verdict is flagged degenerate.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError(f"paired samples need equal 1-D shapes, got {a.shape} and {b.shape}")
    n = a.size
    if n < 2:
        raise ContractError(f"paired t-test needs at least 2 pairs, got {n}")
    diff = a - b
    mean = float(diff.mean())
    sd = float(diff.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return TTestVerdict(baseline, 0.0, 1.0, 0.0, "tie", degenerate=True)
        t = math.copysign(math.inf, mean)
        return TTestVerdict(baseline, t, 0.0, mean, "win" if mean > 0 else "loss", degenerate=True)
    t = mean / (sd / math.sqrt(n))
    p = student_t_sf_two_sided(t, n - 1)
    if p < alpha and mean > 0:
        verdict = "win"
    elif p < alpha and mean < 0:
        verdict = "loss"
    else:
        verdict = "tie"
    return TTestVerdict(baseline, t, p, mean, verdict)
