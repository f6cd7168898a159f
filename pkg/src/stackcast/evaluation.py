"""Evaluation protocol: per-step squared errors, trial averaging,
cumulative smoothing, a one-sided paired t-test, an augmented
Dickey-Fuller stationarity test, and wall-clock timing.

The Student-t CDF is computed in-repo through the regularized incomplete
beta function (continued fraction, absolute tolerance 1e-10) and the ADF
p-value through the MacKinnon (1994) approximate regression surface for
the constant-only case, so no external statistics package is needed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import DataError, LengthMismatch


class ZeroVariance(DataError):
    """All paired differences identical; the t statistic degenerates."""


class SingularRegression(DataError):
    """Collinear design matrix in the unit-root regression."""


@dataclass(frozen=True)
class TrialResult:
    """Per-timestep squared errors and runtime of one method on one trial."""

    method: str
    per_step_sq_err: tuple[float, ...]
    wall_time_s: float
    trial_id: int
    seed: int

    def __post_init__(self):
        if any(e < 0 for e in self.per_step_sq_err):
            raise DataError("squared errors must be non-negative")
        if self.wall_time_s < 0:
            raise DataError("wall time must be non-negative")

    @property
    def mse(self) -> float:
        """Mean squared error over the test window (sum of the /N terms)."""
        return float(sum(self.per_step_sq_err))


@dataclass(frozen=True)
class TTestReport:
    t_stat: float
    p_value: float
    dof: int
    zero_variance: bool = False

    def __post_init__(self):
        if self.dof < 1:
            raise DataError("dof must be >= 1")
        if not (0.0 <= self.p_value <= 1.0):
            raise DataError("p-value out of [0, 1]")


def mse_per_step(y, y_hat, n: int) -> np.ndarray:
    """Elementwise (y_t - y_hat_t)^2 / n over the test window."""
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if len(y) != len(y_hat):
        raise LengthMismatch(f"y has {len(y)} elements, y_hat has {len(y_hat)}")
    if n < 1:
        raise DataError("n must be >= 1")
    return (y - y_hat) ** 2 / n


def average_over_trials(results: Sequence) -> np.ndarray:
    """Elementwise mean across trials of equal-length error sequences."""
    if len(results) == 0:
        raise DataError("need at least one trial")
    arrs = [np.asarray(r, dtype=np.float64) for r in results]
    length = len(arrs[0])
    for a in arrs:
        if len(a) != length:
            raise LengthMismatch("trial sequences differ in length")
    return np.mean(np.vstack(arrs), axis=0)


def cumulative_average(series) -> np.ndarray:
    """Running mean: out[t] = sum(series[:t+1]) / (t+1)."""
    series = np.asarray(series, dtype=np.float64)
    if len(series) == 0:
        raise DataError("series is empty")
    return np.cumsum(series) / np.arange(1, len(series) + 1)


def _beta_continued_fraction(a: float, b: float, x: float, tol: float = 1e-10) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 400):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) with absolute tolerance 1e-10."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        a * math.log(x)
        + b * math.log1p(-x)
        + math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_cdf(t: float, dof: int) -> float:
    """P(T <= t) for Student's t with ``dof`` degrees of freedom.

    Exactly 0.5 at t = 0 for every dof.
    """
    if dof < 1:
        raise DataError("dof must be >= 1")
    if t == 0.0:
        return 0.5
    x = dof / (dof + t * t)
    tail = 0.5 * regularized_incomplete_beta(dof / 2.0, 0.5, x)
    return 1.0 - tail if t > 0 else tail


def paired_t_test_one_sided(compared, proposed) -> TTestReport:
    """Test whether the compared method's mean error exceeds the proposed.

    d = compared - proposed; rejecting the null (mean d <= 0) at 0.05
    means the proposed method's mean error is significantly lower. When
    every difference is identical the statistic degenerates: the report
    carries a zero_variance flag with t = +/-inf (p = 0 or 1), or t = 0,
    p = 0.5 when the sequences are equal.
    """
    c = np.asarray(compared, dtype=np.float64)
    p = np.asarray(proposed, dtype=np.float64)
    if len(c) != len(p):
        raise LengthMismatch("paired samples differ in length")
    n = len(c)
    if n < 2:
        raise DataError("need at least two pairs")
    d = c - p
    mean = float(np.mean(d))
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        if mean > 0:
            return TTestReport(math.inf, 0.0, n - 1, zero_variance=True)
        if mean < 0:
            return TTestReport(-math.inf, 1.0, n - 1, zero_variance=True)
        return TTestReport(0.0, 0.5, n - 1, zero_variance=True)
    t = mean / (sd / math.sqrt(n))
    p_value = 1.0 - student_t_cdf(t, n - 1)
    return TTestReport(float(t), float(p_value), n - 1)


# MacKinnon (1994) approximate regression surface, constant-only case.
_TAU_MAX = 2.74
_TAU_MIN = -18.83
_TAU_STAR = -1.61
_TAU_SMALLP = (2.1659, 1.4412, 0.038269)
_TAU_LARGEP = (1.7339, 0.93202, -0.12745, -0.010368)


def _norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def mackinnon_p(stat: float) -> float:
    """Approximate ADF p-value (constant-only case), clipped to [0.001, 0.999]."""
    if stat > _TAU_MAX:
        return 0.999
    if stat < _TAU_MIN:
        return 0.001
    coeffs = _TAU_SMALLP if stat <= _TAU_STAR else _TAU_LARGEP
    z = sum(c * stat**k for k, c in enumerate(coeffs))
    return min(max(_norm_cdf(z), 0.001), 0.999)


def adf_test(y, max_lag: int = 4) -> tuple[float, float]:
    """Augmented Dickey-Fuller unit-root test with a constant term.

    Regresses the first difference on [1, y_{t-1}, lagged differences]
    by least squares; the statistic is the y_{t-1} coefficient over its
    standard error. Non-rejection (large p) indicates non-stationarity.
    """
    y = np.asarray(y, dtype=np.float64)
    if max_lag < 0:
        raise DataError("max_lag must be >= 0")
    if len(y) <= max_lag + 10:
        raise DataError(f"series too short for max_lag={max_lag}")
    dy = np.diff(y)
    rows = len(dy) - max_lag
    design = np.empty((rows, 2 + max_lag))
    design[:, 0] = 1.0
    design[:, 1] = y[max_lag : len(y) - 1]
    for j in range(1, max_lag + 1):
        design[:, 1 + j] = dy[max_lag - j : len(dy) - j]
    target = dy[max_lag:]

    k = design.shape[1]
    if np.linalg.matrix_rank(design) < k:
        raise SingularRegression("collinear regressors in the ADF design")
    coef, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ coef
    dof = rows - k
    if dof < 1:
        raise DataError("not enough observations for the ADF regression")
    s2 = float(resid @ resid) / dof
    xtx_inv = np.linalg.inv(design.T @ design)
    se = math.sqrt(s2 * xtx_inv[1, 1])
    if se == 0.0:
        raise SingularRegression("zero standard error for the level coefficient")
    stat = float(coef[1]) / se
    return stat, mackinnon_p(stat)


def time_method(task: Callable[[], object]) -> float:
    """Wall-clock seconds for one call of ``task`` (monotonic clock)."""
    start = time.perf_counter()
    task()
    return time.perf_counter() - start
