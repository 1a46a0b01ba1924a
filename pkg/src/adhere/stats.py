"""Self-contained statistics: trough-level variability, Welch's t-test,
Student-t tail probabilities, and rank correlation.

No statistics library is used here: the t distribution's survival function
is computed from the regularized incomplete beta function via its continued
fraction expansion (evaluated with the modified Lentz algorithm), which is
accurate to well below 1e-8 absolute error over the ranges this package
needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date

from .core import DataError, InsufficientDataError, LabResult


class UndefinedCorrelationError(DataError):
    """Correlation is undefined because one variable has zero rank variance."""


@dataclass(frozen=True)
class LabSeries:
    """Date-ordered tacrolimus trough levels for one patient."""

    patient_id: str
    observations: tuple[LabResult, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "observations", tuple(self.observations))
        dates = [o.draw_date for o in self.observations]
        if any(b < a for a, b in zip(dates, dates[1:])):
            raise DataError(f"lab series for {self.patient_id} not date-ordered")

    def values_in(self, start: date, end: date) -> list[float]:
        return [o.value for o in self.observations if start <= o.draw_date <= end]


@dataclass(frozen=True)
class CvResult:
    """Coefficient of variation of a trough-level window: sd / mean x 100,
    with the sample (n-1) standard deviation."""

    n: int
    mean: float
    sd: float
    cv_percent: float

    def to_dict(self) -> dict:
        return {"n": self.n, "mean": self.mean, "sd": self.sd, "cv_percent": self.cv_percent}


@dataclass(frozen=True)
class ArmComparison:
    """Two-sample comparison: per-arm summaries plus the Welch test result."""

    label_a: str
    label_b: str
    n_a: int
    n_b: int
    mean_a: float
    mean_b: float
    sd_a: float
    sd_b: float
    t_statistic: float
    df: float
    p_value: float
    method: str = "welch_t"

    def to_dict(self) -> dict:
        return {
            "label_a": self.label_a,
            "label_b": self.label_b,
            "n_a": self.n_a,
            "n_b": self.n_b,
            "mean_a": self.mean_a,
            "mean_b": self.mean_b,
            "sd_a": self.sd_a,
            "sd_b": self.sd_b,
            "t_statistic": self.t_statistic,
            "df": self.df,
            "p_value": self.p_value,
            "method": self.method,
        }


def mean(values: list[float]) -> float:
    if not values:
        raise InsufficientDataError("mean of empty sample")
    return sum(values) / len(values)


def sample_variance(values: list[float]) -> float:
    n = len(values)
    if n < 2:
        raise InsufficientDataError("variance needs at least 2 observations")
    m = mean(values)
    return sum((v - m) ** 2 for v in values) / (n - 1)


def sample_sd(values: list[float]) -> float:
    return math.sqrt(sample_variance(values))


def coefficient_of_variation(series: LabSeries, start: date, end: date) -> CvResult:
    """CV of the in-window observations, as a percentage of the mean."""
    values = series.values_in(start, end)
    if len(values) < 2:
        raise InsufficientDataError(
            f"{series.patient_id}: need >= 2 lab draws in window, have {len(values)}"
        )
    m = mean(values)
    sd = sample_sd(values)
    return CvResult(n=len(values), mean=m, sd=sd, cv_percent=sd / m * 100.0)


def _betacf(a: float, b: float, x: float) -> float:
    # Continued fraction for the incomplete beta, modified Lentz evaluation.
    max_iter = 500
    eps = 1e-15
    fpmin = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        coeff = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + coeff * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + coeff / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        coeff = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + coeff * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + coeff / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        step = d * c
        h *= step
        if abs(step - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log(1.0 - x)
    )
    front = math.exp(ln_front)
    # Use the expansion on the side where the continued fraction converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf(t: float, df: float) -> float:
    """Upper-tail probability P(T > t) for Student's t with df > 0."""
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if math.isnan(t):
        raise ValueError("t statistic is NaN")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    half_tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x)
    return half_tail if t > 0 else 1.0 - half_tail


def welch_t_test(
    sample_a: list[float],
    sample_b: list[float],
    label_a: str = "a",
    label_b: str = "b",
) -> ArmComparison:
    """Welch's unequal-variance t-test, two-sided.

    When both samples are constant: equal means give the p = 1 convention,
    unequal means a zero p with an infinite statistic.
    """
    n_a, n_b = len(sample_a), len(sample_b)
    if n_a < 2 or n_b < 2:
        raise InsufficientDataError("each sample needs at least 2 observations")
    mean_a, mean_b = mean(sample_a), mean(sample_b)
    var_a, var_b = sample_variance(sample_a), sample_variance(sample_b)

    if var_a == 0.0 and var_b == 0.0:
        df = float(n_a + n_b - 2)
        if mean_a == mean_b:
            t, p = 0.0, 1.0
        else:
            t = math.inf if mean_a > mean_b else -math.inf
            p = 0.0
    else:
        se_a = var_a / n_a
        se_b = var_b / n_b
        t = (mean_a - mean_b) / math.sqrt(se_a + se_b)
        df_denominator = se_a**2 / (n_a - 1) + se_b**2 / (n_b - 1)
        if df_denominator == 0.0:  # squared variances underflowed
            df = float(n_a + n_b - 2)
        else:
            df = (se_a + se_b) ** 2 / df_denominator
        p = 2.0 * student_t_sf(abs(t), df)

    return ArmComparison(
        label_a=label_a,
        label_b=label_b,
        n_a=n_a,
        n_b=n_b,
        mean_a=mean_a,
        mean_b=mean_b,
        sd_a=math.sqrt(var_a),
        sd_b=math.sqrt(var_b),
        t_statistic=t,
        df=df,
        p_value=min(p, 1.0),
    )


def midranks(values: list[float]) -> list[float]:
    """Ranks 1..n with tied values sharing their average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def pearson_correlation(x: list[float], y: list[float]) -> float:
    if len(x) != len(y):
        raise ValueError("samples must have equal length")
    if len(x) < 2:
        raise ValueError("correlation needs at least 2 pairs")
    mx, my = mean(x), mean(y)
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("zero variance in correlation input")
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def spearman_correlation(x: list[float], y: list[float]) -> float:
    """Spearman's rho: Pearson correlation of mid-ranks."""
    if len(x) != len(y):
        raise ValueError("samples must have equal length")
    if len(x) < 3:
        raise ValueError("rank correlation needs at least 3 pairs")
    return pearson_correlation(midranks(x), midranks(y))
