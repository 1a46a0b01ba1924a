"""Univariate logistic regression fit by iteratively reweighted least squares.

Two parameters (intercept and slope), Newton steps with step-halving whenever
a step would decrease the log-likelihood, Wald standard errors from the
inverse observed information. Small enough that the normal equations are
solved in closed form rather than through a linear-algebra library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import AdherenceError

SCORE_TOLERANCE = 1e-8
MAX_ITERATIONS = 50
MAX_STEP_HALVINGS = 30
SEPARATION_SLOPE_LIMIT = 30.0
Z_95 = 1.96


class DegenerateDataError(AdherenceError):
    """Single-class outcomes or a constant covariate: no slope to estimate."""


class SeparationError(AdherenceError):
    """Complete separation detected: the ML slope diverges."""


@dataclass(frozen=True)
class LogisticFit:
    intercept: float
    slope: float
    se_slope: float
    odds_ratio: float
    ci95: tuple[float, float]
    converged: bool
    iterations: int

    def to_dict(self) -> dict:
        return {
            "intercept": self.intercept,
            "slope": self.slope,
            "se_slope": self.se_slope,
            "odds_ratio": self.odds_ratio,
            "ci95": list(self.ci95),
            "converged": self.converged,
            "iterations": self.iterations,
        }


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def _log_likelihood(xs: list[float], ys: list[int], b0: float, b1: float) -> float:
    total = 0.0
    for x, y in zip(xs, ys):
        eta = b0 + b1 * x
        softplus = max(eta, 0.0) + math.log1p(math.exp(-abs(eta)))
        total += y * eta - softplus
    return total


def fit_logistic(rows: list[tuple[float, int]]) -> LogisticFit:
    """Maximum-likelihood fit of outcome ~ intercept + slope * covariate.

    Converged means the score (log-likelihood gradient) has max-norm below
    the tolerance; the Wald 95% interval is exp(slope +/- 1.96 se).
    """
    if len(rows) < 2:
        raise DegenerateDataError("need at least 2 rows")
    xs = [float(x) for x, _ in rows]
    ys = [int(y) for _, y in rows]
    if any(y not in (0, 1) for y in ys):
        raise ValueError("outcomes must be 0 or 1")
    if len(set(ys)) < 2:
        raise DegenerateDataError("all outcomes are the same class")
    if len(set(xs)) < 2:
        raise DegenerateDataError("covariate is constant")

    p_bar = sum(ys) / len(ys)
    b0 = math.log(p_bar / (1.0 - p_bar))
    b1 = 0.0
    ll = _log_likelihood(xs, ys, b0, b1)

    converged = False
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        s0 = s1 = 0.0
        i00 = i01 = i11 = 0.0
        worst_fit = 0.0
        for x, y in zip(xs, ys):
            mu = _sigmoid(b0 + b1 * x)
            r = y - mu
            w = mu * (1.0 - mu)
            s0 += r
            s1 += r * x
            i00 += w
            i01 += w * x
            i11 += w * x * x
            worst_fit = max(worst_fit, abs(r))
        if max(abs(s0), abs(s1)) < SCORE_TOLERANCE:
            # A vanishing score with every row classified almost perfectly is
            # not an interior optimum; it is the slope running off to infinity.
            if worst_fit < 1e-4:
                raise SeparationError("complete separation: fitted probabilities saturated")
            converged = True
            break
        det = i00 * i11 - i01 * i01
        if det <= 0.0 or not math.isfinite(det):
            raise SeparationError("information matrix is singular; fit diverged")
        step0 = (i11 * s0 - i01 * s1) / det
        step1 = (i00 * s1 - i01 * s0) / det
        # Step-halve until the likelihood stops decreasing.
        scale = 1.0
        for _ in range(MAX_STEP_HALVINGS):
            candidate = _log_likelihood(xs, ys, b0 + scale * step0, b1 + scale * step1)
            if candidate >= ll - 1e-12:
                break
            scale *= 0.5
        b0 += scale * step0
        b1 += scale * step1
        ll = _log_likelihood(xs, ys, b0, b1)
        if abs(b1) > SEPARATION_SLOPE_LIMIT:
            raise SeparationError(f"slope diverged past {SEPARATION_SLOPE_LIMIT}")

    # Information at the final coefficients (the loop may have moved them).
    i00 = i01 = i11 = 0.0
    for x in xs:
        mu = _sigmoid(b0 + b1 * x)
        w = mu * (1.0 - mu)
        i00 += w
        i01 += w * x
        i11 += w * x * x
    det = i00 * i11 - i01 * i01
    if det <= 0.0 or not math.isfinite(det):
        raise SeparationError("information matrix is singular at the optimum")
    se_slope = math.sqrt(i00 / det)
    if abs(b1) + Z_95 * se_slope > 700.0:  # exp overflow; only reachable near separation
        raise SeparationError("slope confidence interval diverged")
    odds_ratio = math.exp(b1)
    ci = (math.exp(b1 - Z_95 * se_slope), math.exp(b1 + Z_95 * se_slope))
    return LogisticFit(
        intercept=b0,
        slope=b1,
        se_slope=se_slope,
        odds_ratio=odds_ratio,
        ci95=ci,
        converged=converged,
        iterations=iterations,
    )
