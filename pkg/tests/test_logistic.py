from __future__ import annotations

import math
import random

import pytest

from adhere.logistic import (
    DegenerateDataError,
    SeparationError,
    fit_logistic,
)


def two_by_two(n00, n01, n10, n11):
    """Rows for a binary covariate: n00 (x=0, y=0) ... n11 (x=1, y=1)."""
    return (
        [(0.0, 0)] * n00 + [(0.0, 1)] * n01 + [(1.0, 0)] * n10 + [(1.0, 1)] * n11
    )


def score(rows, b0, b1):
    s0 = s1 = 0.0
    for x, y in rows:
        mu = 1.0 / (1.0 + math.exp(-(b0 + b1 * x)))
        s0 += y - mu
        s1 += (y - mu) * x
    return s0, s1


class TestClosedForm:
    def test_two_by_two_log_odds_ratio(self):
        # x=0: 10 positive / 10 negative; x=1: 20 positive / 10 negative.
        rows = two_by_two(10, 10, 10, 20)
        fit = fit_logistic(rows)
        assert fit.slope == pytest.approx(math.log(2.0), abs=1e-6)
        assert fit.odds_ratio == pytest.approx(2.0, abs=1e-6)
        assert fit.intercept == pytest.approx(0.0, abs=1e-6)
        assert fit.converged

    def test_wald_se_matches_cell_count_formula(self):
        # For a saturated 2x2, var(log OR) = sum of reciprocal cell counts.
        rows = two_by_two(12, 8, 9, 21)
        fit = fit_logistic(rows)
        expected_se = math.sqrt(1 / 12 + 1 / 8 + 1 / 9 + 1 / 21)
        assert fit.se_slope == pytest.approx(expected_se, rel=1e-6)

    def test_ci_brackets_odds_ratio(self):
        fit = fit_logistic(two_by_two(10, 10, 10, 20))
        assert fit.ci95[0] <= fit.odds_ratio <= fit.ci95[1]


class TestDegenerateInputs:
    def test_single_class_outcomes(self):
        with pytest.raises(DegenerateDataError):
            fit_logistic([(0.0, 1), (1.0, 1), (2.0, 1)])

    def test_constant_covariate(self):
        with pytest.raises(DegenerateDataError):
            fit_logistic([(3.0, 0), (3.0, 1), (3.0, 0)])

    def test_too_few_rows(self):
        with pytest.raises(DegenerateDataError):
            fit_logistic([(0.0, 1)])

    def test_non_binary_outcome(self):
        with pytest.raises(ValueError):
            fit_logistic([(0.0, 2), (1.0, 0)])

    def test_complete_separation(self):
        rows = [(float(x), 0) for x in range(-8, 0)] + [(float(x), 1) for x in range(1, 9)]
        with pytest.raises(SeparationError):
            fit_logistic(rows)


class TestConvergence:
    def test_converged_means_zero_score(self):
        rng = random.Random(17)
        for trial in range(10):
            rows = []
            for _ in range(200):
                x = rng.uniform(-2, 2)
                p = 1.0 / (1.0 + math.exp(-(0.3 - 0.8 * x)))
                rows.append((x, 1 if rng.random() < p else 0))
            fit = fit_logistic(rows)
            assert fit.converged
            s0, s1 = score(rows, fit.intercept, fit.slope)
            assert max(abs(s0), abs(s1)) < 1e-8

    def test_planted_slope_recovery_small(self):
        planted = math.log(0.916)
        rng = random.Random(5)
        hits = 0
        for _ in range(10):
            rows = []
            for _ in range(2000):
                cv = rng.uniform(15.0, 55.0)
                p = 1.0 / (1.0 + math.exp(-(-planted * 35.0 + planted * cv)))
                rows.append((cv, 1 if rng.random() < p else 0))
            fit = fit_logistic(rows)
            lo, hi = fit.ci95
            hits += lo <= math.exp(planted) <= hi
        assert hits >= 8  # 95% nominal coverage; full check in acceptance

    def test_iterations_reported(self):
        fit = fit_logistic(two_by_two(10, 10, 10, 20))
        assert 1 <= fit.iterations <= 50
