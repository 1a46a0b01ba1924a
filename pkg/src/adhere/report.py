"""Arm-level cohort analytics: CV summaries, arm comparison, app-use odds
ratio, missed-dose/game-level correlation, and the challenge-subgroup
missed-rate ratios.

Statistics that cannot be computed (too few patients, degenerate data) are
reported as unavailable cells with a reason, never as zeros and never by
failing the whole report. Aggregation always runs in patient-id order so a
report is bit-identical however the inputs were produced.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date

from .core import InsufficientDataError
from .game import GameLedger, level
from .ledger import AdherenceSummary
from .logistic import DegenerateDataError, LogisticFit, SeparationError, fit_logistic
from .stats import (
    ArmComparison,
    LabSeries,
    UndefinedCorrelationError,
    coefficient_of_variation,
    mean,
    sample_sd,
    spearman_correlation,
    pearson_correlation,
    welch_t_test,
)

CHALLENGE_SUBGROUP_MIN = 3

METHODS = {
    "cv": "coefficient of variation, percent, sample sd",
    "cv_comparison": "welch_t (unequal variances, two-sided)",
    "odds_ratio": "univariate logistic regression of app-arm membership on CV (IRLS, Wald CI)",
    "correlation": "spearman rho of missed-dose rate vs game level (pearson also emitted)",
    "missed_rate_ratio": "mean per-patient missed-dose rate, >=3-challenge app subgroup vs comparator",
}


@dataclass(frozen=True)
class CohortPatient:
    """One patient's inputs to the report."""

    patient_id: str
    arm: str
    labs: LabSeries
    summary: AdherenceSummary
    ledger: GameLedger


@dataclass(frozen=True)
class ArmCvSummary:
    arm: str
    n_patients: int
    n_with_cv: int
    mean_cv: float | None
    sd_cv: float | None

    def to_dict(self) -> dict:
        return {
            "arm": self.arm,
            "n_patients": self.n_patients,
            "n_with_cv": self.n_with_cv,
            "mean_cv": self.mean_cv,
            "sd_cv": self.sd_cv,
        }


@dataclass(frozen=True)
class CohortReport:
    window_start: date
    window_end: date
    app_arm: str
    comparator_arm: str | None
    arm_summaries: tuple[ArmCvSummary, ...]
    cv_comparison: ArmComparison | None
    app_use_fit: LogisticFit | None
    spearman_rho: float | None
    pearson_r: float | None
    correlation_n: int
    missed_rate_ratio_vs_comparator: float | None
    missed_rate_ratio_vs_other_app_users: float | None
    unavailable: dict[str, str] = field(default_factory=dict)
    methods: dict[str, str] = field(default_factory=lambda: dict(METHODS))

    def to_dict(self) -> dict:
        return {
            "window": {
                "start": self.window_start.isoformat(),
                "end": self.window_end.isoformat(),
            },
            "app_arm": self.app_arm,
            "comparator_arm": self.comparator_arm,
            "arm_summaries": [a.to_dict() for a in self.arm_summaries],
            "cv_comparison": self.cv_comparison.to_dict() if self.cv_comparison else None,
            "app_use_fit": self.app_use_fit.to_dict() if self.app_use_fit else None,
            "spearman_rho": self.spearman_rho,
            "pearson_r": self.pearson_r,
            "correlation_n": self.correlation_n,
            "missed_rate_ratio_vs_comparator": self.missed_rate_ratio_vs_comparator,
            "missed_rate_ratio_vs_other_app_users": self.missed_rate_ratio_vs_other_app_users,
            "unavailable": dict(self.unavailable),
            "methods": dict(self.methods),
        }


def cohort_report(
    patients: list[CohortPatient],
    window_start: date,
    window_end: date,
    app_arm: str = "app",
) -> CohortReport:
    """Assemble the full cohort report; unavailable statistics are flagged."""
    ordered = sorted(patients, key=lambda p: p.patient_id)
    unavailable: dict[str, str] = {}

    arms = sorted({p.arm for p in ordered})
    comparator = next((a for a in arms if a != app_arm), None)

    cv_by_patient: dict[str, float] = {}
    for p in ordered:
        try:
            cv_by_patient[p.patient_id] = coefficient_of_variation(
                p.labs, window_start, window_end
            ).cv_percent
        except InsufficientDataError:
            continue

    summaries: list[ArmCvSummary] = []
    cvs_by_arm: dict[str, list[float]] = {}
    for arm in arms:
        members = [p for p in ordered if p.arm == arm]
        cvs = [cv_by_patient[p.patient_id] for p in members if p.patient_id in cv_by_patient]
        cvs_by_arm[arm] = cvs
        if len(cvs) < 2:
            unavailable[f"arm_cv:{arm}"] = (
                f"need >= 2 patients with computable CV, have {len(cvs)}"
            )
            summaries.append(
                ArmCvSummary(
                    arm=arm,
                    n_patients=len(members),
                    n_with_cv=len(cvs),
                    mean_cv=None,
                    sd_cv=None,
                )
            )
        else:
            summaries.append(
                ArmCvSummary(
                    arm=arm,
                    n_patients=len(members),
                    n_with_cv=len(cvs),
                    mean_cv=mean(cvs),
                    sd_cv=sample_sd(cvs),
                )
            )

    comparison: ArmComparison | None = None
    if comparator is None:
        unavailable["cv_comparison"] = "need two arms"
    elif app_arm not in cvs_by_arm or len(cvs_by_arm.get(app_arm, [])) < 2:
        unavailable["cv_comparison"] = f"arm {app_arm!r} lacks computable CVs"
    elif len(cvs_by_arm[comparator]) < 2:
        unavailable["cv_comparison"] = f"arm {comparator!r} lacks computable CVs"
    else:
        comparison = welch_t_test(
            cvs_by_arm[app_arm], cvs_by_arm[comparator], label_a=app_arm, label_b=comparator
        )

    fit: LogisticFit | None = None
    if comparator is None:
        unavailable["app_use_fit"] = "need two arms"
    else:
        rows = [
            (cv_by_patient[p.patient_id], 1 if p.arm == app_arm else 0)
            for p in ordered
            if p.patient_id in cv_by_patient and p.arm in (app_arm, comparator)
        ]
        try:
            fit = fit_logistic(rows)
        except (DegenerateDataError, SeparationError) as exc:
            unavailable["app_use_fit"] = str(exc)

    rho: float | None = None
    pearson: float | None = None
    rates = [p.summary.missed_dose_rate for p in ordered]
    levels = [float(level(p.ledger)) for p in ordered]
    try:
        rho = spearman_correlation(rates, levels)
        pearson = pearson_correlation(rates, levels)
    except (ValueError, UndefinedCorrelationError) as exc:
        unavailable["correlation"] = str(exc)

    subgroup = [
        p.summary.missed_dose_rate
        for p in ordered
        if p.arm == app_arm and p.ledger.challenges_completed >= CHALLENGE_SUBGROUP_MIN
    ]
    other_app = [
        p.summary.missed_dose_rate
        for p in ordered
        if p.arm == app_arm and p.ledger.challenges_completed < CHALLENGE_SUBGROUP_MIN
    ]
    comparator_rates = [p.summary.missed_dose_rate for p in ordered if p.arm == comparator]

    ratio_vs_comparator = _rate_ratio(subgroup, comparator_rates)
    if ratio_vs_comparator is None:
        unavailable["missed_rate_ratio_vs_comparator"] = "empty subgroup or zero comparator rate"
    ratio_vs_other = _rate_ratio(subgroup, other_app)
    if ratio_vs_other is None:
        unavailable["missed_rate_ratio_vs_other_app_users"] = (
            "empty subgroup or zero comparator rate"
        )

    return CohortReport(
        window_start=window_start,
        window_end=window_end,
        app_arm=app_arm,
        comparator_arm=comparator,
        arm_summaries=tuple(summaries),
        cv_comparison=comparison,
        app_use_fit=fit,
        spearman_rho=rho,
        pearson_r=pearson,
        correlation_n=len(rates),
        missed_rate_ratio_vs_comparator=ratio_vs_comparator,
        missed_rate_ratio_vs_other_app_users=ratio_vs_other,
        unavailable=unavailable,
    )


def _rate_ratio(numerator_rates: list[float], denominator_rates: list[float]) -> float | None:
    if not numerator_rates or not denominator_rates:
        return None
    denom = mean(denominator_rates)
    if denom == 0.0:
        return None
    return mean(numerator_rates) / denom


def render_text(report: CohortReport) -> str:
    """Plain-text table in the style clinicians read the numbers in."""

    def cell(value: float | None, fmt: str = "{:.3f}") -> str:
        return fmt.format(value) if value is not None else "unavailable"

    lines = [
        f"Cohort report  window {report.window_start}..{report.window_end}",
        "",
        f"{'arm':<12}{'n':>5}{'n(CV)':>7}{'mean CV':>10}{'sd CV':>9}",
    ]
    for arm in report.arm_summaries:
        lines.append(
            f"{arm.arm:<12}{arm.n_patients:>5}{arm.n_with_cv:>7}"
            f"{cell(arm.mean_cv, '{:.1f}'):>10}{cell(arm.sd_cv, '{:.1f}'):>9}"
        )
    lines.append("")
    if report.cv_comparison:
        c = report.cv_comparison
        lines.append(
            f"CV comparison [{c.method}] {c.label_a} vs {c.label_b}: "
            f"t={c.t_statistic:.3f}, df={c.df:.1f}, p={c.p_value:.4f}"
        )
    else:
        lines.append(f"CV comparison: unavailable ({report.unavailable.get('cv_comparison')})")
    if report.app_use_fit:
        f = report.app_use_fit
        lines.append(
            f"App use ~ CV: OR={f.odds_ratio:.3f} per CV point, "
            f"95% CI {f.ci95[0]:.3f}-{f.ci95[1]:.3f}"
            f"{'' if f.converged else ' (not converged)'}"
        )
    else:
        lines.append(f"App use ~ CV: unavailable ({report.unavailable.get('app_use_fit')})")
    if report.spearman_rho is not None:
        lines.append(
            f"Missed-rate vs game level: spearman rho={report.spearman_rho:.3f} "
            f"(pearson r={report.pearson_r:.3f}, n={report.correlation_n})"
        )
    else:
        lines.append(
            f"Missed-rate vs game level: unavailable ({report.unavailable.get('correlation')})"
        )
    ratio = report.missed_rate_ratio_vs_comparator
    if ratio is not None:
        lines.append(
            f"Missed-rate ratio, >=3-challenge app users vs {report.comparator_arm}: "
            f"{ratio:.3f} (reduction {100 * (1 - ratio):.1f}%)"
        )
    else:
        lines.append(
            "Missed-rate ratio vs comparator: unavailable "
            f"({report.unavailable.get('missed_rate_ratio_vs_comparator')})"
        )
    ratio_other = report.missed_rate_ratio_vs_other_app_users
    if ratio_other is not None:
        lines.append(
            f"Missed-rate ratio, >=3-challenge vs other app users: {ratio_other:.3f}"
        )
    else:
        lines.append(
            "Missed-rate ratio vs other app users: unavailable "
            f"({report.unavailable.get('missed_rate_ratio_vs_other_app_users')})"
        )
    lines.append("")
    lines.append("methods: " + "; ".join(f"{k}={v}" for k, v in sorted(report.methods.items())))
    return "\n".join(lines)
