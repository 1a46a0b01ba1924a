"""Event-sourced medication-adherence engine for transplant patients:
dose scheduling, streak-based gamification, tacrolimus variability
analytics, and a reproducible cohort simulator."""

__version__ = "0.1.0"
