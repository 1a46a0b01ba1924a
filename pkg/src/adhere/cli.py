"""Operator CLI: serve the API, close days, simulate cohorts, report, score.

The ADHERE_DATA environment variable, when set, overrides --data everywhere.
"""

from __future__ import annotations

import json
import os
from datetime import date
from pathlib import Path

import click

from .game import score_trace
from .report import render_text
from .service import AdherenceService, ManualClock
from .simulate import CohortConfig, export_cohort, paper_shaped_config, simulate_cohort
from .store import EventStore


def _data_dir(cli_value: str) -> Path:
    return Path(os.environ.get("ADHERE_DATA") or cli_value)


def _parse_window(window: str) -> tuple[date, date]:
    frm, to = window.split("..")
    return date.fromisoformat(frm), date.fromisoformat(to)


@click.group()
def main():
    """Medication-adherence engine: event store, game ledger, analytics."""


@main.command()
@click.option("--port", "-p", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data", default="./data", show_default=True, help="data directory (ADHERE_DATA overrides)")
@click.option("--sim-clock", default=None, metavar="RFC3339", help="run on a manual clock starting here; enables /admin endpoints")
def serve(port: int, host: str, data: str, sim_clock: str | None):
    """Serve the HTTP API (and the UI when ADHERE_UI_DIR is set)."""
    import uvicorn

    from .api import create_app

    store = EventStore(_data_dir(data))
    now_fn = ManualClock(sim_clock) if sim_clock else None
    service = AdherenceService(store, now_fn=now_fn)
    uvicorn.run(create_app(service), host=host, port=port)


@main.command("close-day")
@click.option("--date", "day", required=True, metavar="YYYY-MM-DD")
@click.option("--data", default="./data", show_default=True)
def close_day(day: str, data: str):
    """Fold every definitively-over day up to DATE into the game ledgers."""
    service = AdherenceService(EventStore(_data_dir(data)))
    results = service.close_day(date.fromisoformat(day))
    for pid, awards in sorted(results.items()):
        click.echo(f"{pid}: {len(awards)} award(s)")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="cohort config JSON; defaults to the built-in two-arm synthetic config")
@click.option("--out", required=True, type=click.Path(), help="data directory to write")
@click.option("--seed", type=int, default=None, help="override the config's master seed")
def simulate(config_path: str | None, out: str, seed: int | None):
    """Generate a synthetic cohort and export it as a platform data directory."""
    if config_path:
        config = CohortConfig.from_dict(json.loads(Path(config_path).read_text()))
    else:
        config = paper_shaped_config()
    if seed is not None:
        config = CohortConfig.from_dict({**config.to_dict(), "master_seed": seed})
    cohort = simulate_cohort(config)
    export_cohort(cohort, out)
    click.echo(
        f"wrote {config.total_patients} patients x {config.days} days "
        f"(seed {config.master_seed}) to {out}"
    )


@main.command()
@click.option("--data", default="./data", show_default=True)
@click.option("--window", required=True, metavar="FROM..TO")
@click.option("--text/--json", "as_text", default=False, show_default=True)
@click.option("--app-arm", default="app", show_default=True)
def report(data: str, window: str, as_text: bool, app_arm: str):
    """Render the cohort report over a date window."""
    start, end = _parse_window(window)
    service = AdherenceService(EventStore(_data_dir(data)))
    result = service.cohort_view(start, end, app_arm=app_arm)
    if as_text:
        click.echo(render_text(result))
    else:
        click.echo(json.dumps(result.to_dict(), indent=2))


@main.command()
@click.option("--trace", required=True, help="daily adherence bits, oldest first, e.g. 1111111")
def score(trace: str):
    """Score an adherence trace: points, challenges, milestone badges."""
    points, challenges, milestones = score_trace(trace)
    badge_list = ",".join(str(m) for m in sorted(milestones)) or "-"
    click.echo(f"points={points} challenges={challenges} milestones={badge_list}")


@main.command("import-labs")
@click.argument("file", type=click.Path(exists=True))
@click.option("--data", default="./data", show_default=True)
def import_labs(file: str, data: str):
    """Ingest a labs CSV (patient_id,draw_date,analyte,value_ng_ml)."""
    service = AdherenceService(EventStore(_data_dir(data)))
    accepted, rejected = service.ingest_labs(Path(file).read_text(encoding="utf-8"))
    click.echo(f"accepted={accepted} rejected={len(rejected)}")
    for line_no, reason in rejected:
        click.echo(f"  line {line_no}: {reason}")


if __name__ == "__main__":
    main()
