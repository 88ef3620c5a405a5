"""Operator entry point: validate questionnaires, run simulations, serve,
and emit rate/summary/funnel/duration reports."""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from . import analytics, outreach, questionnaire as qn, sim as simmod
from .turntaking import TurnTakingConfig


@click.group()
def main():
    """AI telephone survey toolkit."""


@main.command()
@click.argument("path", type=click.Path())
def validate(path):
    """Validate a questionnaire file; exit 0 iff valid."""
    try:
        q = qn.load(path)
    except qn.QuestionnaireFormatError as exc:
        click.echo(f"format error: {exc}", err=True)
        sys.exit(2)
    report = qn.validate(q)
    if not report:
        click.echo(f"{q.id}: valid ({len(q.nodes)} nodes)")
        sys.exit(0)
    for violation in report:
        where = violation.node_id or "(questionnaire)"
        click.echo(f"{where}: {violation.reason}")
    sys.exit(1)


@main.command()
@click.option("--questionnaire", "q_path", required=True, type=click.Path())
@click.option("--contacts", "contacts_path", type=click.Path(), default=None,
              help="contacts.csv (first_name,phone,timezone); defaults to synthetic contacts")
@click.option("--personas", "personas_path", type=click.Path(), default=None)
@click.option("-n", "n_contacts", type=int, default=100, show_default=True,
              help="synthetic contact count when --contacts is omitted")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--method", type=click.Choice(["direct_call", "webcall_invite"]),
              default="direct_call", show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def simulate(q_path, contacts_path, personas_path, n_contacts, seed, method, out_dir):
    """Run a seeded campaign simulation and write its artifacts."""
    try:
        q = qn.load(q_path)
    except qn.QuestionnaireFormatError as exc:
        click.echo(f"format error: {exc}", err=True)
        sys.exit(2)
    violations = qn.validate(q)
    if violations:
        click.echo("questionnaire invalid; run `survey validate` for details", err=True)
        sys.exit(1)

    campaign = outreach.Campaign(campaign_id="sim", questionnaire_id=q.id)
    if contacts_path:
        text = Path(contacts_path).read_text(encoding="utf-8")
        result = outreach.ingest_contacts(text, "sim")
        for row in result.rejected:
            click.echo(f"rejected line {row.line_no}: {row.reason}", err=True)
        campaign.contacts = result.contacts
    else:
        campaign.contacts = simmod.make_contacts(n_contacts)

    mix = simmod.load_personas(personas_path) if personas_path else simmod.DEFAULT_PERU_MIX
    run = simmod.run_simulation(
        campaign,
        q,
        mix,
        TurnTakingConfig(),
        seed,
        method=outreach.Method(method),
        out_dir=out_dir,
    )
    click.echo(f"attempts: {len(run.attempts)}")
    for outcome, count in run.tally().items():
        click.echo(f"  {outcome}: {count}")


@main.command()
@click.argument("which", type=click.Choice(["rates", "summary", "funnel", "durations"]))
@click.option("--data", "data_dir", type=click.Path(), default=None,
              help="simulation output directory (outcomes.csv, transcripts/)")
@click.option("--counts", "counts_path", type=click.Path(), default=None,
              help="rates only: CSV with method,attempts,fully_completed,partial_76_plus")
@click.option("--questionnaire", "q_path", type=click.Path(), default=None,
              help="summary only: used to identify open-ended items")
@click.option("--out", "out_path", type=click.Path(), default=None)
def report(which, data_dir, counts_path, q_path, out_path):
    """Print response rates, a conversation-metric summary, the funnel, or
    the completed-interview duration histogram."""
    if which == "rates":
        _report_rates(data_dir, counts_path)
    elif which == "funnel":
        _report_funnel(data_dir, out_path)
    elif which == "summary":
        _report_summary(data_dir, q_path, out_path)
    else:
        _report_durations(data_dir, out_path)


def _fail(message: str, code: int = 1):
    click.echo(message, err=True)
    sys.exit(code)


def _report_rates(data_dir, counts_path):
    if counts_path:
        with open(counts_path, encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            _fail("empty counts file")
        for row in rows:
            rates = analytics.response_rates(
                int(row["attempts"]),
                int(row["fully_completed"]),
                int(row["partial_76_plus"]),
            )
            click.echo(
                f"{row['method']}: attempts {rates.attempts} "
                f"fully {rates.fully_completed} partial(>=76%) "
                f"{rates.partial_76_plus_cumulative} "
                f"RR1 {rates.rr1_display()} RR2 {rates.rr2_display()}"
            )
        return
    outcomes = _load_outcomes(data_dir)
    rates = analytics.rates_from_outcomes([o for o, _, _ in outcomes])
    click.echo(
        f"attempts {rates.attempts} fully {rates.fully_completed} "
        f"partial(>=76%) {rates.partial_76_plus_cumulative} "
        f"RR1 {rates.rr1_display()} RR2 {rates.rr2_display()}"
    )


def _load_outcomes(data_dir):
    if not data_dir:
        _fail("need --data or --counts")
    path = Path(data_dir) / "outcomes.csv"
    if not path.exists():
        _fail(f"no outcomes.csv in {data_dir}")
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        _fail(f"empty data dir {data_dir}")
    return [
        (analytics.CallOutcome(r["outcome"]), r["session_id"], float(r["progress"]))
        for r in rows
    ]


def _load_transcript(data_dir, session_id):
    path = Path(data_dir) / "transcripts" / f"{session_id}.jsonl"
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _report_funnel(data_dir, out_path):
    outcomes = _load_outcomes(data_dir)
    funnel = analytics.sankey_flow([o for o, _, _ in outcomes])
    text = json.dumps(funnel.to_json(), ensure_ascii=False, sort_keys=True, indent=2)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
    else:
        click.echo(text)


def _completed_metrics(data_dir, q_path):
    open_ids = set()
    if q_path:
        q = qn.load(q_path)
        open_ids = {n.id for n in q.nodes if n.kind is qn.Kind.OPEN_ENDED}
    metrics = []
    for outcome, session_id, _ in _load_outcomes(data_dir):
        if outcome is analytics.CallOutcome.FULLY_COMPLETED and session_id:
            events = _load_transcript(data_dir, session_id)
            metrics.append(analytics.conversation_metrics(events, open_ids))
    return metrics


def _report_summary(data_dir, q_path, out_path):
    metrics = _completed_metrics(data_dir, q_path)
    if not metrics:
        _fail("no completed interviews in data dir")
    rows = analytics.summary_table(metrics)
    text = analytics.format_summary_table(rows)
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["metric", "min", "q1", "median", "mean", "q3", "max"])
            for row in rows:
                writer.writerow(
                    [row.metric, row.min, row.q1, row.median, row.mean, row.q3, row.max]
                )
    click.echo(f"completed interviews: {len(metrics)}")
    click.echo(text)


def _report_durations(data_dir, out_path):
    durations = []
    for outcome, session_id, _ in _load_outcomes(data_dir):
        if outcome is analytics.CallOutcome.FULLY_COMPLETED and session_id:
            events = _load_transcript(data_dir, session_id)
            durations.append(analytics.transcript_duration_ms(events))
    if not durations:
        click.echo("0 interviews")
        return
    rows = analytics.duration_histogram(durations)
    lines = ["minute_bin_start,count"] + [
        f"{r['minute_bin_start']},{r['count']}" for r in rows
    ]
    text = "\n".join(lines)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
    else:
        click.echo(text)


@main.command()
@click.option("--data", "data_dir", type=click.Path(), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8070, show_default=True)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON file with turn-taking overrides")
@click.option("--static", "static_dir", type=click.Path(), default=None,
              help="web client bundle to serve (e.g. frontend/static)")
def serve(data_dir, host, port, config_path, static_dir):
    """Run the session server."""
    import uvicorn

    from .server import create_app

    turn_config = TurnTakingConfig()
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            turn_config = TurnTakingConfig(**json.load(fh))
    app = create_app(data_dir, turn_config, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
