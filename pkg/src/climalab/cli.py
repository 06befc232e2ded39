"""Command line front end.

`serve` and the `fixtures` subcommands work directly on a local home
directory; every other command talks HTTP to a running service, so the
CLI sees exactly what the web console sees.
"""

from __future__ import annotations

import csv
import functools
import json
import os
from pathlib import Path

import click
import httpx

from climalab.config import load_settings
from climalab.service.client import (
    TERMINAL_STAGES,
    ServiceClient,
    ServiceError,
)


def _home_candidate(obj) -> str:
    return (obj.get("home") or os.environ.get("CLIMALAB_HOME")
            or "./climalab-home")


def _settings(obj, **overrides):
    """Settings honoring flag > env > config file > default. A home seeded
    by `fixtures build` carries its own config.json; pick it up unless the
    operator pointed at an explicit file."""
    config = obj.get("config")
    if not config:
        candidate = Path(_home_candidate(obj)) / "config.json"
        if candidate.is_file():
            config = str(candidate)
    overrides["home"] = obj.get("home")
    return load_settings(config_file=config, overrides=overrides)


def _client(obj) -> ServiceClient:
    url = obj.get("url") or os.environ.get("CLIMALAB_URL")
    if not url:
        settings = _settings(obj).resolved()
        url = f"http://{settings.host}:{settings.port}"
    return ServiceClient(url)


def surfaced(fn):
    """Turn transport and service errors into clean command failures."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ServiceError as exc:
            raise click.ClickException(
                f"{exc.error}: {exc.detail}" if exc.detail else exc.error
            ) from exc
        except httpx.ConnectError as exc:
            raise click.ClickException(
                f"cannot reach the service ({exc}); is `climalab serve` "
                "running?"
            ) from exc

    return wrapper


def _event_line(event: dict) -> str:
    etype = event["event_type"]
    payload = event["payload"]
    if etype == "stage_changed":
        detail = f"{payload['from']} -> {payload['to']}"
        if payload.get("error"):
            detail += f": {payload['error']}"
    elif etype == "requirements_summarized":
        detail = payload["summary"][:90]
    elif etype == "candidate_plan_generated":
        detail = (f"candidate {payload['candidate']}: "
                  + ", ".join(payload["diagnostics"]))
    elif etype == "plan_proposed":
        detail = ", ".join(t["id"] for t in payload["plan"]["diagnostics"])
    elif etype == "review_submitted":
        verdict = "approved" if payload["approved"] else "rejected"
        detail = f"{verdict} by {payload['reviewer']}"
        if payload.get("comment"):
            detail += f": {payload['comment'][:60]}"
    elif etype == "tool_invoked":
        detail = (f"{payload['tool']} on {payload['alias']}/"
                  f"{payload['dataset']} ({payload['status']})")
    elif etype in ("task_started", "task_validated"):
        detail = payload["task"]
    elif etype == "task_code_ready":
        detail = f"{payload['task']} via {payload['source']}"
    elif etype == "debug_round":
        detail = f"{payload['task']} round {payload['round']}/{payload['cap']}"
    elif etype == "task_failed":
        detail = f"{payload['task']}: {payload.get('error', '')[:70]}"
    elif etype == "task_skipped":
        detail = (f"{payload['task']} blocked on "
                  + ", ".join(payload["blocked_on"]))
    elif etype == "figure_interpreted":
        detail = payload["figure"]
    elif etype == "committee_ready":
        detail = (f"sentiment {payload['sentiment']:+.2f} from "
                  f"{payload['experts']} experts")
    elif etype == "verdict_submitted":
        verdict = "approved" if payload["approved"] else "rejected"
        detail = f"{payload['task']} {verdict}"
    else:
        scalars = {k: v for k, v in payload.items()
                   if isinstance(v, (str, int, float, bool))}
        detail = " ".join(f"{k}={v}" for k, v in scalars.items())[:100]
    return f"[{event['seq']:>4}] {etype:<26} {detail}".rstrip()


def _follow(client: ServiceClient, run_id: str, from_seq: int,
            stop_on_review: bool = False) -> str:
    stage = ""
    for event in client.stream_events(run_id, from_seq=from_seq):
        click.echo(_event_line(event))
        if event["event_type"] == "stage_changed":
            stage = event["payload"]["to"]
            if stop_on_review and stage == "awaiting_review":
                break
    return stage


@click.group()
@click.option("--config", "config", type=click.Path(), default=None,
              help="Settings file (JSON); defaults to <home>/config.json "
                   "when present.")
@click.option("--home", default=None,
              help="Home directory holding catalog, data, library, runs.")
@click.option("--url", default=None,
              help="Service base URL for client commands.")
@click.pass_context
def main(ctx, config, home, url):
    """Climate analysis runs: plan, review, execute, assess."""
    ctx.obj = {"config": config, "home": home, "url": url}


@main.command()
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.pass_obj
def serve(obj, host, port):
    """Host the HTTP API over the configured home directory."""
    import uvicorn

    from climalab.service.runtime import build_app

    settings = _settings(obj, host=host, port=port).resolved()
    app = build_app(settings)
    click.echo(f"serving home {settings.home} on "
               f"http://{settings.host}:{settings.port}")
    uvicorn.run(app, host=settings.host, port=settings.port,
                log_level="warning")


# -- fixtures ---------------------------------------------------------------


@main.group()
def fixtures():
    """Provision deterministic homes and model reply corpora."""


@fixtures.command("build")
@click.option("--replies-dir", type=click.Path(), default=None,
              help="Model reply corpus; defaults to the bundled one.")
@click.pass_obj
def fixtures_build(obj, replies_dir):
    """Seed a complete home: catalog, grid data, tools, library, replies."""
    from climalab.fixtures.home import bundled_corpus_dir, seed_home

    home = _home_candidate(obj)
    settings = seed_home(
        home, llm_fixtures_dir=replies_dir or str(bundled_corpus_dir()))
    click.echo(f"home ready: {Path(home).resolve()}")
    click.echo(f"  catalog       {settings.catalog_path}")
    click.echo(f"  data          {settings.data_root}")
    click.echo(f"  model replies {settings.llm_fixtures_dir}")
    click.echo(f"next: climalab --home {home} serve")


@fixtures.command("record")
@click.option("--corpus-dir", type=click.Path(), default=None,
              help="Where to write the reply corpus; defaults to the "
                   "bundled package data directory.")
def fixtures_record(corpus_dir):
    """Re-record the model reply corpus by replaying the scripted runs."""
    from climalab.fixtures.builder import build_corpus

    summary = build_corpus(corpus_dir=corpus_dir, log=click.echo)
    click.echo(f"{summary['fixtures']} replies in {summary['corpus_dir']}")


# -- run lifecycle ------------------------------------------------------------


@main.command()
@click.option("--query", "-q", required=True,
              help="Natural language analysis request.")
@click.option("--auto-approve", is_flag=True,
              help="Skip the human review gate.")
@click.option("--workers", type=int, default=None,
              help="Parallel task workers for this run.")
@click.option("--experts", type=int, default=None,
              help="Committee size for the impact assessment.")
@click.option("--document", "documents", multiple=True,
              type=click.Path(exists=True),
              help="Attach a text file to the query (repeatable).")
@click.option("--watch/--no-watch", default=True,
              help="Stream events until the run parks or finishes.")
@click.pass_obj
@surfaced
def run(obj, query, auto_approve, workers, experts, documents, watch):
    """Start an analysis run from a natural language query."""
    attached = [
        {"title": Path(p).name,
         "text": Path(p).read_text(encoding="utf-8")}
        for p in documents
    ]
    with _client(obj) as client:
        created = client.create_run(
            query, attached_documents=attached, auto_approve=auto_approve,
            worker_count=workers, expert_count=experts,
        )
        run_id = created["run_id"]
        click.echo(f"run {run_id}")
        if not watch:
            return
        stage = _follow(client, run_id, from_seq=1,
                        stop_on_review=not auto_approve)
        if stage == "awaiting_review":
            click.echo(f"plan awaits review: climalab review {run_id} "
                       "--approve | --reject --comment ...")
        elif stage == "failed":
            snapshot = client.run(run_id)
            raise click.ClickException(
                f"run failed during {snapshot['failed_stage']}: "
                f"{snapshot['error']}"
            )
        elif stage == "completed":
            click.echo(f"report: climalab report {run_id}")


@main.command()
@click.argument("run_id", required=False)
@click.pass_obj
@surfaced
def show(obj, run_id):
    """Show one run's state, or list every run."""
    with _client(obj) as client:
        if not run_id:
            for row in client.list_runs():
                click.echo(f"{row['run_id']}  {row['stage']:<16} "
                           f"{row['query'][:60]}")
            return
        snapshot = client.run(run_id)
        click.echo(f"run {snapshot['run_id']}: {snapshot['stage']}")
        click.echo(f"query: {snapshot['query'].get('text', '')[:100]}")
        if snapshot["error"]:
            click.echo(f"error during {snapshot['failed_stage']}: "
                       f"{snapshot['error']}")
        for tid, status in snapshot["tasks"].items():
            click.echo(f"  {tid:<24} {status}")
        for tid, verdict in snapshot["verdicts"].items():
            mark = "approved" if verdict["approved"] else "rejected"
            line = f"  verdict {tid}: {mark}"
            if verdict["template_id"]:
                line += f" (template {verdict['template_id']})"
            click.echo(line)


@main.command()
@click.argument("run_id")
@click.option("--from", "from_seq", type=int, default=1,
              help="First sequence number to print.")
@click.option("--follow", is_flag=True, help="Tail the live stream.")
@click.pass_obj
@surfaced
def events(obj, run_id, from_seq, follow):
    """Print a run's event log."""
    with _client(obj) as client:
        if follow:
            _follow(client, run_id, from_seq)
        else:
            for event in client.events(run_id, from_seq=from_seq):
                click.echo(_event_line(event))


@main.command()
@click.argument("run_id")
@click.option("--approve/--reject", "approved", default=None)
@click.option("--comment", default="")
@click.option("--patch", type=click.Path(exists=True), default=None,
              help="JSON file of plan edits, applied on approval.")
@click.option("--reviewer", default="operator")
@click.pass_obj
@surfaced
def review(obj, run_id, approved, comment, patch, reviewer):
    """Approve or reject the proposed plan."""
    if approved is None and patch is not None:
        approved = True  # edits only make sense on an approval
    if approved is None:
        raise click.UsageError("pass --approve, --reject, or --patch")
    edits = (json.loads(Path(patch).read_text(encoding="utf-8"))
             if patch else None)
    with _client(obj) as client:
        out = client.submit_review(run_id, approved, reviewer=reviewer,
                                   comment=comment, edits=edits)
    click.echo(f"run {run_id}: {out['stage']}")


@main.command()
@click.argument("run_id")
@click.argument("task_id")
@click.option("--approve/--reject", "approved", default=None)
@click.option("--comment", default="")
@click.option("--reviewer", default="operator")
@click.pass_obj
@surfaced
def verdict(obj, run_id, task_id, approved, comment, reviewer):
    """Record the expert verdict on one task's outputs."""
    if approved is None:
        raise click.UsageError("pass --approve or --reject")
    with _client(obj) as client:
        out = client.submit_verdict(run_id, task_id, approved,
                                    reviewer=reviewer, comment=comment)
    if out.get("template_id"):
        click.echo(f"template {out['template_id']} promoted")
    else:
        click.echo(f"verdict recorded for {task_id}")


@main.command()
@click.argument("run_id")
@click.option("--committee", "committee", is_flag=True,
              help="Print the committee assessment instead.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
@surfaced
def report(obj, run_id, committee, as_json):
    """Print a run's synthesized report as Markdown."""
    with _client(obj) as client:
        fetch = client.committee if committee else client.report
        doc = fetch(run_id, markdown=not as_json)
    click.echo(json.dumps(doc, indent=1) if as_json else doc)


@main.command()
@click.argument("run_id")
@click.option("--output", "-o", type=click.Path(), default=None,
              help="Destination zip; defaults to <run_id>.zip")
@click.pass_obj
@surfaced
def export(obj, run_id, output):
    """Download the run archive: events, plan, artifacts, reports."""
    dest = Path(output or f"{run_id}.zip")
    with _client(obj) as client:
        path = client.export(run_id, dest)
    click.echo(str(path))


# -- catalog ------------------------------------------------------------------


@main.group()
def catalog():
    """Query the dataset catalog."""


@catalog.command("query")
@click.option("--activity", default=None)
@click.option("--experiment", default=None)
@click.option("--source-model", default=None)
@click.option("--ensemble-member", default=None)
@click.option("--variable", default=None)
@click.option("--frequency", default=None)
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
@surfaced
def catalog_query(obj, activity, experiment, source_model, ensemble_member,
                  variable, frequency, as_json):
    """List datasets matching the given facets."""
    with _client(obj) as client:
        rows = client.catalog_query(
            activity=activity, experiment=experiment,
            source_model=source_model, ensemble_member=ensemble_member,
            variable=variable, frequency=frequency,
        )
    if as_json:
        click.echo(json.dumps(rows, indent=1))
        return
    for row in rows:
        span = "-".join(str(y) for y in row["time_range"])
        click.echo(f"{row['source_model']:<14} {row['experiment']:<12} "
                   f"{row['variable']:<5} {row['frequency']:<8} "
                   f"{row['units']:<7} {span:<10} {row['uri']}")
    click.echo(f"{len(rows)} datasets")


# -- library ------------------------------------------------------------------


@main.group()
def library():
    """Inspect and manage the knowledge library."""


@library.command("list")
@click.option("--kind", default=None,
              help="plan, template, tool_doc, or note")
@click.option("--status", default=None, help="draft or validated")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
@surfaced
def library_list(obj, kind, status, as_json):
    """List library records, optionally filtered."""
    with _client(obj) as client:
        records = client.library_records(kind=kind, status=status)
    if as_json:
        click.echo(json.dumps(records, indent=1))
        return
    for rec in records:
        click.echo(f"{rec['id']:<44} {rec['kind']:<9} {rec['status']:<10} "
                   f"{rec['summary'][:56]}")
    click.echo(f"{len(records)} records")


@library.command("promote")
@click.argument("record_id")
@click.pass_obj
@surfaced
def library_promote(obj, record_id):
    """Mark a draft record validated."""
    with _client(obj) as client:
        records = client.library_records()
        rec = next((r for r in records if r["id"] == record_id), None)
        if rec is None:
            raise click.ClickException(f"no record {record_id}")
        if rec["status"] == "validated":
            click.echo(f"{record_id} already validated")
            return
        client.add_library_record(
            id=rec["id"], kind=rec["kind"], summary=rec["summary"],
            payload=rec["payload"], status="validated",
            provenance=rec["provenance"], run_ref=rec["run_ref"],
            replace=True,
        )
    click.echo(f"{record_id} validated")


@library.command("seed")
@click.pass_obj
@surfaced
def library_seed(obj):
    """Load the bundled starter plan records into the service library."""
    from climalab.fixtures.home import SEED_PLANS

    with _client(obj) as client:
        for record_id, summary in SEED_PLANS:
            client.add_library_record(
                id=record_id, kind="plan", summary=summary,
                payload={"objective": summary}, status="validated",
            )
    click.echo(f"{len(SEED_PLANS)} plan records seeded")


# -- eval ----------------------------------------------------------------------


@main.group(name="eval")
def eval_group():
    """Work with the evaluation suite and reviewer scores."""


@eval_group.command("load")
@click.argument("csv_file", type=click.Path(exists=True))
@click.pass_obj
@surfaced
def eval_load(obj, csv_file):
    """Import reviewer scores from a CSV: task_id,reviewer,dimension,value."""
    scores = []
    with open(csv_file, newline="", encoding="utf-8") as fh:
        for row_num, row in enumerate(csv.reader(fh), start=1):
            if not row or (row_num == 1 and row[0] == "task_id"):
                continue
            if len(row) != 4:
                raise click.ClickException(
                    f"row {row_num}: expected 4 columns, got {len(row)}")
            try:
                value = int(row[3])
            except ValueError:
                raise click.ClickException(
                    f"row {row_num}: bad value {row[3]!r}") from None
            scores.append({
                "task_id": row[0].strip(), "reviewer": row[1].strip(),
                "dimension": row[2].strip(), "value": value,
            })
    with _client(obj) as client:
        recorded = client.post_scores(scores)
    click.echo(f"{recorded} scores recorded")


@eval_group.command("score")
@click.option("--task", required=True)
@click.option("--reviewer", required=True)
@click.option("--dimension", required=True)
@click.option("--value", type=int, required=True)
@click.pass_obj
@surfaced
def eval_score(obj, task, reviewer, dimension, value):
    """Record a single reviewer score."""
    with _client(obj) as client:
        client.post_scores([{
            "task_id": task, "reviewer": reviewer,
            "dimension": dimension, "value": value,
        }])
    click.echo("recorded")


@eval_group.command("report")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
@surfaced
def eval_report(obj, as_json):
    """Print the suite-level evaluation summary."""
    with _client(obj) as client:
        doc = client.eval_report()
    if as_json:
        click.echo(json.dumps(doc, indent=1))
        return
    click.echo(doc["headline"])
    click.echo("dimensions: " + " > ".join(doc["dimension_ranking"]))
    for level, count in doc["classification_counts"].items():
        click.echo(f"  {level:<16} {count}")


if __name__ == "__main__":
    main()
