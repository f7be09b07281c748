"""Command line entry points.

Local commands (``ingest``, ``replay``, ``synth``) work on files and
stores directly.  ``advise`` and ``history`` are thin HTTP clients for a
running service, so the engine has exactly one live entry point.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import sys
from pathlib import Path

import click
import httpx

from . import __version__
from .core.types import canonical_json
from .ingest.batch import build_cycles, normalize_rows, read_rows
from .ingest.mapping import DEFAULT_MAPPING, ColumnMapping
from .pipeline import records_from_ingested, records_from_store, write_cycles_to_store
from .replay.report import INTRA_ROWS, TRANSITION_ROWS, ReplayReport, replay_cycles
from .replay.synth import generate_cohort, load_records, save_records
from .rules.engine import AdvisoryEngine
from .service.app import create_app, load_rules_config
from .store.db import CycleStore

logger = logging.getLogger(__name__)

_STORE_SUFFIXES = {".db", ".sqlite", ".sqlite3"}


@click.group()
@click.version_option(__version__, prog_name="ivf-advisor")
def main() -> None:
    """Treatment-cycle decision support: service, ingestion, replay."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--store", "store_path", default=None, help="store file (default in-memory)")
@click.option("--config", "config_path", default=None, help="rules config JSON")
@click.option("--token", default=None, help="require this bearer token")
def serve(host: str, port: int, store_path: str | None, config_path: str | None, token: str | None) -> None:
    """Run the advisory HTTP service."""
    import uvicorn

    config = load_rules_config(config_path) if config_path else None
    app = create_app(store_path=store_path, config=config, token=token)
    uvicorn.run(app, host=host, port=port)


def _load_mapping(path: str | None) -> ColumnMapping:
    if path is None:
        return DEFAULT_MAPPING
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict) and isinstance(data.get("columns"), dict):
        data = data["columns"]
    if not isinstance(data, dict):
        raise ValueError("mapping config must be an object of canonical field -> aliases")
    return ColumnMapping.with_extras(data)


@main.command()
@click.option("--input", "input_path", required=True, help="CSV, JSON array, or JSONL export")
@click.option("--mapping", "mapping_path", default=None, help="column alias config JSON")
@click.option("--out", "out_path", required=True, help="store file (.db/.sqlite) or dataset file")
@click.option("--report", "report_path", default=None, help="write the ingest report here")
@click.option("--config", "config_path", default=None, help="rules config JSON for store folding")
@click.option("--default-age", default=35, show_default=True, type=int)
def ingest(
    input_path: str,
    mapping_path: str | None,
    out_path: str,
    report_path: str | None,
    config_path: str | None,
    default_age: int,
) -> None:
    """Normalize an export and load it into a store or dataset file.

    Exits 0 when every row was accepted, 2 when any row was rejected,
    and 1 on I/O failure.
    """
    try:
        rows = read_rows(input_path)
        mapping = _load_mapping(mapping_path)
    except (OSError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)

    result = normalize_rows(rows, mapping)
    cycles = build_cycles(result)
    warnings = list(result.warnings)

    out = Path(out_path)
    try:
        if out.suffix.lower() in _STORE_SUFFIXES:
            engine = AdvisoryEngine(load_rules_config(config_path))
            with CycleStore(out) as store:
                warnings += write_cycles_to_store(engine, store, cycles, default_age)
        else:
            records, more = records_from_ingested(cycles, default_age)
            warnings += more
            save_records(records, out)
    except (OSError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)

    report = {
        "input": str(input_path),
        "out": str(out),
        "total": result.total(),
        "accepted": len(result.accepted),
        "cycles": len(cycles),
        "rejected": [{"index": row.index, "reason": row.reason} for row in result.rejected],
        "warnings": warnings,
    }
    if report_path:
        try:
            Path(report_path).write_text(canonical_json(report) + "\n", encoding="utf-8")
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
    click.echo(
        f"{result.total()} rows: {len(result.accepted)} accepted, "
        f"{len(result.rejected)} rejected, {len(cycles)} cycles -> {out}"
    )
    for warning in warnings:
        click.echo(f"warning: {warning}", err=True)
    for row in result.rejected[:20]:
        click.echo(f"rejected row {row.index}: {row.reason}", err=True)
    if len(result.rejected) > 20:
        click.echo(f"... and {len(result.rejected) - 20} more rejected rows", err=True)
    if result.rejected:
        sys.exit(2)


def _parse_delay(value: str) -> int | tuple[int, ...]:
    days = tuple(int(part) for part in value.split("|"))
    if any(day < 0 for day in days):
        raise ValueError("delay days must be non-negative")
    return days[0] if len(days) == 1 else days


def _parse_synth_spec(spec: str) -> dict:
    params: dict = {"count": 100, "seed": 0, "trigger_delay_days": 0}
    for pair in spec.split(","):
        pair = pair.strip()
        if not pair:
            continue
        key, sep, value = pair.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {pair!r}")
        key = key.strip().lower()
        value = value.strip()
        if key == "seed":
            params["seed"] = int(value)
        elif key == "patients":
            params["count"] = int(value)
        elif key in ("delay", "trigger_delay", "trigger_delay_days"):
            params["trigger_delay_days"] = _parse_delay(value)
        else:
            raise ValueError(f"unknown synthetic parameter {key!r}")
    if params["count"] < 1:
        raise ValueError("patients must be >= 1")
    return params


def _render_csv(report: ReplayReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["section", "row", "field", "value"])
    for name in INTRA_ROWS:
        for field, value in report.intra[name].to_dict().items():
            writer.writerow(["intra", name, field, value])
    for name in TRANSITION_ROWS:
        for field, value in report.transitions[name].to_dict().items():
            writer.writerow(["transition", name, field, value])
    for offset in sorted(report.early_trigger_histogram):
        writer.writerow(
            ["early_trigger", offset, "cycles", report.early_trigger_histogram[offset]]
        )
    for count in sorted(report.consults_vs_oocytes):
        for field, value in report.consults_vs_oocytes[count].to_dict().items():
            writer.writerow(["consults", count, field, value])
    for field in ("cycles_total", "cycles_replayed", "visits_total"):
        writer.writerow(["summary", "", field, getattr(report, field)])
    return buffer.getvalue()


@main.command()
@click.option("--store", "store_path", default=None, help="replay treatments recorded in this store")
@click.option("--dataset", "dataset_path", default=None, help="replay a JSONL cycle dataset")
@click.option(
    "--synthetic",
    "synthetic_spec",
    default=None,
    help="generate and replay a cohort, e.g. seed=7,patients=200,delay=1|2",
)
@click.option("--config", "config_path", default=None, help="rules config JSON")
@click.option("--report", "report_path", default=None, help="write the report here instead of stdout")
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["json", "csv", "table"]),
    default="table",
    show_default=True,
)
def replay(
    store_path: str | None,
    dataset_path: str | None,
    synthetic_spec: str | None,
    config_path: str | None,
    report_path: str | None,
    fmt: str,
) -> None:
    """Replay recorded cycles and score the engine's agreement."""
    chosen = [value for value in (store_path, dataset_path, synthetic_spec) if value]
    if len(chosen) != 1:
        raise click.UsageError("pass exactly one of --store, --dataset, --synthetic")
    try:
        engine = AdvisoryEngine(load_rules_config(config_path))
        if store_path:
            with CycleStore(store_path) as store:
                records = records_from_store(store)
        elif dataset_path:
            records = load_records(dataset_path)
        else:
            params = _parse_synth_spec(synthetic_spec or "")
            records = generate_cohort(config=engine.config, **params)
    except (OSError, ValueError, KeyError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)

    report = replay_cycles(engine, records)
    if fmt == "json":
        rendered = canonical_json(report.to_dict()) + "\n"
    elif fmt == "csv":
        rendered = _render_csv(report)
    else:
        rendered = report.render_text() + "\n"

    if report_path:
        try:
            Path(report_path).write_text(rendered, encoding="utf-8")
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        click.echo(
            f"replayed {report.cycles_replayed}/{report.cycles_total} cycles -> {report_path}"
        )
    else:
        click.echo(rendered, nl=False)


@main.command()
@click.option("--patients", default=100, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--delay", "delay_spec", default="0", show_default=True, help="trigger delay days; a|b draws per cycle")
@click.option("--out", "out_path", required=True, help="dataset file to write (JSONL)")
@click.option("--config", "config_path", default=None, help="rules config JSON")
def synth(patients: int, seed: int, delay_spec: str, out_path: str, config_path: str | None) -> None:
    """Generate a synthetic replay dataset."""
    try:
        delay = _parse_delay(delay_spec)
        config = load_rules_config(config_path)
        records = generate_cohort(patients, seed=seed, trigger_delay_days=delay, config=config)
        save_records(records, out_path)
    except (OSError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"wrote {len(records)} cycles to {out_path}")


def _client(url: str, token: str | None) -> httpx.Client:
    headers = {"Authorization": f"Bearer {token}"} if token else {}
    return httpx.Client(base_url=url, headers=headers, timeout=30.0)


def _fail_from_response(response: httpx.Response) -> None:
    try:
        data = response.json()
        message = f"{data.get('code', 'error')}: {data.get('message', '')}"
        details = data.get("details") or []
    except ValueError:
        message = response.text
        details = []
    click.echo(f"error {response.status_code}: {message}", err=True)
    for detail in details:
        click.echo(f"  {detail}", err=True)
    sys.exit(1)


def _render_prescription(rx: dict | None) -> str:
    if not rx:
        return "none"
    parts = []
    if rx.get("gonadotropin_iu"):
        agent = rx.get("agent") or "gonadotropin"
        parts.append(f"{agent} {rx['gonadotropin_iu']} IU")
    if rx.get("clomid_mg"):
        parts.append(f"clomid {rx['clomid_mg']:g} mg")
    if rx.get("letrozole_mg"):
        parts.append(f"letrozole {rx['letrozole_mg']:g} mg")
    for med in rx.get("trigger_meds", []):
        parts.append(f"{med['agent']} x{med['dose']}")
    return ", ".join(parts) if parts else "none"


def _render_advice(data: dict) -> str:
    advice = data["advice"]
    decision = advice["decision"]
    lines = []
    headline = decision["kind"]
    if decision.get("scheme"):
        headline += f" ({decision['scheme']})"
    lines.append(f"Decision: {headline}")
    state = data["state"]
    lines.append(f"Block: {state['block']}" + (f", scheme {state['scheme']}" if state.get("scheme") else ""))
    plan = decision.get("trigger_plan")
    if plan:
        lines.append(
            f"Trigger: {plan['triggered_at']} + {plan['duration_hours']}h "
            f"-> retrieval {plan['scheduled_retrieval']}"
        )
    lines.append(f"Prescription: {_render_prescription(advice.get('prescription'))}")
    if advice.get("next_visit_in_days") is not None:
        lines.append(f"Next visit: in {advice['next_visit_in_days']} days")
    for alert in advice.get("alerts", []):
        lines.append(f"ALERT [{alert['kind']}] {alert['reason']} ({alert['rule_id']})")
    lines.append("Why:")
    for citation in advice.get("explanation", []):
        verdict = "pass" if citation["passed"] else "FAIL"
        detail = f" ({citation['detail']})" if citation.get("detail") else ""
        lines.append(
            f"  [{verdict}] {citation['rule_id']}: {citation['observed']} "
            f"vs {citation['threshold']}{detail}"
        )
    lines.append(f"Config: {data['config_hash'][:16]}")
    return "\n".join(lines)


@main.command()
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
@click.option("--token", default=None, envvar="IVF_ADVISOR_TOKEN")
@click.option("--patient", "patient_id", required=True)
@click.option("--cycle", "cycle_number", default=1, show_default=True, type=int)
@click.option("--visit", "visit_path", required=True, help="visit JSON file, or - for stdin")
@click.option("--dry-run", is_flag=True, help="compute advice without persisting")
@click.option("--json", "as_json", is_flag=True, help="print the raw response body")
def advise(
    url: str,
    token: str | None,
    patient_id: str,
    cycle_number: int,
    visit_path: str,
    dry_run: bool,
    as_json: bool,
) -> None:
    """Request advice for one visit from a running service."""
    try:
        raw = sys.stdin.read() if visit_path == "-" else Path(visit_path).read_text(encoding="utf-8")
        body = json.loads(raw)
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    try:
        with _client(url, token) as client:
            response = client.post(
                f"/patients/{patient_id}/cycles/{cycle_number}/advice",
                params={"dry_run": str(dry_run).lower()},
                json=body,
            )
    except httpx.HTTPError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    if response.status_code != 200:
        _fail_from_response(response)
    data = response.json()
    if as_json:
        click.echo(json.dumps(data, indent=2, sort_keys=True))
    else:
        click.echo(_render_advice(data))


def _summarize_visit(item: dict) -> str:
    visit = item["visit"]
    parts = [visit["visit_at"]]
    hormones = visit.get("hormones")
    if hormones:
        readings = ", ".join(
            f"{name} {hormones[name]:g}"
            for name in ("fsh", "lh", "e2", "p4")
            if hormones.get(name) is not None
        )
        parts.append(readings or "blood drawn")
    exam = visit.get("exam")
    if exam:
        total = sum(exam.get("bins", {}).values())
        parts.append(f"{total} follicles")
    treatment = item.get("treatment")
    if treatment:
        kind = treatment["decision"]["kind"]
        if treatment["decision"].get("scheme"):
            kind += f" ({treatment['decision']['scheme']})"
        parts.append(f"-> {kind} [{treatment['source']}]")
    else:
        parts.append("-> (no decision recorded)")
    return "  ".join(parts)


@main.command()
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
@click.option("--token", default=None, envvar="IVF_ADVISOR_TOKEN")
@click.option("--patient", "patient_id", required=True)
@click.option("--cycle", "cycle_number", default=1, show_default=True, type=int)
@click.option("--json", "as_json", is_flag=True, help="print the raw response body")
def history(
    url: str, token: str | None, patient_id: str, cycle_number: int, as_json: bool
) -> None:
    """Show a cycle's stored visits and decisions from a running service."""
    try:
        with _client(url, token) as client:
            response = client.get(f"/patients/{patient_id}/cycles/{cycle_number}")
    except httpx.HTTPError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    if response.status_code != 200:
        _fail_from_response(response)
    data = response.json()
    if as_json:
        click.echo(json.dumps(data, indent=2, sort_keys=True))
        return
    patient = data["patient"]
    click.echo(
        f"{patient['patient_id']} (age {patient['age_years']}), cycle {data['cycle_number']}: "
        f"{len(data['visits'])} visits"
    )
    for item in data["visits"]:
        click.echo(f"  {_summarize_visit(item)}")
    if data.get("retrieved_oocytes") is not None:
        click.echo(f"  retrieved oocytes: {data['retrieved_oocytes']}")


if __name__ == "__main__":
    main()
