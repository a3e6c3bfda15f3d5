"""Command line entry point.

Subcommands: simulate, ab, replay, report, anchor, serve. Every artifact is
JSON (stamped with a schema version) plus a rendered text table carrying
the same numbers. Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

import click

from . import sim as simmod
from .attribution import (
    calibration_curve,
    counterfactual_replay,
    plan_reports,
    rank_anchor_candidates,
)
from .core import PlanRegistry
from .scenarios import config_from_dict
from .sim import SCHEMA_VERSION, SimConfig
from .tracking import OUTCOME_METRICS, read_events_jsonl, write_events_jsonl


class DomainError(click.ClickException):
    exit_code = 1


def _load_config(path: str, seed: Optional[int], steps: Optional[int], pipeline: Optional[str]) -> SimConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise click.UsageError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise DomainError(f"config is not valid JSON: {exc}")
    if seed is not None:
        raw["seed"] = seed
    if steps is not None:
        raw["n_requests"] = steps
        raw["analysis_start"] = min(int(raw.get("analysis_start", 0)), max(steps - 1, 0))
    if pipeline is not None:
        raw["pipeline"] = pipeline
    try:
        return config_from_dict(raw)
    except Exception as exc:
        raise DomainError(f"invalid config: {exc}")


def _write_json(path: Path, payload: Mapping[str, Any]) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _table(headers: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    # Render numbers with str(), so the table carries exactly the values
    # present in the JSON artifacts.
    rows = [[("" if v is None else str(v)) for v in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in rows:
        widths = [max(w, len(cell)) for w, cell in zip(widths, row)]
    def fmt(cells):
        return "  ".join(cell.ljust(w) for cell, w in zip(cells, widths)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines)


def _summary_rows(summary: Mapping[str, Any]) -> list[list[Any]]:
    rows = [[m, summary[m]] for m in simmod.SUMMARY_METRICS]
    for ctype, share in summary["per_type_shares"].items():
        rows.append([f"share[{ctype}]", share])
    return rows


@click.group()
def main() -> None:
    """Blending-stage traffic allocation toolkit."""


@main.command()
@click.option("--config", "config_path", required=True, help="SimConfig or scenario JSON")
@click.option("--seed", type=int, default=None, help="override the config seed")
@click.option("--steps", type=int, default=None, help="override n_requests")
@click.option("--pipeline", type=click.Choice(["aligned", "legacy"]), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path(), help="output directory")
def simulate(config_path: str, seed: Optional[int], steps: Optional[int], pipeline: Optional[str], out_dir: str) -> None:
    """Run one simulation; writes events.jsonl, decisions.jsonl, summary.json."""
    config = _load_config(config_path, seed, steps, pipeline)
    run = simmod.run(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_events_jsonl(run.events, out / "events.jsonl")
    with (out / "decisions.jsonl").open("w", encoding="utf-8") as fh:
        for d in run.decisions:
            fh.write(json.dumps(d.to_dict(), separators=(",", ":")) + "\n")
    _write_json(out / "summary.json", run.summary)
    _write_json(out / "config.json", config.to_dict())
    click.echo(_table(["metric", "value"], _summary_rows(run.summary)))


@main.command()
@click.option("--config-a", "config_a_path", required=True)
@click.option("--config-b", "config_b_path", required=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
def ab(config_a_path: str, config_b_path: str, seed: Optional[int], out_dir: str) -> None:
    """Paired A/B comparison of two configs sharing seed, steps and k."""
    config_a = _load_config(config_a_path, seed, None, None)
    config_b = _load_config(config_b_path, seed, None, None)
    try:
        deltas = simmod.ab_compare(config_a, config_b)
    except simmod.ConfigMismatch as exc:
        raise DomainError(str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "ab_report.json", deltas)
    rows = []
    for metric in simmod.SUMMARY_METRICS:
        d = deltas[metric]
        rows.append([metric, d["a"], d["b"], d["delta"], d["delta_rel"]])
    for ctype, d in deltas["per_type_shares"].items():
        rows.append([f"share[{ctype}]", d["a"], d["b"], d["delta"], None])
    click.echo(_table(["metric", "a", "b", "delta", "delta_rel"], rows))
    if deltas.get("boost_ratio_reduction_pct") is not None:
        click.echo(f"boost-ratio reduction: {deltas['boost_ratio_reduction_pct']:.2f}%")


@main.command()
@click.option("--events", "events_path", required=True, type=click.Path())
@click.option("--plan", "plan_id", required=True)
@click.option("--out", "out_path", default=None, type=click.Path())
def replay(events_path: str, plan_id: str, out_path: Optional[str]) -> None:
    """Counterfactual replay of one plan over a logged run."""
    events = _read_events(events_path)
    result = counterfactual_replay(events, plan_id)
    payload = {"schema_version": SCHEMA_VERSION, "plan_id": plan_id, **result}
    if out_path:
        _write_json(Path(out_path), payload)
    click.echo(_table(["plan_id", "vv_lift", "cost"], [[plan_id, result["vv_lift"], result["cost"]]]))


@main.command()
@click.option("--events", "events_path", required=True, type=click.Path())
@click.option("--registry", "registry_path", required=True, type=click.Path(),
              help="registry JSON (e.g. the run's config.json plans or a registry dump)")
@click.option("--decisions", "decisions_path", default=None, type=click.Path(),
              help="decisions.jsonl from the same run; cross-checked against the event log")
@click.option("--window", "window_spec", default=None,
              help="start:end in request time, defaults to the whole log")
@click.option("--out", "out_path", default=None, type=click.Path())
def report(events_path: str, registry_path: str, decisions_path: Optional[str],
           window_spec: Optional[str], out_path: Optional[str]) -> None:
    """Per-plan cost, lift and ROI over a closed window."""
    events = _read_events(events_path)
    registry = _read_registry(registry_path)
    if decisions_path:
        _check_decisions_consistency(events, decisions_path)
    if window_spec:
        try:
            start_s, end_s = window_spec.split(":")
            start, end = float(start_s), float(end_s)
        except ValueError:
            raise click.UsageError("--window must look like start:end")
    else:
        if not events:
            raise DomainError("event log is empty")
        start = min(e.timestamp for e in events)
        end = max(e.timestamp for e in events) + 1.0
    reports = plan_reports(events, registry, start, end)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "window": {"start": start, "end": end},
        "reports": [r.to_dict() for r in reports],
    }
    if out_path:
        _write_json(Path(out_path), payload)
    click.echo(
        _table(
            ["plan_id", "exposure_share", "boost_spend", "cost", "vv_lift", "roi_vv"],
            [
                [r.plan_id, r.exposure_share, r.boost_spend, r.cost, r.vv_lift, r.roi_vv]
                for r in reports
            ],
        )
    )


@main.command()
@click.option("--events", "events_path", required=True, type=click.Path())
@click.option("--metrics", "metrics_csv", default=",".join(OUTCOME_METRICS), show_default=True)
@click.option("--bins", type=int, default=20, show_default=True)
@click.option("--window", "window_spec", default=None,
              help="start:end in request time; use it to skip the bootstrap "
                   "phase, whose scores are served under provisional alignment")
@click.option("--out", "out_dir", required=True, type=click.Path())
def anchor(events_path: str, metrics_csv: str, bins: int, window_spec: Optional[str], out_dir: str) -> None:
    """Calibration curves per metric, ranked by stability; emits curve CSVs."""
    events = _read_events(events_path)
    if window_spec:
        try:
            start_s, end_s = window_spec.split(":")
            start, end = float(start_s), float(end_s)
        except ValueError:
            raise click.UsageError("--window must look like start:end")
        events = [e for e in events if start <= e.timestamp < end]
    metrics = [m.strip() for m in metrics_csv.split(",") if m.strip()]
    curves = []
    for metric in metrics:
        try:
            curves.append(calibration_curve(events, metric, n_bins=bins))
        except Exception as exc:
            raise DomainError(f"calibration failed for {metric!r}: {exc}")
    ranked = rank_anchor_candidates(curves)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "ranking": [{"metric": c.metric, "stability": c.stability} for c in ranked],
    }
    _write_json(out / "anchor_ranking.json", payload)
    for curve in ranked:
        with (out / f"calibration_{curve.metric}.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["score_lo", "score_hi", "mean_score", "mean_outcome", "n", "calibration_error"])
            for b, err in zip(curve.bins, curve.calibration_errors):
                writer.writerow([b.score_lo, b.score_hi, b.mean_score, b.mean_outcome, b.n, err])
    click.echo(
        _table(
            ["rank", "metric", "stability"],
            [[i + 1, c.metric, c.stability] for i, c in enumerate(ranked)],
        )
    )


@main.command()
@click.option("--port", type=int, default=None, help="default 8800, or BLENDCTL_PORT")
@click.option("--config", "config_path", required=True)
@click.option("--data-dir", "data_dir", default=None, help="default BLENDCTL_DATA_DIR")
@click.option("--live/--idle", default=True, show_default=True, help="drive the simulator")
@click.option("--pace", type=float, default=200.0, show_default=True, help="requests per second, 0 = unthrottled")
@click.option("--ui-dir", default=None, help="static console assets to mount at /ui")
def serve(port: Optional[int], config_path: str, data_dir: Optional[str], live: bool, pace: float, ui_dir: Optional[str]) -> None:
    """Run the HTTP service (see docs/api.md for endpoints)."""
    import os

    import uvicorn

    from .service import create_app

    config = _load_config(config_path, None, None, None)
    port = port if port is not None else int(os.environ.get("BLENDCTL_PORT", "8800"))
    data_dir = data_dir if data_dir is not None else os.environ.get("BLENDCTL_DATA_DIR")
    default_ui = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    ui_path = Path(ui_dir) if ui_dir else (default_ui if default_ui.exists() else None)
    app = create_app(
        config,
        data_dir=Path(data_dir) if data_dir else None,
        live=live,
        pace=pace,
        ui_dir=ui_path,
    )
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")


def _read_events(path: str):
    try:
        return read_events_jsonl(Path(path))
    except FileNotFoundError:
        raise click.UsageError(f"events file not found: {path}")
    except Exception as exc:
        raise DomainError(f"malformed event log: {exc}")


def _check_decisions_consistency(events, decisions_path: str) -> None:
    """The event log is the source of truth; a supplied decisions file must
    describe the same requests with the same decompositions."""
    from collections import Counter

    event_counts = Counter(e.request_id for e in events)
    try:
        with Path(decisions_path).open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                decision = json.loads(line)
                rid = decision["request_id"]
                if rid not in event_counts:
                    raise DomainError(f"decisions file references unknown request {rid!r}")
                if len(decision["ranked"]) != event_counts[rid]:
                    raise DomainError(
                        f"decisions file disagrees with the event log on request {rid!r}"
                    )
    except FileNotFoundError:
        raise click.UsageError(f"decisions file not found: {decisions_path}")
    except json.JSONDecodeError as exc:
        raise DomainError(f"malformed decisions file: {exc}")


def _read_registry(path: str) -> PlanRegistry:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise click.UsageError(f"registry file not found: {path}")
    except json.JSONDecodeError as exc:
        raise DomainError(f"registry is not valid JSON: {exc}")
    try:
        if "plans" in raw and "version" not in raw:
            raw = {"plans": raw["plans"], "version": 1}
        return PlanRegistry.from_dict(_strip_controllers(raw))
    except Exception as exc:
        raise DomainError(f"invalid registry: {exc}")


def _strip_controllers(raw: Mapping[str, Any]) -> dict[str, Any]:
    plans = [{k: v for k, v in p.items() if k != "controller"} for p in raw.get("plans", [])]
    return {"plans": plans, "version": raw.get("version", 1)}


if __name__ == "__main__":
    main()
