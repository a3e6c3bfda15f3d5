"""Acceptance suite: one test per release criterion, at pinned tolerances.

Each test prints one PASS/FAIL line (visible with pytest -s). Seed sweeps
run the full simulator, so this module is the slow part of the suite; see
the README for expected runtimes.
"""

from __future__ import annotations

import json
import multiprocessing as mp
import threading
import time

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from blendctl import sim
from blendctl.alignment import AlignmentParams, AnchorSample, align_score, bootstrap_alignment
from blendctl.attribution import calibration_curve, counterfactual_replay, plan_reports, rank_anchor_candidates
from blendctl.blending import BlendRequest, blend
from blendctl.cli import main as cli_main
from blendctl.core import Candidate, Plan, PlanRegistry, Selector
from blendctl.scenarios import (
    scenario_ablation,
    scenario_anchor,
    scenario_default,
    scenario_delivery,
    scenario_inflation,
)
from blendctl.tracking import OUTCOME_METRICS

N_SEEDS = 20
PASS_SEEDS = 19


def report(name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPT {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def _pool() -> mp.pool.Pool:
    return mp.get_context("fork").Pool(processes=2)


# -- workers (top level for pickling) -----------------------------------------


def _delivery_seed(seed: int) -> tuple[int, float, float]:
    t0 = time.time()
    run = sim.run(scenario_delivery(seed), retain_events=False)
    ticks = [t for t in run.controller_trace if t.plan_id == "ad_delivery"]
    mean_share = float(np.mean([t.measured for t in ticks[-300:]]))
    return seed, mean_share, time.time() - t0


def _inflation_seed(seed: int) -> tuple[int, float, float]:
    uni = sim.run(scenario_inflation(seed), retain_events=False)
    leg = sim.run(scenario_inflation(seed, pipeline="legacy"), retain_events=False)
    deltas = sim.compare_summaries(leg.summary, uni.summary)
    reduction = deltas["boost_ratio_reduction_pct"]
    share_gap = max(abs(v["delta"]) for v in deltas["per_type_shares"].values())
    return seed, float(reduction), float(share_gap)


def _ablation_seed(seed: int) -> tuple[int, bool, bool]:
    cfg = scenario_ablation(seed)
    run = sim.run(cfg)
    start = float(cfg.bootstrap_requests + cfg.analysis_start)
    end = float(cfg.bootstrap_requests + cfg.n_requests)
    reports = plan_reports(run.events, cfg.registry(), start, end)
    rois = {r.plan_id: r.roi_vv for r in reports}
    waste_lowest = (
        all(v is not None for v in rois.values())
        and min(rois, key=lambda p: rois[p]) == "promo_push"
    )
    without = sim.run(scenario_ablation(seed, include_waste=False), retain_events=False)
    improves = without.summary["valued_score"] > run.summary["valued_score"]
    return seed, waste_lowest, improves


def _anchor_seed(seed: int) -> tuple[int, bool, bool]:
    cfg = scenario_anchor(seed)
    run = sim.run(cfg)
    events = [e for e in run.events if e.timestamp >= cfg.bootstrap_requests]
    curves = [calibration_curve(events, m, n_bins=20) for m in OUTCOME_METRICS]
    ranked = [c.metric for c in rank_anchor_candidates(curves)]
    return (
        seed,
        ranked[0] == "effective_completion",
        set(ranked[3:]) == {"buy", "interaction", "slide"},
    )


# -- criteria ------------------------------------------------------------------


class TestOrderPreservation:
    def test_alignment_preserves_argsort(self):
        rng = np.random.default_rng(100)
        batches = 10_000
        failures = 0
        for _ in range(batches):
            n = int(rng.integers(2, 30))
            raws = rng.lognormal(float(rng.uniform(-1, 1)), float(rng.uniform(0.1, 1.0)), size=n)
            params = AlignmentParams(
                mu_score=float(rng.uniform(1e-3, 10.0)), mu_anchor=float(rng.uniform(1e-3, 1.0))
            )
            aligned = np.array([align_score(float(r), params) for r in raws])
            if np.argsort(raws, kind="stable").tolist() != np.argsort(aligned, kind="stable").tolist():
                failures += 1
        report("order-preservation", failures == 0, f"{batches} batches, {failures} argsort mismatches")


class TestMeanRestoration:
    def test_bootstrap_mean_restores_anchor(self):
        rng = np.random.default_rng(101)
        n = 100_000
        raws = rng.lognormal(0.0, 0.6, size=n)
        outcomes = (rng.random(n) < 0.31).astype(float)
        samples = [AnchorSample(float(r), float(o)) for r, o in zip(raws, outcomes)]
        params = bootstrap_alignment(samples)
        mean_aligned = sum(align_score(s.raw_score, params) for s in samples) / n
        rel = abs(mean_aligned - params.mu_anchor) / params.mu_anchor
        report("mean-restoration", rel <= 1e-9, f"relative error {rel:.2e} over {n} samples")


class TestAdditivityAndAttribution:
    def test_additivity_exact_and_replay_matches_oracle(self):
        t0 = time.time()
        cfg = scenario_default(0)
        run = sim.run(cfg)
        n_events = len(run.events)
        assert n_events >= 100_000, f"run produced only {n_events} events"
        bad = 0
        for d in (item for decision in run.decisions for item in decision.ranked):
            if d.recompute_final() != d.final:
                bad += 1
        additivity_ok = bad == 0

        from test_attribution import brute_force_replay, events_from_decision

        rng = np.random.default_rng(102)
        params = AlignmentParams(mu_score=1.0, mu_anchor=1.0)
        selectors = [
            Selector(content_type="ad"),
            Selector(content_type="cold_start"),
            Selector(required_tags=frozenset({"promo"})),
        ]
        mismatches = 0
        for trial in range(10_000):
            n = int(rng.integers(1, 7))
            k = int(rng.integers(1, n + 1))
            candidates = tuple(
                Candidate(
                    id=f"c{i}",
                    content_type=("ad", "organic", "cold_start")[int(rng.integers(0, 3))],
                    raw_score=float(rng.random()),
                    tags=frozenset({"promo"}) if rng.random() < 0.3 else frozenset(),
                )
                for i in range(n)
            )
            n_plans = int(rng.integers(1, 4))
            plans = tuple(
                Plan(
                    plan_id=f"p{j}",
                    selector=selectors[int(rng.integers(0, 3))],
                    weight=float(rng.uniform(-0.5, 1.5)),
                    bias=float(rng.uniform(-0.2, 0.4)),
                    mode="hybrid",
                    enabled=bool(rng.random() > 0.1),
                )
                for j in range(n_plans)
            )
            registry = PlanRegistry(plans=plans)
            request = BlendRequest(request_id=f"t{trial}", candidates=candidates, k=k)
            decision = blend(request, registry, params)
            events = events_from_decision(decision)
            target = f"p{int(rng.integers(0, n_plans))}"
            got = counterfactual_replay(events, target)
            want_lift, want_cost = brute_force_replay([request], registry, params, target, k)
            if got["vv_lift"] != want_lift or abs(got["cost"] - want_cost) > 1e-9:
                mismatches += 1
        elapsed = time.time() - t0
        ok = additivity_ok and mismatches == 0 and elapsed <= 120.0
        report(
            "additivity-attribution",
            ok,
            f"{n_events} events, {bad} additivity violations; "
            f"10000 replay instances, {mismatches} oracle mismatches; {elapsed:.0f}s",
        )


class TestFigureOneReductions:
    def test_pid_and_boost_modes_reduce_to_reference_sorts(self):
        rng = np.random.default_rng(103)
        params = AlignmentParams(mu_score=1.0, mu_anchor=1.0)
        pid_bad = 0
        for _ in range(1000):
            bias = float(rng.random())
            n = int(rng.integers(2, 16))
            candidates = tuple(
                Candidate(f"c{i:02d}", "ad" if rng.random() < 0.4 else "organic", float(rng.random()), frozenset())
                for i in range(n)
            )
            registry = PlanRegistry(plans=(Plan("p", Selector(content_type="ad"), 0.0, bias, "pid_delivered", 0.1),))
            decision = blend(BlendRequest("r", candidates, 3), registry, params)
            want = sorted(candidates, key=lambda c: (-(c.raw_score + (bias if c.content_type == "ad" else 0.0)), c.id))
            if [d.candidate_id for d in decision.ranked] != [c.id for c in want]:
                pid_bad += 1
        boost_bad = 0
        for _ in range(1000):
            w = float(rng.random() * 2)
            n = int(rng.integers(2, 16))
            candidates = tuple(
                Candidate(f"c{i:02d}", "cold_start" if rng.random() < 0.4 else "organic", float(rng.random()), frozenset())
                for i in range(n)
            )
            registry = PlanRegistry(plans=(Plan("p", Selector(content_type="cold_start"), w, 0.0, "static"),))
            decision = blend(BlendRequest("r", candidates, 3), registry, params)
            want = sorted(
                candidates,
                key=lambda c: (-(c.raw_score * (1 + (w if c.content_type == "cold_start" else 0))), c.id),
            )
            if [d.candidate_id for d in decision.ranked] != [c.id for c in want]:
                boost_bad += 1
        ok = pid_bad == 0 and boost_bad == 0
        report("fig1-reductions", ok, f"pid mode {pid_bad}/1000 bad, boost mode {boost_bad}/1000 bad")


class TestPidConvergence:
    def test_twenty_seed_convergence(self):
        with _pool() as pool:
            results = pool.map(_delivery_seed, range(N_SEEDS))
        target = 0.10
        passing = [s for s, share, _ in results if abs(share - target) <= 0.02]
        slowest = max(dt for _, _, dt in results)
        ok = len(passing) >= PASS_SEEDS and slowest <= 60.0
        shares = [round(share, 4) for _, share, _ in results]
        report(
            "pid-convergence",
            ok,
            f"{len(passing)}/{N_SEEDS} seeds within +-0.02 of {target}, slowest {slowest:.0f}s, shares {shares}",
        )


class TestInflationReduction:
    def test_twenty_seed_reduction_with_matched_shares(self):
        with _pool() as pool:
            results = pool.map(_inflation_seed, range(N_SEEDS))
        passing = [s for s, red, gap in results if red >= 50.0 and gap <= 0.02]
        detail = [(s, round(red, 1), round(gap, 4)) for s, red, gap in results]
        ok = len(passing) >= PASS_SEEDS
        report("inflation-reduction", ok, f"{len(passing)}/{N_SEEDS} seeds; (seed, reduction%, share gap): {detail}")


class TestAblation:
    def test_twenty_seed_wasteful_plan(self):
        with _pool() as pool:
            results = pool.map(_ablation_seed, range(N_SEEDS))
        passing = [s for s, lowest, improves in results if lowest and improves]
        ok = len(passing) >= PASS_SEEDS
        report(
            "ablation",
            ok,
            f"{len(passing)}/{N_SEEDS} seeds rank the wasteful plan lowest and improve on removal",
        )


class TestAnchorSelection:
    def test_twenty_seed_metric_ranking(self, tmp_path):
        with _pool() as pool:
            results = pool.map(_anchor_seed, range(N_SEEDS))
        passing = [s for s, first, bottom in results if first and bottom]
        # curve CSVs are part of the criterion: emit them for one seed
        cfg = scenario_anchor(0)
        run = sim.run(cfg)
        events = [e for e in run.events if e.timestamp >= cfg.bootstrap_requests]
        import csv as _csv

        for metric in OUTCOME_METRICS:
            curve = calibration_curve(events, metric, n_bins=20)
            with (tmp_path / f"calibration_{metric}.csv").open("w", newline="") as fh:
                w = _csv.writer(fh)
                w.writerow(["score_lo", "score_hi", "mean_score", "mean_outcome", "n", "error"])
                for b, err in zip(curve.bins, curve.calibration_errors):
                    w.writerow([b.score_lo, b.score_hi, b.mean_score, b.mean_outcome, b.n, err])
        csv_ok = all((tmp_path / f"calibration_{m}.csv").exists() for m in OUTCOME_METRICS)
        ok = len(passing) >= PASS_SEEDS and csv_ok
        report(
            "anchor-selection",
            ok,
            f"{len(passing)}/{N_SEEDS} seeds rank completion first with buy/interaction/slide bottom-3; CSVs emitted",
        )


class TestServiceCorrectness:
    def test_snapshot_hammer_and_whatif_purity(self):
        from blendctl.service import create_app
        from blendctl.sim import ScoreComponent, SimConfig

        cfg = SimConfig(
            seed=0,
            n_requests=10_000,
            candidates_per_request=12,
            k=4,
            content_mix={"organic": 0.8, "ad": 0.15, "cold_start": 0.05},
            score_model={
                "organic": (ScoreComponent(1.0, 0.0, 0.45),),
                "ad": (ScoreComponent(1.0, -0.9, 0.55),),
                "cold_start": (ScoreComponent(1.0, -0.35, 0.45),),
            },
            plans=(
                Plan("ad_delivery", Selector(content_type="ad"), 0.0, 0.0, "pid_delivered", 0.15),
                Plan("cs_boost", Selector(content_type="cold_start"), 0.2),
            ),
            control_tick=100,
            bootstrap_requests=200,
        )
        app = create_app(cfg, live=False)
        rng = np.random.default_rng(104)
        with TestClient(app) as client:
            state = app.state.service
            stop = threading.Event()

            def mutate():
                i = 0
                while not stop.is_set():
                    registry = client.get("/plans").json()
                    plan = next(p for p in registry["plans"] if p["plan_id"] == "cs_boost")
                    plan["weight"] = 0.05 + (i % 20) * 0.03
                    client.put(
                        "/plans/cs_boost",
                        json={"expected_version": registry["version"], "plan": plan},
                    )
                    i += 1

            writer = threading.Thread(target=mutate)
            writer.start()
            decisions = []
            try:
                for i in range(10_000):
                    raws = rng.random(4).tolist()
                    body = {
                        "request_id": f"hammer-{i}",
                        "k": 2,
                        "candidates": [
                            {
                                "id": f"c{j}",
                                "content_type": ("ad", "organic", "cold_start", "organic")[j],
                                "raw_score": raws[j],
                                "tags": [],
                            }
                            for j in range(4)
                        ],
                    }
                    resp = client.post("/blend", json=body)
                    decisions.append((body, resp.json()))
            finally:
                stop.set()
                writer.join()

            mismatches = 0
            for body, decision in decisions:
                registry = state.registry_at(decision["registry_version"])
                params = AlignmentParams.from_dict(decision["alignment_snapshot"])
                replayed = blend(BlendRequest.from_dict(body), registry, params)
                if replayed.to_dict() != decision:
                    mismatches += 1

            before = client.get("/status").json()["event_count"]
            for _ in range(25):
                client.post(
                    "/whatif",
                    json={
                        "overrides": {"cs_boost": {"weight": 0.9}},
                        "request": decisions[0][0],
                    },
                )
            after = client.get("/status").json()["event_count"]
        ok = mismatches == 0 and before == after
        report(
            "service-correctness",
            ok,
            f"{len(decisions)} hammered blends, {mismatches} reconstruction mismatches; "
            f"event count {before} -> {after} across 25 whatif calls",
        )


class TestDeterminism:
    def test_cli_simulate_byte_identical(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"scenario": "default", "seed": 11, "n_requests": 1500}))
        runner = CliRunner()
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            result = runner.invoke(
                cli_main, ["simulate", "--config", str(config), "--out", str(out)]
            )
            assert result.exit_code == 0, result.output
            outs.append((out / "events.jsonl").read_bytes())
        ok = outs[0] == outs[1] and len(outs[0]) > 0
        report("determinism", ok, f"two runs, {len(outs[0])} bytes each, identical={outs[0] == outs[1]}")
