from __future__ import annotations

import numpy as np
import pytest

from blendctl.alignment import AlignmentParams, align_score
from blendctl.attribution import (
    InsufficientData,
    calibration_curve,
    counterfactual_replay,
    plan_reports,
    rank_anchor_candidates,
    roi,
)
from blendctl.blending import BlendRequest, blend
from blendctl.core import Candidate, Plan, PlanRegistry, Selector, UnknownPlan
from blendctl.tracking import ExposureEvent

from conftest import make_candidate, make_registry, make_static_plan


def events_from_decision(decision, content_types=None, ts=0.0, outcomes=None):
    """Turn a BlendDecision into the per-candidate log rows the sim writes."""
    rows = []
    for rank, d in enumerate(decision.ranked):
        exposed = rank < decision.exposed_k
        rows.append(
            ExposureEvent(
                request_id=decision.request_id,
                timestamp=ts,
                candidate_id=d.candidate_id,
                content_type=(content_types or {}).get(d.candidate_id, "organic"),
                decomposition=d,
                exposed=exposed,
                position=rank if exposed else None,
                outcomes=(outcomes or {}).get(d.candidate_id) if exposed else None,
            )
        )
    return rows


def brute_force_replay(requests, registry, params, removed_plan_id, k):
    """Independent oracle: recompute scores from raw inputs with the plan
    removed, fully re-sort, and diff the exposure sets. Displacement is
    floored at zero per request, like the replay under test."""
    vv_lift = 0
    cost = 0.0
    removed = registry.get(removed_plan_id)
    for request in requests:
        full = blend(request, registry, params)
        actual = {d.candidate_id for d in full.exposed()}
        scored = []
        aligned_of = {}
        members = set()
        for cand in request.candidates:
            aligned = align_score(cand.raw_score, params)
            aligned_of[cand.id] = aligned
            total = aligned
            for plan in registry.enabled_plans():
                if plan.plan_id == removed_plan_id:
                    if plan.selector.matches(cand):
                        members.add(cand.id)
                    continue
                if plan.selector.matches(cand):
                    total += plan.weight * aligned + plan.bias
            scored.append((-total, cand.id))
        scored.sort()
        cf = {cid for _, cid in scored[: min(k, len(scored))]}
        if not removed.enabled:
            members = set()
        vv_lift += len(actual & members) - len(cf & members)
        displaced = sum(aligned_of[c] for c in cf - actual)
        displaced -= sum(aligned_of[c] for c in (actual - cf) & members)
        cost += max(displaced, 0.0)
    return vv_lift, cost


@pytest.fixture
def boosted_scenario(identity_params):
    """The worked single-request example: A(0.5, boost 0.2), B(0.6), C(0.55), k=2."""
    registry = make_registry(make_static_plan("ad_push", ctype="ad", bias=0.2))
    request = BlendRequest(
        request_id="r1",
        candidates=(
            make_candidate("A", 0.5, ctype="ad"),
            make_candidate("B", 0.6),
            make_candidate("C", 0.55),
        ),
        k=2,
    )
    decision = blend(request, registry, identity_params)
    return registry, request, decision


class TestCounterfactualReplay:
    def test_worked_example(self, boosted_scenario, identity_params):
        registry, request, decision = boosted_scenario
        events = events_from_decision(decision)
        result = counterfactual_replay(events, "ad_push")
        # Actual top-2 {A, B}; without the boost the top-2 is {B, C}.
        assert result["vv_lift"] == 1
        assert result["cost"] == pytest.approx(0.55 - 0.5)

    def test_null_plan_changes_nothing(self, identity_params):
        registry = make_registry(make_static_plan("null", ctype="ad"))
        request = BlendRequest(
            request_id="r1",
            candidates=(make_candidate("A", 0.5, ctype="ad"), make_candidate("B", 0.6)),
            k=1,
        )
        decision = blend(request, registry, identity_params)
        result = counterfactual_replay(events_from_decision(decision), "null")
        assert result == {"vv_lift": 0, "cost": 0.0}

    def test_plan_without_members_in_log(self, boosted_scenario):
        _, _, decision = boosted_scenario
        result = counterfactual_replay(events_from_decision(decision), "ghost")
        assert result == {"vv_lift": 0, "cost": 0.0}

    def test_unknown_plan_with_registry(self, boosted_scenario):
        registry, _, decision = boosted_scenario
        with pytest.raises(UnknownPlan):
            counterfactual_replay(events_from_decision(decision), "ghost", registry)

    def test_matches_brute_force_oracle_on_random_instances(self, identity_params):
        rng = np.random.default_rng(11)
        mismatches = 0
        for trial in range(2000):
            n = int(rng.integers(1, 7))
            k = int(rng.integers(1, n + 1))
            candidates = tuple(
                make_candidate(
                    f"c{i}",
                    float(rng.random()),
                    ctype=("ad", "organic", "cold_start")[int(rng.integers(0, 3))],
                    tags={"promo"} if rng.random() < 0.3 else set(),
                )
                for i in range(n)
            )
            plans = []
            n_plans = int(rng.integers(1, 4))
            selectors = [
                Selector(content_type="ad"),
                Selector(content_type="cold_start"),
                Selector(required_tags=frozenset({"promo"})),
            ]
            for j in range(n_plans):
                plans.append(
                    Plan(
                        plan_id=f"p{j}",
                        selector=selectors[int(rng.integers(0, 3))],
                        weight=float(rng.uniform(-0.5, 1.5)),
                        bias=float(rng.uniform(-0.2, 0.4)),
                        mode="hybrid",
                        enabled=bool(rng.random() > 0.1),
                    )
                )
            registry = make_registry(*plans)
            request = BlendRequest(request_id=f"t{trial}", candidates=candidates, k=k)
            decision = blend(request, registry, identity_params)
            events = events_from_decision(decision)
            target = f"p{int(rng.integers(0, n_plans))}"
            got = counterfactual_replay(events, target)
            want_lift, want_cost = brute_force_replay(
                [request], registry, identity_params, target, k
            )
            if got["vv_lift"] != want_lift or abs(got["cost"] - want_cost) > 1e-9:
                mismatches += 1
        assert mismatches == 0


class TestRoi:
    def test_hand_values(self):
        assert roi(200, 50.0) == pytest.approx(4.0)
        assert roi(1, 0.05) == pytest.approx(20.0)

    def test_zero_cost_absent(self):
        assert roi(5, 0.0) is None

    def test_negative_cost_rejected(self):
        with pytest.raises(ValueError):
            roi(1, -0.1)


class TestPlanReports:
    def test_no_enabled_plans(self):
        assert plan_reports([], PlanRegistry(), 0.0, 10.0) == []

    def test_worked_example_report(self, boosted_scenario):
        registry, _, decision = boosted_scenario
        events = events_from_decision(decision)
        reports = plan_reports(events, registry, 0.0, 10.0)
        assert len(reports) == 1
        r = reports[0]
        assert r.plan_id == "ad_push"
        assert r.vv_lift == 1
        assert r.cost == pytest.approx(0.05)
        assert r.roi_vv == pytest.approx(20.0)
        assert r.boost_spend == pytest.approx(0.2)
        assert r.exposure_share == pytest.approx(0.5)

    def test_monotone_spend_in_bias(self, identity_params):
        rng = np.random.default_rng(4)
        candidates = tuple(
            make_candidate(f"c{i:02d}", float(r), ctype="ad" if i % 3 == 0 else "organic")
            for i, r in enumerate(rng.random(12))
        )
        request = BlendRequest(request_id="r", candidates=candidates, k=4)
        spends = []
        for bias in (0.0, 0.05, 0.1, 0.2, 0.4):
            registry = make_registry(make_static_plan("ads", ctype="ad", bias=bias))
            decision = blend(request, registry, identity_params)
            events = events_from_decision(decision)
            report = plan_reports(events, registry, 0.0, 10.0)[0]
            spends.append(report.boost_spend)
        assert all(b >= a - 1e-12 for a, b in zip(spends, spends[1:]))


class TestCalibrationCurve:
    @staticmethod
    def synthetic_events(n, rng, link=lambda q: q, metric="effective_completion"):
        events = []
        for i in range(n):
            aligned = float(rng.random())
            outcome = 1.0 if rng.random() < link(aligned) else 0.0
            from blendctl.core import ScoreDecomposition

            d = ScoreDecomposition(f"c{i}", raw=aligned, aligned=aligned, plan_boosts={}, final=aligned)
            events.append(
                ExposureEvent(
                    request_id=f"r{i}",
                    timestamp=float(i),
                    candidate_id=f"c{i}",
                    content_type="organic",
                    decomposition=d,
                    exposed=True,
                    position=0,
                    outcomes={metric: outcome},
                )
            )
        return events

    def test_single_bin_recovers_global_rate(self):
        rng = np.random.default_rng(6)
        events = self.synthetic_events(500, rng)
        curve = calibration_curve(events, "effective_completion", n_bins=1)
        rate = sum(e.outcomes["effective_completion"] for e in events) / 500
        assert len(curve.bins) == 1
        assert curve.bins[0].mean_outcome == pytest.approx(rate)
        assert curve.bins[0].n == 500

    def test_calibrated_data_has_small_errors(self):
        rng = np.random.default_rng(7)
        events = self.synthetic_events(100_000, rng)
        curve = calibration_curve(events, "effective_completion", n_bins=20)
        assert max(curve.calibration_errors) < 0.02
        assert sum(b.n for b in curve.bins) == 100_000

    def test_insufficient_data(self):
        rng = np.random.default_rng(8)
        with pytest.raises(InsufficientData):
            calibration_curve(self.synthetic_events(10, rng), "effective_completion", n_bins=20)

    def test_play_duration_analyzed_as_over_three_second_rate(self):
        rng = np.random.default_rng(9)
        events = []
        from blendctl.core import ScoreDecomposition

        for i in range(100):
            d = ScoreDecomposition(f"c{i}", raw=0.5, aligned=0.5, plan_boosts={}, final=0.5)
            events.append(
                ExposureEvent(
                    request_id=f"r{i}", timestamp=0.0, candidate_id=f"c{i}",
                    content_type="organic", decomposition=d, exposed=True, position=0,
                    outcomes={"play_duration": 10.0 if i % 2 == 0 else 1.0},
                )
            )
        curve = calibration_curve(events, "play_duration", n_bins=1)
        assert curve.bins[0].mean_outcome == pytest.approx(0.5)


class TestRankAnchorCandidates:
    def test_orders_by_stability(self):
        rng = np.random.default_rng(10)
        flat = TestCalibrationCurve.synthetic_events(5000, rng, link=lambda q: 0.02, metric="buy")
        calibrated = TestCalibrationCurve.synthetic_events(5000, rng)
        c1 = calibration_curve(flat, "buy", n_bins=10)
        c2 = calibration_curve(calibrated, "effective_completion", n_bins=10)
        ranked = rank_anchor_candidates([c1, c2])
        assert [c.metric for c in ranked] == ["effective_completion", "buy"]

    def test_tie_broken_by_metric_name(self):
        from blendctl.attribution import CalibrationCurve

        a = CalibrationCurve(metric="zeta", bins=(), calibration_errors=(), stability=0.1)
        b = CalibrationCurve(metric="alpha", bins=(), calibration_errors=(), stability=0.1)
        assert [c.metric for c in rank_anchor_candidates([a, b])] == ["alpha", "zeta"]
