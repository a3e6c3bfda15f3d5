"""Offline aggregation: per-plan cost, lift and ROI, anchor calibration.

Plan attribution works by counterfactual log replay: for one plan at a
time, its logged boosts are subtracted from the final scores, the request
is re-sorted with the standard comparator and re-truncated, and the actual
and counterfactual exposure sets are compared. The additive score model
makes this removal exact at the score level.

Cost is displaced anchor value: the aligned value of items that would have
been exposed without the plan, minus the aligned value of the plan members
that took their slots, floored at zero over the window. The cruder notion
boost_spend (sum of exposed boost scores) is reported alongside.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .core import PlanRegistry, UnknownPlan
from .control import EmptyWindow, measure_exposure_share
from .tracking import ExposureEvent


class MissingDecomposition(ValueError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class PlanReport:
    """Windowed cost/benefit summary for one plan."""

    plan_id: str
    window_start: float
    window_end: float
    cost: float
    vv_lift: int
    boost_spend: float
    exposure_share: Optional[float]
    roi_vv: Optional[float]

    def to_dict(self) -> dict[str, Any]:
        return {
            "plan_id": self.plan_id,
            "window_start": self.window_start,
            "window_end": self.window_end,
            "cost": self.cost,
            "vv_lift": self.vv_lift,
            "boost_spend": self.boost_spend,
            "exposure_share": self.exposure_share,
            "roi_vv": self.roi_vv,
        }


@dataclass(frozen=True)
class CalibrationBin:
    score_lo: float
    score_hi: float
    mean_score: float
    mean_outcome: float
    n: int


@dataclass(frozen=True)
class CalibrationCurve:
    """Mean outcome vs mean aligned score over equal-frequency bins."""

    metric: str
    bins: tuple[CalibrationBin, ...]
    calibration_errors: tuple[float, ...]
    stability: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "metric": self.metric,
            "bins": [vars(b) for b in self.bins],
            "calibration_errors": list(self.calibration_errors),
            "stability": self.stability,
        }


def group_by_request(events: Iterable[ExposureEvent]) -> dict[str, list[ExposureEvent]]:
    """Group log events per request, preserving log order."""
    groups: dict[str, list[ExposureEvent]] = defaultdict(list)
    for event in events:
        groups[event.request_id].append(event)
    return dict(groups)


def counterfactual_replay(
    events: Iterable[ExposureEvent],
    plan_id: str,
    registry: Optional[PlanRegistry] = None,
) -> dict[str, float]:
    """Re-rank every logged request with one plan's boosts removed.

    Returns {"vv_lift": members exposed actually minus counterfactually,
    "cost": displaced aligned value}. The displacement is floored at zero
    per request: a slot that another plan's boosted item would inherit does
    not turn the removed plan's displacement negative. When a registry is
    supplied, an id it does not know is rejected.
    """
    if registry is not None and not registry.has(plan_id):
        raise UnknownPlan(plan_id)
    groups = group_by_request(events)
    vv_lift = 0
    cost = 0.0
    for request_id, group in groups.items():
        k = sum(1 for e in group if e.exposed)
        if k == 0:
            continue
        if any(e.decomposition is None for e in group):  # hand-built logs
            raise MissingDecomposition(request_id)
        members = {e.candidate_id for e in group if plan_id in e.decomposition.plan_boosts}
        if not members:
            continue
        actual_exposed = {e.candidate_id for e in group if e.exposed}
        # Counterfactual scores: subtract the stored boost, keep the comparator.
        scored = []
        aligned_by_id = {}
        for e in group:
            d = e.decomposition
            cf_final = d.final - d.plan_boosts.get(plan_id, 0.0)
            scored.append((-cf_final, e.candidate_id))
            aligned_by_id[e.candidate_id] = d.aligned
        scored.sort()
        cf_exposed = {cid for _, cid in scored[:k]}
        vv_lift += len(actual_exposed & members) - len(cf_exposed & members)
        gained = cf_exposed - actual_exposed
        lost = (actual_exposed - cf_exposed) & members
        displaced = sum(aligned_by_id[cid] for cid in gained)
        displaced -= sum(aligned_by_id[cid] for cid in lost)
        cost += max(displaced, 0.0)
    return {"vv_lift": vv_lift, "cost": cost}


def roi(vv_lift: int, cost: float) -> Optional[float]:
    """Exposures gained per unit of displaced anchor value; None at zero cost."""
    if cost < 0:
        raise ValueError("cost must be nonnegative")
    if cost == 0.0:
        return None
    return vv_lift / cost


def plan_reports(
    events: Sequence[ExposureEvent],
    registry: PlanRegistry,
    window_start: float,
    window_end: float,
) -> list[PlanReport]:
    """One report per enabled plan over [window_start, window_end)."""
    window_events = [e for e in events if window_start <= e.timestamp < window_end]
    exposed = [e for e in window_events if e.exposed]
    reports = []
    for plan in registry.enabled_plans():
        replay = counterfactual_replay(window_events, plan.plan_id, registry)
        spend = sum(
            e.decomposition.plan_boosts.get(plan.plan_id, 0.0) for e in exposed
        )
        try:
            share: Optional[float] = measure_exposure_share(
                window_events, plan, window_start, window_end
            ).share
        except EmptyWindow:
            share = None
        cost = float(replay["cost"])
        lift = int(replay["vv_lift"])
        reports.append(
            PlanReport(
                plan_id=plan.plan_id,
                window_start=window_start,
                window_end=window_end,
                cost=cost,
                vv_lift=lift,
                boost_spend=spend,
                exposure_share=share,
                roi_vv=roi(lift, cost),
            )
        )
    return reports


def calibration_curve(
    events: Iterable[ExposureEvent],
    metric: str,
    n_bins: int = 20,
) -> CalibrationCurve:
    """Equal-frequency calibration of one outcome metric against aligned score.

    Only exposed events carry outcomes. play_duration is analyzed as the
    probability of playing past 3 seconds so every metric is a rate in
    [0, 1] and the per-bin error |mean_outcome - mean_aligned| is comparable
    across metrics.
    """
    pairs = []
    for e in events:
        if not e.exposed or e.outcomes is None or metric not in e.outcomes:
            continue
        value = e.outcomes[metric]
        if metric == "play_duration":
            value = 1.0 if value > 3.0 else 0.0
        pairs.append((e.decomposition.aligned, value))
    if len(pairs) < n_bins:
        raise InsufficientData(f"{len(pairs)} events for metric {metric!r}, need {n_bins}")
    pairs.sort(key=lambda p: p[0])
    scores = np.asarray([p[0] for p in pairs])
    outcomes = np.asarray([p[1] for p in pairs])
    chunks = np.array_split(np.arange(len(pairs)), n_bins)
    bins = []
    errors = []
    for chunk in chunks:
        s = scores[chunk]
        o = outcomes[chunk]
        mean_s = float(s.mean())
        mean_o = float(o.mean())
        bins.append(
            CalibrationBin(
                score_lo=float(s[0]),
                score_hi=float(s[-1]),
                mean_score=mean_s,
                mean_outcome=mean_o,
                n=int(len(chunk)),
            )
        )
        errors.append(abs(mean_o - mean_s))
    stability = float(np.std(np.asarray(errors)))
    return CalibrationCurve(
        metric=metric,
        bins=tuple(bins),
        calibration_errors=tuple(errors),
        stability=stability,
    )


def rank_anchor_candidates(curves: Sequence[CalibrationCurve]) -> list[CalibrationCurve]:
    """Most stable metric first; ties broken by metric name."""
    return sorted(curves, key=lambda c: (c.stability, c.metric))


__all__ = [
    "CalibrationBin",
    "CalibrationCurve",
    "InsufficientData",
    "MissingDecomposition",
    "PlanReport",
    "calibration_curve",
    "counterfactual_replay",
    "group_by_request",
    "plan_reports",
    "rank_anchor_candidates",
    "roi",
]
