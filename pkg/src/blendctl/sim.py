"""Deterministic synthetic traffic environment.

Generates candidate sets and posterior outcomes, runs the real blending
pipeline (value-aligned or legacy) closed-loop with the delivery
controller, and aggregates the run into a summary. Every random draw comes
from a substream keyed by (seed, purpose, request index), so a run is a
pure function of its config and two arms of an A/B comparison see
identical candidate streams, paired by request index.

Ground truth: each candidate carries a latent quality q = raw * c_true,
where c_true = anchor_rate / E[raw] under the configured score model.
Posterior outcomes respond to q, never to the served estimate of the
alignment parameters, which is learned from logged exposures exactly as in
production.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from .alignment import (
    AlignmentParams,
    AnchorSample,
    bootstrap_alignment,
    update_alignment,
)
from .blending import LEGACY_PLAN_ID, BlendRequest, blend, legacy_blend
from .control import EmptyWindow, PidState, apply_controller_outputs, measure_exposure_share, pid_step
from .core import (
    BlendDecision,
    Candidate,
    Plan,
    PlanRegistry,
    ValidationError,
)
from .tracking import EventTracker, ExposureEvent

SCHEMA_VERSION = "1"

SUMMARY_METRICS = ("vv", "valued_vv", "duration", "valued_score", "boost_final_ratio")

VALUED_PLAY_SECONDS = 3.0


class ConfigMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ScoreComponent:
    """One log-normal component of a content type's raw-score mixture."""

    weight: float
    mu: float
    sigma: float

    def mean(self) -> float:
        return math.exp(self.mu + 0.5 * self.sigma**2)


@dataclass(frozen=True)
class OutcomeModel:
    """Response curves mapping latent quality q to the six posterior metrics.

    Completion is a clipped power of q (exponent 1 = perfectly calibrated),
    shifted down by a fixed gap for ads. Play duration is an exponential
    gated on completion. Click, interaction and slide are logistic in q;
    buy is a flat sparse rate.
    """

    completion_exponent: float = 1.0
    ad_completion_gap: float = 0.05
    duration_offset: float = 3.0
    duration_mean_completed: float = 17.0
    duration_mean_not: float = 2.2
    click_alpha: float = -2.4
    click_beta: float = 3.5
    interaction_alpha: float = -4.6
    interaction_beta: float = 0.8
    buy_rate: float = 0.001
    slide_alpha: float = -0.8
    slide_beta: float = -1.8
    valued_click: float = 1.0
    valued_interaction: float = 2.0
    valued_completion: float = 0.5

    def to_dict(self) -> dict[str, Any]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "OutcomeModel":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass(frozen=True)
class SimConfig:
    seed: int
    n_requests: int
    candidates_per_request: int
    k: int
    content_mix: dict[str, float]
    score_model: dict[str, tuple[ScoreComponent, ...]]
    outcome_model: OutcomeModel = OutcomeModel()
    plans: tuple[Plan, ...] = ()
    controllers: dict[str, PidState] = field(default_factory=dict)
    pipeline: str = "aligned"
    control_tick: int = 500
    bootstrap_requests: int = 500
    analysis_start: int = 0
    anchor_rate: float = 0.32
    tags_by_type: dict[str, tuple[str, ...]] = field(default_factory=dict)
    half_life: float = 100_000.0
    legacy_probe_requests: int = 3000

    def __post_init__(self) -> None:
        total = sum(self.content_mix.values())
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"content_mix must sum to 1, got {total}")
        for ctype in self.content_mix:
            if ctype not in self.score_model:
                raise ValidationError(f"no score model for content type {ctype!r}")
        if self.pipeline not in ("aligned", "legacy"):
            raise ValidationError(f"unknown pipeline {self.pipeline!r}")
        if self.bootstrap_requests % self.control_tick != 0:
            raise ValidationError("bootstrap_requests must be a multiple of control_tick")
        if not (0 <= self.analysis_start < max(self.n_requests, 1)):
            raise ValidationError("analysis_start must lie inside the main phase")

    def true_score_mean(self) -> float:
        return sum(
            share * sum(c.weight * c.mean() for c in self.score_model[ctype])
            for ctype, share in self.content_mix.items()
        )

    def true_alignment_ratio(self) -> float:
        return self.anchor_rate / self.true_score_mean()

    def registry(self) -> PlanRegistry:
        return PlanRegistry(plans=self.plans, version=2)

    def warmup_registry(self) -> PlanRegistry:
        disabled = tuple(replace(p, enabled=False) for p in self.plans)
        return PlanRegistry(plans=disabled, version=1)

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed,
            "n_requests": self.n_requests,
            "candidates_per_request": self.candidates_per_request,
            "k": self.k,
            "content_mix": dict(self.content_mix),
            "score_model": {
                ctype: [vars(c) for c in comps] for ctype, comps in self.score_model.items()
            },
            "outcome_model": self.outcome_model.to_dict(),
            "plans": [
                {**p.to_dict(), **({"controller": self.controllers[p.plan_id].to_dict()} if p.plan_id in self.controllers else {})}
                for p in self.plans
            ],
            "pipeline": self.pipeline,
            "control_tick": self.control_tick,
            "bootstrap_requests": self.bootstrap_requests,
            "analysis_start": self.analysis_start,
            "anchor_rate": self.anchor_rate,
            "tags_by_type": {t: list(tags) for t, tags in self.tags_by_type.items()},
            "half_life": self.half_life,
            "legacy_probe_requests": self.legacy_probe_requests,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SimConfig":
        plans = []
        controllers = {}
        for entry in d.get("plans", ()):
            entry = dict(entry)
            controller = entry.pop("controller", None)
            plan = Plan.from_dict(entry)
            plans.append(plan)
            if controller is not None:
                controllers[plan.plan_id] = PidState.from_dict(controller)
        return cls(
            seed=int(d["seed"]),
            n_requests=int(d["n_requests"]),
            candidates_per_request=int(d["candidates_per_request"]),
            k=int(d["k"]),
            content_mix={k2: float(v) for k2, v in d["content_mix"].items()},
            score_model={
                ctype: tuple(ScoreComponent(**c) for c in comps)
                for ctype, comps in d["score_model"].items()
            },
            outcome_model=OutcomeModel.from_dict(d.get("outcome_model", {})),
            plans=tuple(plans),
            controllers=controllers,
            pipeline=d.get("pipeline", "aligned"),
            control_tick=int(d.get("control_tick", 500)),
            bootstrap_requests=int(d.get("bootstrap_requests", 500)),
            analysis_start=int(d.get("analysis_start", 0)),
            anchor_rate=float(d.get("anchor_rate", 0.32)),
            tags_by_type={
                t: tuple(tags) for t, tags in d.get("tags_by_type", {}).items()
            },
            half_life=float(d.get("half_life", 100_000.0)),
            legacy_probe_requests=int(d.get("legacy_probe_requests", 3000)),
        )


@dataclass
class ControllerTick:
    window_id: int
    plan_id: str
    measured: float
    target: float
    bias: float

    def to_dict(self) -> dict[str, Any]:
        return vars(self)


@dataclass
class SimRun:
    config: SimConfig
    events: list[ExposureEvent]
    decisions: list[BlendDecision]
    controller_trace: list[ControllerTick]
    summary: dict[str, Any]
    registry: PlanRegistry
    alignment: AlignmentParams
    tracker: EventTracker


# -- candidate generation -----------------------------------------------------


def _mix_arrays(config: SimConfig) -> tuple[list[str], np.ndarray]:
    ctypes = sorted(config.content_mix)
    probs = np.asarray([config.content_mix[t] for t in ctypes])
    return ctypes, probs


_TABLE_CACHE: dict[int, tuple[SimConfig, dict[str, Any]]] = {}


def _generation_tables(config: SimConfig) -> dict[str, Any]:
    """Cumulative mix and per-type mixture tables for vectorized draws."""
    cached = _TABLE_CACHE.get(id(config))
    if cached is not None and cached[0] is config:
        return cached[1]
    tables = _build_generation_tables(config)
    if len(_TABLE_CACHE) > 8:
        _TABLE_CACHE.clear()
    _TABLE_CACHE[id(config)] = (config, tables)
    return tables


def _build_generation_tables(config: SimConfig) -> dict[str, Any]:
    type_names, probs = _mix_arrays(config)
    comp_tables = []
    for ctype in type_names:
        comps = config.score_model[ctype]
        cum = np.cumsum([c.weight for c in comps])
        comp_tables.append(
            (cum, np.asarray([c.mu for c in comps]), np.asarray([c.sigma for c in comps]))
        )
    return {
        "type_names": type_names,
        "type_cum": np.cumsum(probs),
        "comp_tables": comp_tables,
        "tags": [frozenset(config.tags_by_type.get(t, ())) for t in type_names],
    }


def _request_rng(seed: int, t: int) -> np.random.Generator:
    return np.random.default_rng([seed, 0, t])


def _outcome_rng(seed: int, t: int) -> np.random.Generator:
    return np.random.default_rng([seed, 1, t])


def generate_request(config: SimConfig, t: int) -> BlendRequest:
    """Candidates for request t, fully determined by (seed, t).

    Draw layout per request (fixed contract): type uniforms, mixture
    component uniforms, then standard normals, each of length
    candidates_per_request.
    """
    rng = _request_rng(config.seed, t)
    tables = _generation_tables(config)
    cpr = config.candidates_per_request
    n_types = len(tables["type_names"])
    type_idx = np.minimum(
        np.searchsorted(tables["type_cum"], rng.random(cpr), side="right"), n_types - 1
    )
    comp_u = rng.random(cpr)
    z = rng.standard_normal(cpr)
    mu = np.empty(cpr)
    sigma = np.empty(cpr)
    for ti in range(n_types):
        mask = type_idx == ti
        if not mask.any():
            continue
        cum, mus, sigmas = tables["comp_tables"][ti]
        ci = np.minimum(np.searchsorted(cum, comp_u[mask], side="right"), len(cum) - 1)
        mu[mask] = mus[ci]
        sigma[mask] = sigmas[ci]
    raw = np.exp(mu + sigma * z)
    type_names = tables["type_names"]
    tags = tables["tags"]
    candidates = tuple(
        Candidate(
            id=f"c{i:02d}",
            content_type=type_names[type_idx[i]],
            raw_score=float(raw[i]),
            tags=tags[type_idx[i]],
        )
        for i in range(cpr)
    )
    return BlendRequest(request_id=f"r{t:07d}", candidates=candidates, k=config.k)


# -- outcome sampling ---------------------------------------------------------


def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def completion_probability(q: float, content_type: str, model: OutcomeModel) -> float:
    base = max(q, 0.0) ** model.completion_exponent
    if content_type == "ad":
        base -= model.ad_completion_gap
    return min(max(base, 0.0), 1.0)


def outcomes_from_uniforms(
    q: float,
    content_type: str,
    u: np.ndarray,
    model: OutcomeModel,
) -> dict[str, float]:
    """Posterior outcomes for one exposed item from 7 uniform draws."""
    completion = 1.0 if u[0] < completion_probability(q, content_type, model) else 0.0
    if completion:
        duration = model.duration_offset - model.duration_mean_completed * math.log1p(-u[1])
    else:
        duration = -model.duration_mean_not * math.log1p(-u[2])
    click = 1.0 if u[3] < _sigmoid(model.click_alpha + model.click_beta * q) else 0.0
    interaction = 1.0 if u[4] < _sigmoid(model.interaction_alpha + model.interaction_beta * q) else 0.0
    buy = 1.0 if u[5] < model.buy_rate else 0.0
    slide = 1.0 if u[6] < _sigmoid(model.slide_alpha + model.slide_beta * q) else 0.0
    return {
        "effective_completion": completion,
        "play_duration": duration,
        "click": click,
        "buy": buy,
        "interaction": interaction,
        "slide": slide,
    }


def sample_outcomes(
    items: Sequence[tuple[float, str]],
    rng: np.random.Generator,
    model: OutcomeModel,
) -> list[dict[str, float]]:
    """Draw outcomes for exposed items given (latent quality, content type)."""
    u = rng.random((len(items), 7))
    return [
        outcomes_from_uniforms(q, ctype, u[i], model)
        for i, (q, ctype) in enumerate(items)
    ]


def valued_score_of(outcomes: Mapping[str, float], model: OutcomeModel) -> float:
    return (
        model.valued_click * outcomes["click"]
        + model.valued_interaction * outcomes["interaction"]
        + model.valued_completion * outcomes["effective_completion"]
    )


# -- legacy weight matching ---------------------------------------------------


def _legacy_probe_share(
    config: SimConfig,
    pid_plan: Plan,
    trial_weight: float,
    static_plans: Sequence[Plan],
    probe_start: int,
    probe_n: int,
) -> float:
    """Ad share of a legacy ranking with the pid plan replaced by trial_weight.

    Alignment is applied after weighting and is strictly increasing, so the
    ranking can be probed on the coupled raw scores directly.
    """
    c_true = config.true_alignment_ratio()
    exposed_member = 0
    exposed_total = 0
    type_names, _ = _mix_arrays(config)
    for t in range(probe_start, probe_start + probe_n):
        request = generate_request(config, t)
        scored = []
        for cand in request.candidates:
            coupled = cand.raw_score
            if pid_plan.selector.matches(cand):
                coupled *= 1.0 + trial_weight
            for plan in static_plans:
                if plan.enabled and plan.selector.matches(cand):
                    coupled *= 1.0 + plan.weight
            for plan in static_plans:
                if plan.enabled and plan.selector.matches(cand) and plan.bias != 0.0:
                    coupled += plan.bias / c_true
            scored.append((-coupled, cand.id, pid_plan.selector.matches(cand)))
        scored.sort()
        k = min(request.k, len(scored))
        exposed_total += k
        exposed_member += sum(1 for item in scored[:k] if item[2])
    return exposed_member / exposed_total


def match_legacy_weights(config: SimConfig, tolerance: float = 0.002) -> dict[str, float]:
    """Bisect a multiplicative weight per pid plan so the legacy pipeline
    delivers that plan's target share on this seed.

    The probe share is a step function of the weight (finitely many
    candidates), so bisection stops at the tolerance rather than a root.
    """
    pid_plans = [p for p in config.plans if p.mode == "pid_delivered" and p.enabled]
    if not pid_plans:
        return {}
    if len(pid_plans) > 1:
        raise ValidationError("legacy weight matching supports one pid plan")
    plan = pid_plans[0]
    static_plans = [p for p in config.plans if p.mode != "pid_delivered"]
    probe_start = config.bootstrap_requests
    probe_n = min(config.legacy_probe_requests, config.n_requests)
    target = plan.target_share or 0.0
    lo, hi = 0.0, 1.0
    while (
        _legacy_probe_share(config, plan, hi, static_plans, probe_start, probe_n) < target
        and hi < 512.0
    ):
        hi *= 2.0
    best = hi
    best_gap = float("inf")
    for _ in range(45):
        mid = 0.5 * (lo + hi)
        share = _legacy_probe_share(config, plan, mid, static_plans, probe_start, probe_n)
        gap = abs(share - target)
        if gap < best_gap:
            best, best_gap = mid, gap
        if gap <= tolerance:
            return {plan.plan_id: mid}
        if share < target:
            lo = mid
        else:
            hi = mid
    return {plan.plan_id: best}


def legacy_registry(config: SimConfig, weights: Mapping[str, float]) -> PlanRegistry:
    """Registry for the legacy arm: pid plans become static multiplicative
    weights; static biases are converted to the raw-score scale."""
    c_true = config.true_alignment_ratio()
    plans = []
    for plan in config.plans:
        if plan.plan_id in weights:
            plans.append(
                replace(
                    plan,
                    mode="static",
                    weight=float(weights[plan.plan_id]),
                    bias=0.0,
                    target_share=None,
                )
            )
        elif plan.bias != 0.0:
            plans.append(replace(plan, bias=plan.bias / c_true))
        else:
            plans.append(plan)
    return PlanRegistry(plans=tuple(plans), version=2)


# -- the runner ---------------------------------------------------------------


class _SummaryAccumulator:
    def __init__(self, model: OutcomeModel, type_names: Sequence[str]) -> None:
        self.model = model
        self.vv = 0
        self.valued_vv = 0
        self.duration = 0.0
        self.valued_score = 0.0
        self.type_counts = {t: 0 for t in type_names}
        self.boost_abs = 0.0
        self.final_abs = 0.0

    def add(self, event: ExposureEvent) -> None:
        self.vv += 1
        out = event.outcomes or {}
        dur = out.get("play_duration", 0.0)
        self.duration += dur
        if dur > VALUED_PLAY_SECONDS:
            self.valued_vv += 1
        self.valued_score += valued_score_of(out, self.model)
        self.type_counts[event.content_type] = self.type_counts.get(event.content_type, 0) + 1
        d = event.decomposition
        self.boost_abs += sum(abs(g) for g in d.plan_boosts.values())
        self.final_abs += abs(d.final)

    def summary(self) -> dict[str, Any]:
        shares = {
            t: (c / self.vv if self.vv else 0.0) for t, c in sorted(self.type_counts.items())
        }
        return {
            "schema_version": SCHEMA_VERSION,
            "vv": self.vv,
            "valued_vv": self.valued_vv,
            "duration": self.duration,
            "valued_score": self.valued_score,
            "per_type_shares": shares,
            "boost_final_ratio": (self.boost_abs / self.final_abs if self.final_abs else 0.0),
        }


def run(config: SimConfig, retain_events: bool = True, log_dir: Optional[Path] = None) -> SimRun:
    """Execute one full simulated run; a pure function of the config."""
    type_names, _ = _mix_arrays(config)
    c_true = config.true_alignment_ratio()
    model = config.outcome_model
    blend_fn = blend if config.pipeline == "aligned" else legacy_blend

    if config.n_requests == 0:
        identity = AlignmentParams(mu_score=1.0, mu_anchor=1.0, half_life=config.half_life)
        empty_tracker = EventTracker(window_length=float(config.control_tick), log_dir=log_dir)
        summary = _SummaryAccumulator(model, type_names).summary()
        summary.update(n_requests=0, seed=config.seed, pipeline=config.pipeline)
        return SimRun(
            config=config,
            events=[],
            decisions=[],
            controller_trace=[],
            summary=summary,
            registry=config.registry(),
            alignment=identity,
            tracker=empty_tracker,
        )

    if config.pipeline == "legacy":
        registry = legacy_registry(config, match_legacy_weights(config))
    else:
        registry = config.registry()
    warmup_registry = config.warmup_registry()

    # Warmup: plans disabled, identity alignment; collects bootstrap samples.
    identity = AlignmentParams(mu_score=1.0, mu_anchor=1.0, half_life=config.half_life)
    warmup_rows: list[tuple[BlendDecision, list[Optional[dict[str, float]]], list[str]]] = []
    bootstrap_samples: list[AnchorSample] = []
    all_warmup_raws: list[float] = []
    for t in range(config.bootstrap_requests):
        request = generate_request(config, t)
        decision = blend_fn(request, warmup_registry, identity)
        ctypes = {c.id: c.content_type for c in request.candidates}
        exposed = decision.exposed()
        qs = [(d.raw * c_true, ctypes[d.candidate_id]) for d in exposed]
        outs = sample_outcomes(qs, _outcome_rng(config.seed, t), model)
        outcomes_by_rank: list[Optional[dict[str, float]]] = [None] * len(decision.ranked)
        for rank, d in enumerate(exposed):
            outcomes_by_rank[rank] = outs[rank]
            bootstrap_samples.append(
                AnchorSample(raw_score=d.raw, anchor_outcome=outs[rank]["effective_completion"])
            )
        all_warmup_raws.extend(d.raw for d in decision.ranked)
        warmup_rows.append((decision, outcomes_by_rank, [ctypes[d.candidate_id] for d in decision.ranked]))

    if bootstrap_samples:
        params = bootstrap_alignment(
            bootstrap_samples,
            half_life=config.half_life,
            min_bootstrap=min(1000, len(bootstrap_samples)),
            updated_at=float(config.bootstrap_requests),
        )
    else:
        params = identity

    raw_hi = float(np.percentile(np.asarray(all_warmup_raws), 99)) if all_warmup_raws else 10.0
    tracker = EventTracker(
        window_length=float(config.control_tick),
        raw_hi=raw_hi,
        anchor_hi=2.0 * params.mu_anchor,
        plan_ids=[p.plan_id for p in config.plans] + ([LEGACY_PLAN_ID] if config.pipeline == "legacy" else []),
        log_dir=log_dir,
        retain_events=retain_events,
    )

    accumulator = _SummaryAccumulator(model, type_names)
    events: list[ExposureEvent] = []
    decisions: list[BlendDecision] = []
    trace: list[ControllerTick] = []

    def record_decision(
        t: int,
        decision: BlendDecision,
        outcomes_by_rank: Sequence[Optional[dict[str, float]]],
        ctypes_by_rank: Sequence[str],
        in_analysis: bool,
    ) -> None:
        for rank, d in enumerate(decision.ranked):
            is_exposed = rank < decision.exposed_k
            event = ExposureEvent(
                request_id=decision.request_id,
                timestamp=float(t),
                candidate_id=d.candidate_id,
                content_type=ctypes_by_rank[rank],
                decomposition=d,
                exposed=is_exposed,
                position=rank if is_exposed else None,
                outcomes=outcomes_by_rank[rank] if is_exposed else None,
            )
            tracker.record(event)
            if retain_events:
                events.append(event)
            if is_exposed and in_analysis:
                accumulator.add(event)
        if retain_events:
            decisions.append(decision)

    for t, (decision, outcomes_by_rank, ctypes_by_rank) in enumerate(warmup_rows):
        record_decision(t, decision, outcomes_by_rank, ctypes_by_rank, in_analysis=False)
    del warmup_rows
    for wid in range(config.bootstrap_requests // config.control_tick):
        tracker.close_window(wid)

    controllers = {
        p.plan_id: config.controllers.get(p.plan_id, PidState())
        for p in config.plans
        if p.mode == "pid_delivered" and p.enabled
    }
    if config.pipeline == "legacy":
        controllers = {}

    pending_samples: list[AnchorSample] = []
    for i in range(config.n_requests):
        t = config.bootstrap_requests + i
        request = generate_request(config, t)
        decision = blend_fn(request, registry, params)
        ctypes = {c.id: c.content_type for c in request.candidates}
        exposed = decision.exposed()
        qs = [(d.raw * c_true, ctypes[d.candidate_id]) for d in exposed]
        outs = sample_outcomes(qs, _outcome_rng(config.seed, t), model)
        outcomes_by_rank: list[Optional[dict[str, float]]] = [None] * len(decision.ranked)
        for rank in range(len(exposed)):
            outcomes_by_rank[rank] = outs[rank]
            pending_samples.append(
                AnchorSample(
                    raw_score=exposed[rank].raw,
                    anchor_outcome=outs[rank]["effective_completion"],
                )
            )
        record_decision(
            t,
            decision,
            outcomes_by_rank,
            [ctypes[d.candidate_id] for d in decision.ranked],
            in_analysis=i >= config.analysis_start,
        )

        if (t + 1) % config.control_tick == 0:
            wid = tracker.window_id_for(float(t))
            window_events = tracker.window_events(wid)
            outputs: dict[str, float] = {}
            for plan_id, state in controllers.items():
                plan = registry.get(plan_id)
                try:
                    measurement = measure_exposure_share(
                        window_events, plan, wid * config.control_tick, (wid + 1) * config.control_tick
                    )
                except EmptyWindow:
                    continue  # no information, no action
                new_state, bias = pid_step(
                    state, measurement.share, plan.target_share or 0.0, dt=1.0
                )
                controllers[plan_id] = new_state
                outputs[plan_id] = bias
                trace.append(
                    ControllerTick(
                        window_id=wid,
                        plan_id=plan_id,
                        measured=measurement.share,
                        target=plan.target_share or 0.0,
                        bias=bias,
                    )
                )
            if outputs:
                registry = apply_controller_outputs(registry, outputs)
            params = update_alignment(params, pending_samples, updated_at=float(t + 1))
            pending_samples = []
            tracker.close_window(wid)

    summary = accumulator.summary()
    summary["n_requests"] = config.n_requests
    summary["seed"] = config.seed
    summary["pipeline"] = config.pipeline
    if controllers:
        last_bias = {pid: state.last_output for pid, state in controllers.items()}
        summary["controller_bias"] = last_bias
    return SimRun(
        config=config,
        events=events,
        decisions=decisions,
        controller_trace=trace,
        summary=summary,
        registry=registry,
        alignment=params,
        tracker=tracker,
    )


def ab_compare(config_a: SimConfig, config_b: SimConfig) -> dict[str, Any]:
    """Paired comparison of two runs sharing seed, n_requests and k."""
    for attr in ("seed", "n_requests", "k"):
        if getattr(config_a, attr) != getattr(config_b, attr):
            raise ConfigMismatch(f"configs differ on {attr}")
    run_a = run(config_a, retain_events=False)
    run_b = run(config_b, retain_events=False)
    return compare_summaries(run_a.summary, run_b.summary)


def compare_summaries(summary_a: Mapping[str, Any], summary_b: Mapping[str, Any]) -> dict[str, Any]:
    deltas: dict[str, Any] = {}
    for metric in SUMMARY_METRICS:
        a = float(summary_a[metric])
        b = float(summary_b[metric])
        deltas[metric] = {
            "a": a,
            "b": b,
            "delta": b - a,
            "delta_rel": ((b - a) / a if a != 0.0 else None),
        }
    shares_a = summary_a["per_type_shares"]
    shares_b = summary_b["per_type_shares"]
    deltas["per_type_shares"] = {
        t: {
            "a": shares_a.get(t, 0.0),
            "b": shares_b.get(t, 0.0),
            "delta": shares_b.get(t, 0.0) - shares_a.get(t, 0.0),
        }
        for t in sorted(set(shares_a) | set(shares_b))
    }
    ratio_a = float(summary_a["boost_final_ratio"])
    ratio_b = float(summary_b["boost_final_ratio"])
    deltas["boost_ratio_reduction_pct"] = (
        (ratio_a - ratio_b) / ratio_a * 100.0 if ratio_a > 0.0 else None
    )
    deltas["schema_version"] = SCHEMA_VERSION
    return deltas


__all__ = [
    "SCHEMA_VERSION",
    "SUMMARY_METRICS",
    "VALUED_PLAY_SECONDS",
    "ConfigMismatch",
    "ControllerTick",
    "OutcomeModel",
    "ScoreComponent",
    "SimConfig",
    "SimRun",
    "ab_compare",
    "compare_summaries",
    "completion_probability",
    "generate_request",
    "legacy_registry",
    "match_legacy_weights",
    "outcomes_from_uniforms",
    "run",
    "sample_outcomes",
    "valued_score_of",
]
