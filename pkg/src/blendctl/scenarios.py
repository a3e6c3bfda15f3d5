"""Canned simulation scenarios.

Each factory returns a SimConfig for one experiment family; the seed is the
only required knob. Config files may either spell out a full SimConfig or
reference a scenario by name plus overrides, e.g.
{"scenario": "inflation", "seed": 7, "pipeline": "legacy"}.
"""

from __future__ import annotations

from typing import Any, Mapping

from .control import PidState
from .core import Plan, Selector, ValidationError
from .sim import ScoreComponent, SimConfig

ORGANIC = (ScoreComponent(1.0, 0.0, 0.45),)
COLD_START = (ScoreComponent(1.0, -0.35, 0.45),)
AD_PLAIN = (ScoreComponent(1.0, -0.9, 0.55),)
# Two-tier ad inventory: a thin premium pool that competes with organics
# naturally plus a remnant pool that guaranteed delivery has to subsidize.
AD_TIERED = (ScoreComponent(0.18, 0.7, 0.35), ScoreComponent(0.82, -1.0, 0.4))
JUNK_PROMO = (ScoreComponent(1.0, -1.3, 0.4),)

AD_PLAN = Plan(
    plan_id="ad_delivery",
    selector=Selector(content_type="ad"),
    weight=0.0,
    bias=0.0,
    mode="pid_delivered",
    target_share=0.10,
)

CS_PLAN = Plan(
    plan_id="cs_boost",
    selector=Selector(content_type="cold_start"),
    weight=0.15,
    mode="static",
)


def scenario_delivery(seed: int) -> SimConfig:
    """Closed-loop delivery control: ads start far below target share."""
    return SimConfig(
        seed=seed,
        n_requests=330 * 250,
        candidates_per_request=24,
        k=8,
        content_mix={"organic": 0.80, "ad": 0.15, "cold_start": 0.05},
        score_model={"organic": ORGANIC, "ad": AD_PLAIN, "cold_start": COLD_START},
        plans=(AD_PLAN, CS_PLAN),
        controllers={"ad_delivery": PidState()},
        control_tick=250,
        bootstrap_requests=500,
        analysis_start=30 * 250,
    )


def scenario_inflation(seed: int, pipeline: str = "aligned") -> SimConfig:
    """Boost-magnitude comparison against the exposure-matched legacy arm.

    The controller runs hotter than the delivery defaults so the loop is
    settled well before the analysis window opens at tick 50.
    """
    return SimConfig(
        seed=seed,
        n_requests=100 * 250,
        candidates_per_request=24,
        k=8,
        content_mix={"organic": 0.80, "ad": 0.15, "cold_start": 0.05},
        score_model={"organic": ORGANIC, "ad": AD_TIERED, "cold_start": COLD_START},
        plans=(AD_PLAN, Plan(plan_id="cs_boost", selector=Selector(content_type="cold_start"), weight=0.10)),
        controllers={"ad_delivery": PidState(ki=0.25)},
        pipeline=pipeline,
        control_tick=250,
        bootstrap_requests=500,
        analysis_start=50 * 250,
        legacy_probe_requests=6000,
    )


def scenario_ablation(seed: int, include_waste: bool = True) -> SimConfig:
    """Three-plan setup with a deliberately wasteful bias plan: it hoists a
    low-quality promo pool into the feed at a large displacement cost."""
    plans = [
        AD_PLAN,
        Plan(plan_id="cs_boost", selector=Selector(content_type="cold_start"), weight=0.30),
    ]
    if include_waste:
        plans.append(
            Plan(
                plan_id="promo_push",
                selector=Selector(required_tags=frozenset({"promo"})),
                weight=0.0,
                bias=0.32,
                mode="static",
            )
        )
    return SimConfig(
        seed=seed,
        n_requests=24 * 250,
        candidates_per_request=24,
        k=8,
        content_mix={"organic": 0.73, "ad": 0.13, "cold_start": 0.06, "other": 0.08},
        score_model={
            "organic": ORGANIC,
            "ad": AD_PLAIN,
            "cold_start": COLD_START,
            "other": JUNK_PROMO,
        },
        plans=tuple(plans),
        controllers={"ad_delivery": PidState()},
        control_tick=250,
        bootstrap_requests=500,
        analysis_start=8 * 250,
        tags_by_type={"other": ("promo",)},
    )


def scenario_anchor(seed: int) -> SimConfig:
    """Plain aligned ranking producing 1e5 exposures for calibration sweeps."""
    return SimConfig(
        seed=seed,
        n_requests=12_500,
        candidates_per_request=14,
        k=8,
        content_mix={"organic": 0.80, "ad": 0.15, "cold_start": 0.05},
        score_model={"organic": ORGANIC, "ad": AD_PLAIN, "cold_start": COLD_START},
        plans=(),
        control_tick=500,
        bootstrap_requests=500,
        analysis_start=0,
    )


def scenario_default(seed: int) -> SimConfig:
    """General-purpose demo scenario used by the service and the CLI."""
    return SimConfig(
        seed=seed,
        n_requests=4500,
        candidates_per_request=24,
        k=8,
        content_mix={"organic": 0.77, "ad": 0.13, "cold_start": 0.06, "other": 0.04},
        score_model={
            "organic": ORGANIC,
            "ad": AD_PLAIN,
            "cold_start": COLD_START,
            "other": JUNK_PROMO,
        },
        plans=(
            AD_PLAN,
            Plan(plan_id="cs_boost", selector=Selector(content_type="cold_start"), weight=0.25),
            Plan(
                plan_id="promo_push",
                selector=Selector(required_tags=frozenset({"promo"})),
                weight=0.05,
                bias=0.05,
                mode="hybrid",
            ),
        ),
        controllers={"ad_delivery": PidState()},
        control_tick=500,
        bootstrap_requests=500,
        analysis_start=500,
        tags_by_type={"other": ("promo",)},
    )


SCENARIOS = {
    "delivery": scenario_delivery,
    "inflation": scenario_inflation,
    "ablation": scenario_ablation,
    "anchor": scenario_anchor,
    "default": scenario_default,
}


def config_from_dict(d: Mapping[str, Any]) -> SimConfig:
    """Parse a config mapping: either a full SimConfig or a scenario reference."""
    if "scenario" in d:
        name = d["scenario"]
        if name not in SCENARIOS:
            raise ValidationError(f"unknown scenario {name!r}")
        config = SCENARIOS[name](int(d.get("seed", 0)))
        overrides = {k: v for k, v in d.items() if k not in ("scenario", "seed")}
        if overrides:
            base = config.to_dict()
            base.update(overrides)
            config = SimConfig.from_dict(base)
        return config
    return SimConfig.from_dict(d)


__all__ = [
    "SCENARIOS",
    "config_from_dict",
    "scenario_ablation",
    "scenario_anchor",
    "scenario_default",
    "scenario_delivery",
    "scenario_inflation",
]
