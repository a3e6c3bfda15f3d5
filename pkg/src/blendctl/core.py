"""Shared domain types for the blending pipeline.

Everything here is an immutable value: mutation happens by constructing a
new object (the registry bumps its version on every change). All scores are
64-bit floats and plan boosts are always summed in lexicographic plan_id
order, so score additivity can be checked bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional

CONTENT_TYPES = ("organic", "ad", "cold_start", "other")

PLAN_MODES = ("static", "pid_delivered", "hybrid")


class ValidationError(ValueError):
    """A domain invariant was violated."""


class NegativeRawScore(ValidationError):
    pass


class EmptyId(ValidationError):
    pass


class DuplicateCandidateId(ValidationError):
    pass


class UnknownCandidate(KeyError):
    pass


class UnknownPlan(KeyError):
    pass


class WrongMode(ValidationError):
    pass


@dataclass(frozen=True, slots=True)
class Candidate:
    """One item entering the blending stage, scored upstream."""

    id: str
    content_type: str
    raw_score: float
    tags: frozenset[str] = frozenset()

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "content_type": self.content_type,
            "raw_score": self.raw_score,
            "tags": sorted(self.tags),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Candidate":
        return cls(
            id=d["id"],
            content_type=d["content_type"],
            raw_score=float(d["raw_score"]),
            tags=frozenset(d.get("tags", ())),
        )


def validate_candidate(candidate: Candidate) -> Candidate:
    """Return the candidate unchanged if its invariants hold."""
    if not candidate.id:
        raise EmptyId("candidate id must be non-empty")
    if candidate.content_type not in CONTENT_TYPES:
        raise ValidationError(f"unknown content_type {candidate.content_type!r}")
    # NaN fails the >= comparison, so non-finite scores are caught here too.
    if not (candidate.raw_score >= 0.0 and math.isfinite(candidate.raw_score)):
        raise NegativeRawScore(
            f"raw_score must be a finite nonnegative real, got {candidate.raw_score!r}"
        )
    return candidate


@dataclass(frozen=True, slots=True)
class Selector:
    """Conjunction of a content-type equality and required tag memberships.

    Both parts are optional; an empty selector matches every candidate.
    """

    content_type: Optional[str] = None
    required_tags: frozenset[str] = frozenset()

    def matches(self, candidate: Candidate) -> bool:
        if self.content_type is not None and candidate.content_type != self.content_type:
            return False
        return self.required_tags <= candidate.tags

    def to_dict(self) -> dict[str, Any]:
        return {
            "content_type": self.content_type,
            "required_tags": sorted(self.required_tags),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Selector":
        return cls(
            content_type=d.get("content_type"),
            required_tags=frozenset(d.get("required_tags", ())),
        )


@dataclass(frozen=True, slots=True)
class Plan:
    """One business weighting scheme applied at blending time.

    mode semantics:
      static        fixed weight and a fixed configured bias (default 0)
      pid_delivered weight pinned to 0; bias written by the delivery controller
      hybrid        both weight and bias active as configured
    """

    plan_id: str
    selector: Selector
    weight: float = 0.0
    bias: float = 0.0
    mode: str = "static"
    target_share: Optional[float] = None
    enabled: bool = True

    def to_dict(self) -> dict[str, Any]:
        return {
            "plan_id": self.plan_id,
            "selector": self.selector.to_dict(),
            "weight": self.weight,
            "bias": self.bias,
            "mode": self.mode,
            "target_share": self.target_share,
            "enabled": self.enabled,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Plan":
        return cls(
            plan_id=d["plan_id"],
            selector=Selector.from_dict(d["selector"]),
            weight=float(d.get("weight", 0.0)),
            bias=float(d.get("bias", 0.0)),
            mode=d.get("mode", "static"),
            target_share=(None if d.get("target_share") is None else float(d["target_share"])),
            enabled=bool(d.get("enabled", True)),
        )


def validate_plan(plan: Plan) -> Plan:
    if not plan.plan_id:
        raise EmptyId("plan_id must be non-empty")
    if plan.mode not in PLAN_MODES:
        raise ValidationError(f"unknown plan mode {plan.mode!r}")
    if plan.mode == "pid_delivered":
        if plan.target_share is None:
            raise ValidationError("pid_delivered plan requires target_share")
        if not (0.0 <= plan.target_share <= 1.0):
            raise ValidationError("target_share must lie in [0, 1]")
        if plan.weight != 0.0:
            raise ValidationError("pid_delivered plan must have weight 0")
    for v, name in ((plan.weight, "weight"), (plan.bias, "bias")):
        if not math.isfinite(v):
            raise ValidationError(f"plan {name} must be finite")
    return plan


def plan_applies(plan: Plan, candidate: Candidate) -> bool:
    """Membership indicator: true iff the plan's selector matches."""
    return plan.selector.matches(candidate)


@dataclass(frozen=True)
class PlanRegistry:
    """Ordered, versioned collection of plans.

    Iteration order is lexicographic by plan_id so that boost summation and
    serialization are deterministic.
    """

    plans: tuple[Plan, ...] = ()
    version: int = 1

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.plans, key=lambda p: p.plan_id))
        ids = [p.plan_id for p in ordered]
        if len(set(ids)) != len(ids):
            raise ValidationError("plan_id must be unique within a registry")
        for p in ordered:
            validate_plan(p)
        object.__setattr__(self, "plans", ordered)

    def get(self, plan_id: str) -> Plan:
        for p in self.plans:
            if p.plan_id == plan_id:
                return p
        raise UnknownPlan(plan_id)

    def has(self, plan_id: str) -> bool:
        return any(p.plan_id == plan_id for p in self.plans)

    def enabled_plans(self) -> tuple[Plan, ...]:
        return tuple(p for p in self.plans if p.enabled)

    def with_plan(self, plan: Plan) -> "PlanRegistry":
        """Upsert one plan; version increments."""
        rest = tuple(p for p in self.plans if p.plan_id != plan.plan_id)
        return PlanRegistry(plans=rest + (validate_plan(plan),), version=self.version + 1)

    def without_plan(self, plan_id: str) -> "PlanRegistry":
        if not self.has(plan_id):
            raise UnknownPlan(plan_id)
        rest = tuple(p for p in self.plans if p.plan_id != plan_id)
        return PlanRegistry(plans=rest, version=self.version + 1)

    def replaced(self, plans: Iterable[Plan]) -> "PlanRegistry":
        return PlanRegistry(plans=tuple(plans), version=self.version + 1)

    def to_dict(self) -> dict[str, Any]:
        return {"version": self.version, "plans": [p.to_dict() for p in self.plans]}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PlanRegistry":
        return cls(
            plans=tuple(Plan.from_dict(p) for p in d.get("plans", ())),
            version=int(d.get("version", 1)),
        )


@dataclass(frozen=True, slots=True)
class ScoreDecomposition:
    """Per-item score breakdown: raw, aligned, per-plan boosts and final.

    The final score is always the aligned value plus the plan boosts summed
    in lexicographic plan_id order; recompute_final reproduces the stored
    value bit-exactly.
    """

    candidate_id: str
    raw: float
    aligned: float
    plan_boosts: dict[str, float]
    final: float

    def recompute_final(self) -> float:
        total = self.aligned
        for pid in sorted(self.plan_boosts):
            total += self.plan_boosts[pid]
        return total

    def to_dict(self) -> dict[str, Any]:
        return {
            "candidate_id": self.candidate_id,
            "raw": self.raw,
            "aligned": self.aligned,
            "plan_boosts": {pid: self.plan_boosts[pid] for pid in sorted(self.plan_boosts)},
            "final": self.final,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ScoreDecomposition":
        return cls(
            candidate_id=d["candidate_id"],
            raw=float(d["raw"]),
            aligned=float(d["aligned"]),
            plan_boosts={k: float(v) for k, v in d["plan_boosts"].items()},
            final=float(d["final"]),
        )


def ranking_key(item: ScoreDecomposition) -> tuple[float, str]:
    """Sort key for (final desc, candidate_id asc)."""
    return (-item.final, item.candidate_id)


@dataclass(frozen=True)
class BlendDecision:
    """Ranked output of one blend call with full score decompositions."""

    request_id: str
    ranked: tuple[ScoreDecomposition, ...]
    exposed_k: int
    registry_version: int
    alignment_snapshot: dict[str, Any] = field(default_factory=dict)

    def decomposition(self, candidate_id: str) -> ScoreDecomposition:
        for item in self.ranked:
            if item.candidate_id == candidate_id:
                return item
        raise UnknownCandidate(candidate_id)

    def exposed(self) -> tuple[ScoreDecomposition, ...]:
        return self.ranked[: self.exposed_k]

    def to_dict(self) -> dict[str, Any]:
        return {
            "request_id": self.request_id,
            "ranked": [item.to_dict() for item in self.ranked],
            "exposed_k": self.exposed_k,
            "registry_version": self.registry_version,
            "alignment_snapshot": dict(self.alignment_snapshot),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "BlendDecision":
        return cls(
            request_id=d["request_id"],
            ranked=tuple(ScoreDecomposition.from_dict(i) for i in d["ranked"]),
            exposed_k=int(d["exposed_k"]),
            registry_version=int(d["registry_version"]),
            alignment_snapshot=dict(d.get("alignment_snapshot", {})),
        )


__all__ = [
    "CONTENT_TYPES",
    "PLAN_MODES",
    "BlendDecision",
    "Candidate",
    "DuplicateCandidateId",
    "EmptyId",
    "NegativeRawScore",
    "Plan",
    "PlanRegistry",
    "ScoreDecomposition",
    "Selector",
    "UnknownCandidate",
    "UnknownPlan",
    "ValidationError",
    "WrongMode",
    "plan_applies",
    "ranking_key",
    "validate_candidate",
    "validate_plan",
]
