"""Online blending: align, boost per plan, aggregate linearly, sort, truncate.

Two pipelines live here. blend() is the value-aligned one: every enabled
plan contributes an independent additive gain weight * aligned + bias, and
the final score is the aligned value plus those gains summed in
lexicographic plan_id order. legacy_blend() is the coupled baseline used as
the experimental control: plan weights multiply on the raw-score scale as a
(1 + w) cascade, biases add on the raw scale, and alignment is applied only
after weighting. Its whole boost is recorded under the pseudo plan id
"__legacy__".

Both pipelines are pure functions of (request, registry, params) and rank
by (final desc, candidate_id asc).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

from .alignment import AlignmentParams, align_score
from .core import (
    BlendDecision,
    Candidate,
    DuplicateCandidateId,
    Plan,
    PlanRegistry,
    ScoreDecomposition,
    ValidationError,
    plan_applies,
    ranking_key,
    validate_candidate,
)

LEGACY_PLAN_ID = "__legacy__"


@dataclass(frozen=True)
class BlendRequest:
    """One ranking request: candidates plus the number of exposure slots."""

    request_id: str
    candidates: tuple[Candidate, ...]
    k: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "request_id": self.request_id,
            "candidates": [c.to_dict() for c in self.candidates],
            "k": self.k,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "BlendRequest":
        return cls(
            request_id=d["request_id"],
            candidates=tuple(Candidate.from_dict(c) for c in d["candidates"]),
            k=int(d["k"]),
        )


def validate_request(request: BlendRequest) -> BlendRequest:
    if not request.request_id:
        raise ValidationError("request_id must be non-empty")
    if request.k < 1:
        raise ValidationError("k must be at least 1")
    if not request.candidates:
        raise ValidationError("request must contain at least one candidate")
    seen: set[str] = set()
    for candidate in request.candidates:
        validate_candidate(candidate)
        if candidate.id in seen:
            raise DuplicateCandidateId(candidate.id)
        seen.add(candidate.id)
    return request


def compute_boost(plan: Plan, candidate: Candidate, aligned: float) -> float:
    """Independent gain of one plan for one candidate: 0 for non-members."""
    if not plan_applies(plan, candidate):
        return 0.0
    return plan.weight * aligned + plan.bias


def blend(
    request: BlendRequest,
    registry: PlanRegistry,
    params: AlignmentParams,
) -> BlendDecision:
    """Value-aligned pipeline: align, boost independently, sum, sort, truncate."""
    validate_request(request)
    plans = registry.enabled_plans()  # already in lexicographic plan_id order
    items = []
    for candidate in request.candidates:
        aligned = align_score(candidate.raw_score, params)
        boosts: dict[str, float] = {}
        final = aligned
        for plan in plans:
            if plan_applies(plan, candidate):
                gain = plan.weight * aligned + plan.bias
                boosts[plan.plan_id] = gain
                final += gain
        items.append(
            ScoreDecomposition(
                candidate_id=candidate.id,
                raw=candidate.raw_score,
                aligned=aligned,
                plan_boosts=boosts,
                final=final,
            )
        )
    items.sort(key=ranking_key)
    return BlendDecision(
        request_id=request.request_id,
        ranked=tuple(items),
        exposed_k=min(request.k, len(items)),
        registry_version=registry.version,
        alignment_snapshot=params.to_dict(),
    )


def legacy_blend(
    request: BlendRequest,
    registry: PlanRegistry,
    params: AlignmentParams,
) -> BlendDecision:
    """Coupled baseline: weight on raw scores first, align afterwards.

    Matching plan weights stack multiplicatively as a (1 + w) cascade and
    biases add, both on the raw-score scale, before the aligned total is
    computed. Uses the same mean estimators as blend(). The decomposition
    stores final = aligned + coupled_boost so that additivity reconstruction
    stays bit-exact.
    """
    validate_request(request)
    plans = registry.enabled_plans()
    items = []
    for candidate in request.candidates:
        weighted = candidate.raw_score
        for plan in plans:
            if plan_applies(plan, candidate):
                weighted *= 1.0 + plan.weight
        for plan in plans:
            if plan_applies(plan, candidate):
                weighted += plan.bias
        aligned = align_score(candidate.raw_score, params)
        coupled = align_score(weighted, params) - aligned
        boosts = {LEGACY_PLAN_ID: coupled} if coupled != 0.0 else {}
        items.append(
            ScoreDecomposition(
                candidate_id=candidate.id,
                raw=candidate.raw_score,
                aligned=aligned,
                plan_boosts=boosts,
                final=aligned + coupled,
            )
        )
    items.sort(key=ranking_key)
    return BlendDecision(
        request_id=request.request_id,
        ranked=tuple(items),
        exposed_k=min(request.k, len(items)),
        registry_version=registry.version,
        alignment_snapshot=params.to_dict(),
    )


def decompose(decision: BlendDecision, candidate_id: str) -> ScoreDecomposition:
    """Look up the stored decomposition; never recomputes."""
    return decision.decomposition(candidate_id)


__all__ = [
    "LEGACY_PLAN_ID",
    "BlendRequest",
    "blend",
    "compute_boost",
    "decompose",
    "legacy_blend",
    "validate_request",
]
