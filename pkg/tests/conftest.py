from __future__ import annotations

import pytest

from blendctl.alignment import AlignmentParams
from blendctl.core import Candidate, Plan, PlanRegistry, Selector


@pytest.fixture
def identity_params() -> AlignmentParams:
    """mu_score == mu_anchor == 1, so aligned scores equal raw scores."""
    return AlignmentParams(mu_score=1.0, mu_anchor=1.0)


def make_candidate(cid: str, raw: float, ctype: str = "organic", tags: set[str] | None = None) -> Candidate:
    return Candidate(id=cid, content_type=ctype, raw_score=raw, tags=frozenset(tags or ()))


def make_static_plan(plan_id: str, ctype: str | None = None, weight: float = 0.0,
                     bias: float = 0.0, tags: set[str] | None = None) -> Plan:
    return Plan(
        plan_id=plan_id,
        selector=Selector(content_type=ctype, required_tags=frozenset(tags or ())),
        weight=weight,
        bias=bias,
        mode="static",
    )


def make_registry(*plans: Plan, version: int = 1) -> PlanRegistry:
    return PlanRegistry(plans=tuple(plans), version=version)
