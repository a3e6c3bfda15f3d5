"""Value alignment: map raw blending scores into anchor-metric units.

The map is a single global ratio y = raw * mu_anchor / mu_score, so it is
strictly increasing and order preserving. The two means are estimated from
exposed traffic: bootstrapped from an initial sample and then kept fresh
with a per-event exponential moving average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Iterable, Mapping, Sequence

EPS_SCORE_FLOOR = 1e-9
EPS_ANCHOR_FLOOR = 1e-6
DEFAULT_HALF_LIFE = 100_000.0
DEFAULT_MIN_BOOTSTRAP = 1000


class DegenerateParams(ValueError):
    """mu_score fell below the configured floor; the ratio is unusable."""


class InsufficientSamples(ValueError):
    pass


class AllZeroScores(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class AnchorSample:
    """One exposed item: its raw score and the observed anchor outcome."""

    raw_score: float
    anchor_outcome: float


@dataclass(frozen=True, slots=True)
class AlignmentParams:
    """Global alignment state: the two means plus estimation bookkeeping."""

    mu_score: float
    mu_anchor: float
    sample_count: int = 0
    updated_at: float = 0.0
    half_life: float = DEFAULT_HALF_LIFE

    def to_dict(self) -> dict[str, Any]:
        return {
            "mu_score": self.mu_score,
            "mu_anchor": self.mu_anchor,
            "sample_count": self.sample_count,
            "updated_at": self.updated_at,
            "half_life": self.half_life,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AlignmentParams":
        return cls(
            mu_score=float(d["mu_score"]),
            mu_anchor=float(d["mu_anchor"]),
            sample_count=int(d.get("sample_count", 0)),
            updated_at=float(d.get("updated_at", 0.0)),
            half_life=float(d.get("half_life", DEFAULT_HALF_LIFE)),
        )


def _clamp_anchor(value: float) -> float:
    return min(max(value, EPS_ANCHOR_FLOOR), 1.0)


def align_score(raw: float, params: AlignmentParams) -> float:
    """Rescale a raw score into anchor-metric units."""
    if not (params.mu_score >= EPS_SCORE_FLOOR) or not math.isfinite(params.mu_score):
        raise DegenerateParams(f"mu_score={params.mu_score!r} below floor {EPS_SCORE_FLOOR}")
    return raw * params.mu_anchor / params.mu_score


def bootstrap_alignment(
    samples: Sequence[AnchorSample],
    half_life: float = DEFAULT_HALF_LIFE,
    min_bootstrap: int = DEFAULT_MIN_BOOTSTRAP,
    updated_at: float = 0.0,
) -> AlignmentParams:
    """Estimate the means from an initial batch of exposed samples."""
    if len(samples) < min_bootstrap:
        raise InsufficientSamples(f"need at least {min_bootstrap} samples, got {len(samples)}")
    if not any(s.raw_score > 0.0 for s in samples):
        raise AllZeroScores("cannot bootstrap from all-zero raw scores")
    n = len(samples)
    mu_score = sum(s.raw_score for s in samples) / n
    mu_anchor = sum(s.anchor_outcome for s in samples) / n
    return AlignmentParams(
        mu_score=max(mu_score, EPS_SCORE_FLOOR),
        mu_anchor=_clamp_anchor(mu_anchor),
        sample_count=n,
        updated_at=updated_at,
        half_life=half_life,
    )


def update_alignment(
    params: AlignmentParams,
    batch: Iterable[AnchorSample],
    updated_at: float | None = None,
) -> AlignmentParams:
    """Fold a batch of samples into the means, one EMA step per event.

    The per-event decay is alpha = 1 - 2**(-1/half_life), so the weight of
    old data halves every half_life events. Applying a concatenated batch
    equals applying its parts in order.
    """
    alpha = 1.0 - 2.0 ** (-1.0 / params.half_life)
    mu_score = params.mu_score
    mu_anchor = params.mu_anchor
    count = params.sample_count
    for sample in batch:
        mu_score += alpha * (sample.raw_score - mu_score)
        mu_anchor += alpha * (sample.anchor_outcome - mu_anchor)
        count += 1
    if count == params.sample_count:
        return params
    return replace(
        params,
        mu_score=max(mu_score, EPS_SCORE_FLOOR),
        mu_anchor=_clamp_anchor(mu_anchor),
        sample_count=count,
        updated_at=params.updated_at if updated_at is None else updated_at,
    )


__all__ = [
    "EPS_ANCHOR_FLOOR",
    "EPS_SCORE_FLOOR",
    "DEFAULT_HALF_LIFE",
    "DEFAULT_MIN_BOOTSTRAP",
    "AlignmentParams",
    "AllZeroScores",
    "AnchorSample",
    "DegenerateParams",
    "InsufficientSamples",
    "align_score",
    "bootstrap_alignment",
    "update_alignment",
]
