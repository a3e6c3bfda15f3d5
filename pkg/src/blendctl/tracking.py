"""Near-line distribution tracking: event log, stage histograms, drift.

The log is append-only newline-delimited JSON, one exposure event per line,
segmented by window so a run can be replayed exactly. Histograms are kept
per window for four stages: raw scores, aligned scores, per-plan boost
scores and final scores. Drift between two histograms is scored with the
population stability index.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np

from .core import ScoreDecomposition, UnknownPlan, ValidationError

OUTCOME_METRICS = (
    "effective_completion",
    "play_duration",
    "click",
    "buy",
    "interaction",
    "slide",
)

PROPORTION_FLOOR = 1e-6
DEFAULT_WINDOW_REQUESTS = 500
DEFAULT_BIN_COUNT = 50


class InvalidEvent(ValidationError):
    pass


class BinMismatch(ValueError):
    pass


class EmptyHistogram(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class ExposureEvent:
    """One ranked candidate of one request, with posterior outcomes if exposed."""

    request_id: str
    timestamp: float
    candidate_id: str
    content_type: str
    decomposition: ScoreDecomposition
    exposed: bool
    position: Optional[int] = None
    outcomes: Optional[dict[str, float]] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "request_id": self.request_id,
            "timestamp": self.timestamp,
            "candidate_id": self.candidate_id,
            "content_type": self.content_type,
            "decomposition": self.decomposition.to_dict(),
            "exposed": self.exposed,
            "position": self.position,
            "outcomes": self.outcomes,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExposureEvent":
        return cls(
            request_id=d["request_id"],
            timestamp=float(d["timestamp"]),
            candidate_id=d["candidate_id"],
            content_type=d["content_type"],
            decomposition=ScoreDecomposition.from_dict(d["decomposition"]),
            exposed=bool(d["exposed"]),
            position=(None if d.get("position") is None else int(d["position"])),
            outcomes=(None if d.get("outcomes") is None else {k: float(v) for k, v in d["outcomes"].items()}),
        )


def validate_event(event: ExposureEvent) -> ExposureEvent:
    if event.outcomes is not None and not event.exposed:
        raise InvalidEvent("outcomes present on an unexposed item")
    if event.decomposition.recompute_final() != event.decomposition.final:
        raise InvalidEvent("decomposition does not satisfy additivity")
    return event


@dataclass(frozen=True)
class StageHistogram:
    """Binned counts of one score stage over one window."""

    stage: str
    plan_id: Optional[str]
    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    total: int
    window_start: float
    window_end: float

    def proportions(self) -> np.ndarray:
        if self.total == 0:
            raise EmptyHistogram(f"histogram for {self.stage} has no data")
        return np.asarray(self.counts, dtype=float) / self.total

    def to_dict(self) -> dict[str, Any]:
        return {
            "stage": self.stage,
            "plan_id": self.plan_id,
            "bin_edges": list(self.bin_edges),
            "counts": list(self.counts),
            "total": self.total,
            "window_start": self.window_start,
            "window_end": self.window_end,
        }


def drift_score(reference: StageHistogram, current: StageHistogram) -> float:
    """Population stability index between two same-shaped histograms.

    Proportions are floored at 1e-6 before the log ratio, so the score is
    finite for empty bins. Zero iff the floored proportions are equal.
    """
    if reference.bin_edges != current.bin_edges:
        raise BinMismatch("histograms use different bin edges")
    p = np.maximum(reference.proportions(), PROPORTION_FLOOR)
    q = np.maximum(current.proportions(), PROPORTION_FLOOR)
    return float(np.sum((q - p) * np.log(q / p)))


def _bin_values(values: Sequence[float], edges: np.ndarray) -> np.ndarray:
    """Histogram counts with out-of-range values clipped into the end bins,
    so totals are conserved."""
    if len(values) == 0:
        return np.zeros(len(edges) - 1, dtype=int)
    arr = np.clip(np.asarray(values, dtype=float), edges[0], edges[-1])
    counts, _ = np.histogram(arr, bins=edges)
    return counts.astype(int)


class _WindowAccumulator:
    """Raw values buffered per stage for one window; binned when the window closes."""

    def __init__(self, window_id: int, window_start: float, window_end: float) -> None:
        self.window_id = window_id
        self.window_start = window_start
        self.window_end = window_end
        self.seen_keys: set[tuple[str, str]] = set()
        self.raw: list[float] = []
        self.aligned: list[float] = []
        self.final: list[float] = []
        self.boosts: dict[str, list[float]] = {}
        self.events: list[ExposureEvent] = []


class EventTracker:
    """Append-only event log plus per-window stage histograms.

    Safe for concurrent record() calls from many serving workers. Windows
    are indexed by timestamp: window_id = floor(timestamp / window_length).
    Duplicate (request_id, candidate_id) pairs within a window are dropped.
    """

    def __init__(
        self,
        window_length: float = float(DEFAULT_WINDOW_REQUESTS),
        raw_hi: float = 10.0,
        anchor_hi: float = 1.0,
        bin_count: int = DEFAULT_BIN_COUNT,
        plan_ids: Iterable[str] = (),
        log_dir: Optional[Path] = None,
        segment_name: str = "tracking",
        retain_events: bool = True,
    ) -> None:
        self.window_length = float(window_length)
        self.bin_count = bin_count
        self.retain_events = retain_events
        self.raw_edges = tuple(np.linspace(0.0, max(raw_hi, 1e-9), bin_count + 1))
        self.anchor_edges = tuple(np.linspace(0.0, max(anchor_hi, 1e-9), bin_count + 1))
        self.plan_ids = set(plan_ids)
        self.log_dir = Path(log_dir) if log_dir is not None else None
        self.segment_name = segment_name
        self._lock = threading.Lock()
        self._events: list[ExposureEvent] = []
        self._windows: dict[int, _WindowAccumulator] = {}
        self._closed_histograms: dict[tuple[str, Optional[str], int], StageHistogram] = {}
        self._closed_upto = -1  # highest closed window id
        self._handle = None
        if self.log_dir is not None:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            path = self.log_dir / f"{segment_name}.events.jsonl"
            self._handle = path.open("a", encoding="utf-8")

    # -- recording ----------------------------------------------------------

    def window_id_for(self, timestamp: float) -> int:
        return int(timestamp // self.window_length)

    def record(self, event: ExposureEvent) -> bool:
        """Append one event; returns False for an in-window duplicate."""
        validate_event(event)
        wid = self.window_id_for(event.timestamp)
        key = (event.request_id, event.candidate_id)
        with self._lock:
            acc = self._windows.get(wid)
            if acc is None:
                acc = _WindowAccumulator(
                    wid, wid * self.window_length, (wid + 1) * self.window_length
                )
                self._windows[wid] = acc
            if key in acc.seen_keys:
                return False  # duplicate delivery: acknowledged, not re-counted
            acc.seen_keys.add(key)
            if self.retain_events:
                self._events.append(event)
            acc.events.append(event)
            d = event.decomposition
            acc.raw.append(d.raw)
            acc.aligned.append(d.aligned)
            acc.final.append(d.final)
            for pid, gain in d.plan_boosts.items():
                self.plan_ids.add(pid)
                acc.boosts.setdefault(pid, []).append(gain)
            if self._handle is not None:
                self._handle.write(json.dumps(event.to_dict(), separators=(",", ":")) + "\n")
        return True

    def close_window(self, window_id: int) -> None:
        """Freeze a window's histograms; flushes the log segment."""
        with self._lock:
            acc = self._windows.get(window_id)
            if acc is None:
                acc = _WindowAccumulator(
                    window_id,
                    window_id * self.window_length,
                    (window_id + 1) * self.window_length,
                )
                self._windows[window_id] = acc
            self._freeze(acc)
            self._closed_upto = max(self._closed_upto, window_id)
            if not self.retain_events:
                del self._windows[window_id]  # memory stays flat on long runs
            if self._handle is not None:
                self._handle.flush()

    def _freeze(self, acc: _WindowAccumulator) -> None:
        stages = [
            ("raw", None, acc.raw, self.raw_edges),
            ("aligned", None, acc.aligned, self.anchor_edges),
            ("final", None, acc.final, self.anchor_edges),
        ]
        for pid in self.plan_ids:
            stages.append(("boost", pid, acc.boosts.get(pid, []), self.anchor_edges))
        for stage, pid, values, edges in stages:
            counts = _bin_values(values, np.asarray(edges))
            self._closed_histograms[(stage, pid, acc.window_id)] = StageHistogram(
                stage=stage,
                plan_id=pid,
                bin_edges=edges,
                counts=tuple(int(c) for c in counts),
                total=int(counts.sum()),
                window_start=acc.window_start,
                window_end=acc.window_end,
            )

    def close(self) -> None:
        with self._lock:
            if self._handle is not None:
                self._handle.close()
                self._handle = None

    # -- queries ------------------------------------------------------------

    @property
    def events(self) -> list[ExposureEvent]:
        with self._lock:
            return list(self._events)

    @property
    def event_count(self) -> int:
        with self._lock:
            return len(self._events)

    @property
    def closed_upto(self) -> int:
        return self._closed_upto

    def histogram(
        self,
        stage: str,
        window_id: int,
        plan_id: Optional[str] = None,
    ) -> StageHistogram:
        """Histogram of one stage over one window (closed or current)."""
        if stage == "boost":
            if plan_id not in self.plan_ids:
                raise UnknownPlan(plan_id)
        elif stage not in ("raw", "aligned", "final"):
            raise ValueError(f"unknown stage {stage!r}")
        with self._lock:
            hist = self._closed_histograms.get((stage, plan_id, window_id))
            if hist is not None:
                return hist
            acc = self._windows.get(window_id)
            start = window_id * self.window_length
            end = (window_id + 1) * self.window_length
            edges = self.raw_edges if stage == "raw" else self.anchor_edges
            if acc is None:
                counts = tuple(0 for _ in range(self.bin_count))
                return StageHistogram(stage, plan_id, edges, counts, 0, start, end)
            if stage == "raw":
                values: Sequence[float] = acc.raw
            elif stage == "aligned":
                values = acc.aligned
            elif stage == "final":
                values = acc.final
            else:
                values = acc.boosts.get(plan_id, [])
            counts_arr = _bin_values(values, np.asarray(edges))
            return StageHistogram(
                stage,
                plan_id,
                edges,
                tuple(int(c) for c in counts_arr),
                int(counts_arr.sum()),
                start,
                end,
            )

    def window_events(self, window_id: int) -> list[ExposureEvent]:
        with self._lock:
            acc = self._windows.get(window_id)
            return list(acc.events) if acc is not None else []


def write_events_jsonl(events: Iterable[ExposureEvent], path: Path) -> int:
    """Write events as one compact JSON object per line; returns the count."""
    n = 0
    with Path(path).open("w", encoding="utf-8") as fh:
        for event in events:
            fh.write(json.dumps(event.to_dict(), separators=(",", ":")) + "\n")
            n += 1
    return n


def read_events_jsonl(path: Path) -> list[ExposureEvent]:
    events = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(ExposureEvent.from_dict(json.loads(line)))
    return events


__all__ = [
    "DEFAULT_BIN_COUNT",
    "DEFAULT_WINDOW_REQUESTS",
    "OUTCOME_METRICS",
    "PROPORTION_FLOOR",
    "BinMismatch",
    "EmptyHistogram",
    "EventTracker",
    "ExposureEvent",
    "InvalidEvent",
    "StageHistogram",
    "drift_score",
    "read_events_jsonl",
    "validate_event",
    "write_events_jsonl",
]
