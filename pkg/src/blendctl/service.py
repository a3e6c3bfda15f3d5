"""HTTP service around the blending pipeline.

Owns the mutable documents (plan registry, alignment parameters, controller
states), hands immutable snapshots to every blend, and persists each
document as a whole JSON file so a restart resumes with identical outputs.
Optionally drives the traffic simulator in a background thread (live_sim
mode) so the operator console has something to steer.

Endpoints:
  POST /blend                     rank a candidate set under current snapshots
  GET  /plans                     registry with version
  PUT  /plans                     replace all plans (optimistic: expected_version)
  GET/PUT/DELETE /plans/{id}      single plan (optimistic on PUT/DELETE)
  GET  /reports/plans?window=N    per-plan ROI reports for a closed window
  GET  /metrics/stream            server-sent events, one message per closed window
  POST /whatif                    side-by-side current vs overridden decision
  GET  /status                    run mode and counters
  GET  /sample/request            a recent candidate set (console what-if seed)
"""

from __future__ import annotations

import json
import os
import threading
import time
from contextlib import asynccontextmanager

import numpy as np
from collections import deque
from pathlib import Path
from typing import Any, Mapping, Optional

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .alignment import AlignmentParams, AnchorSample, DegenerateParams, bootstrap_alignment, update_alignment
from .attribution import plan_reports
from .blending import BlendRequest, blend
from .control import EmptyWindow, PidState, apply_controller_outputs, measure_exposure_share, pid_step
from .core import Plan, PlanRegistry, UnknownPlan, ValidationError, validate_plan
from .sim import SimConfig, generate_request, sample_outcomes
from .tracking import EventTracker, ExposureEvent, drift_score

STREAM_POLL_SECONDS = 0.05


def _atomic_write(path: Path, payload: Mapping[str, Any]) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    os.replace(tmp, path)


class ServiceState:
    """All mutable service state behind one lock, snapshot-read by handlers."""

    def __init__(
        self,
        config: SimConfig,
        data_dir: Optional[Path] = None,
        live: bool = False,
        pace: float = 0.0,
    ) -> None:
        self.config = config
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.live = live
        self.pace = pace
        self.lock = threading.Lock()
        self.mode = "idle"
        self.sim_t = 0
        self.recent_requests: deque[BlendRequest] = deque(maxlen=32)
        self.stream_ticks: list[dict[str, Any]] = []
        self.registry_history: dict[int, PlanRegistry] = {}
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self._reference_hists: dict[str, Any] = {}

        if self.data_dir is not None:
            self.data_dir.mkdir(parents=True, exist_ok=True)

        restored = self._restore()
        if not restored:
            self._cold_start()
        self._remember(self.registry)

    # -- startup ------------------------------------------------------------

    def _restore(self) -> bool:
        if self.data_dir is None:
            return False
        reg_path = self.data_dir / "registry.json"
        align_path = self.data_dir / "alignment.json"
        ctrl_path = self.data_dir / "controllers.json"
        state_path = self.data_dir / "sim_state.json"
        if not (reg_path.exists() and align_path.exists()):
            return False
        self.registry = PlanRegistry.from_dict(json.loads(reg_path.read_text()))
        self.params = AlignmentParams.from_dict(json.loads(align_path.read_text()))
        self.controllers = {}
        if ctrl_path.exists():
            self.controllers = {
                pid: PidState.from_dict(d)
                for pid, d in json.loads(ctrl_path.read_text()).items()
            }
        if state_path.exists():
            self.sim_t = int(json.loads(state_path.read_text()).get("sim_t", 0))
        self._make_tracker(raw_hi=self._stored_raw_hi())
        return True

    def _stored_raw_hi(self) -> float:
        if self.data_dir is not None:
            meta = self.data_dir / "tracker.json"
            if meta.exists():
                return float(json.loads(meta.read_text()).get("raw_hi", 10.0))
        return 10.0

    def _cold_start(self) -> None:
        """Deterministic warmup of the configured scenario: plans disabled,
        alignment bootstrapped from the warmup exposures."""
        config = self.config
        identity = AlignmentParams(mu_score=1.0, mu_anchor=1.0, half_life=config.half_life)
        warmup_registry = config.warmup_registry()
        samples = []
        raws = []
        for t in range(config.bootstrap_requests):
            request = generate_request(config, t)
            decision = blend(request, warmup_registry, identity)
            ctypes = {c.id: c.content_type for c in request.candidates}
            exposed = decision.exposed()
            qs = [(d.raw * config.true_alignment_ratio(), ctypes[d.candidate_id]) for d in exposed]
            outs = sample_outcomes(qs, np.random.default_rng([config.seed, 1, t]), config.outcome_model)
            for rank, d in enumerate(exposed):
                samples.append(AnchorSample(d.raw, outs[rank]["effective_completion"]))
            raws.extend(d.raw for d in decision.ranked)
        if samples:
            self.params = bootstrap_alignment(
                samples, half_life=config.half_life, min_bootstrap=min(1000, len(samples))
            )
        else:
            self.params = identity
        raw_hi = float(np.percentile(np.asarray(raws), 99)) if raws else 10.0
        self.registry = config.registry()
        self.controllers = {
            p.plan_id: self.config.controllers.get(p.plan_id, PidState())
            for p in config.plans
            if p.mode == "pid_delivered"
        }
        self.sim_t = config.bootstrap_requests
        self._make_tracker(raw_hi=raw_hi)
        if self.data_dir is not None:
            _atomic_write(self.data_dir / "tracker.json", {"raw_hi": raw_hi})
        self.persist()

    def _make_tracker(self, raw_hi: float) -> None:
        self.tracker = EventTracker(
            window_length=float(self.config.control_tick),
            raw_hi=raw_hi,
            anchor_hi=2.0 * self.params.mu_anchor,
            plan_ids=[p.plan_id for p in self.config.plans],
            log_dir=self.data_dir,
            segment_name="service",
        )

    # -- snapshots and mutation ----------------------------------------------

    def snapshot(self) -> tuple[PlanRegistry, AlignmentParams]:
        with self.lock:
            return self.registry, self.params

    def _remember(self, registry: PlanRegistry) -> None:
        self.registry_history[registry.version] = registry

    def registry_at(self, version: int) -> PlanRegistry:
        return self.registry_history[version]

    def persist(self) -> None:
        if self.data_dir is None:
            return
        _atomic_write(self.data_dir / "registry.json", self.registry.to_dict())
        _atomic_write(self.data_dir / "alignment.json", self.params.to_dict())
        _atomic_write(
            self.data_dir / "controllers.json",
            {pid: s.to_dict() for pid, s in self.controllers.items()},
        )
        _atomic_write(self.data_dir / "sim_state.json", {"sim_t": self.sim_t})

    def swap_registry(self, expected_version: int, plans: list[Plan]) -> PlanRegistry:
        with self.lock:
            if expected_version != self.registry.version:
                raise StaleVersion(self.registry.version)
            self.registry = self.registry.replaced(plans)
            self._remember(self.registry)
            self.persist()
            return self.registry

    def upsert_plan(self, expected_version: int, plan: Plan) -> PlanRegistry:
        with self.lock:
            if expected_version != self.registry.version:
                raise StaleVersion(self.registry.version)
            self.registry = self.registry.with_plan(plan)
            self._remember(self.registry)
            self.persist()
            return self.registry

    def delete_plan(self, expected_version: int, plan_id: str) -> PlanRegistry:
        with self.lock:
            if expected_version != self.registry.version:
                raise StaleVersion(self.registry.version)
            self.registry = self.registry.without_plan(plan_id)
            self._remember(self.registry)
            self.persist()
            return self.registry

    # -- live simulation ------------------------------------------------------

    def start(self) -> None:
        if self.live and self._thread is None:
            self.mode = "live_sim"
            self._thread = threading.Thread(target=self._sim_loop, daemon=True)
            self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None
        self.mode = "idle"
        self.tracker.close()

    def _sim_loop(self) -> None:
        config = self.config
        c_true = config.true_alignment_ratio()
        pending: list[AnchorSample] = []
        while not self._stop.is_set():
            t = self.sim_t
            request = generate_request(config, t)
            registry, params = self.snapshot()
            decision = blend(request, registry, params)
            with self.lock:
                self.recent_requests.append(request)
            ctypes = {c.id: c.content_type for c in request.candidates}
            exposed = decision.exposed()
            qs = [(d.raw * c_true, ctypes[d.candidate_id]) for d in exposed]
            outs = sample_outcomes(qs, np.random.default_rng([config.seed, 1, t]), config.outcome_model)
            for rank, d in enumerate(decision.ranked):
                is_exposed = rank < decision.exposed_k
                self.tracker.record(
                    ExposureEvent(
                        request_id=decision.request_id,
                        timestamp=float(t),
                        candidate_id=d.candidate_id,
                        content_type=ctypes[d.candidate_id],
                        decomposition=d,
                        exposed=is_exposed,
                        position=rank if is_exposed else None,
                        outcomes=outs[rank] if is_exposed else None,
                    )
                )
            for rank in range(len(exposed)):
                pending.append(AnchorSample(exposed[rank].raw, outs[rank]["effective_completion"]))
            self.sim_t = t + 1
            if (t + 1) % config.control_tick == 0:
                self._close_tick(t, pending)
                pending = []
            if self.pace > 0:
                time.sleep(1.0 / self.pace)

    def _close_tick(self, t: int, pending: list[AnchorSample]) -> None:
        wid = self.tracker.window_id_for(float(t))
        window_events = self.tracker.window_events(wid)
        start = wid * self.config.control_tick
        end = (wid + 1) * self.config.control_tick
        shares: dict[str, Optional[float]] = {}
        biases: dict[str, float] = {}
        with self.lock:
            outputs: dict[str, float] = {}
            for plan_id, state in self.controllers.items():
                try:
                    plan = self.registry.get(plan_id)
                except UnknownPlan:
                    continue
                if plan.mode != "pid_delivered" or not plan.enabled:
                    continue
                try:
                    m = measure_exposure_share(window_events, plan, start, end)
                except EmptyWindow:
                    shares[plan_id] = None
                    continue
                new_state, bias = pid_step(state, m.share, plan.target_share or 0.0, dt=1.0)
                self.controllers[plan_id] = new_state
                outputs[plan_id] = bias
                shares[plan_id] = m.share
                biases[plan_id] = bias
            if outputs:
                self.registry = apply_controller_outputs(self.registry, outputs)
                self._remember(self.registry)
            for plan in self.registry.plans:
                if plan.plan_id not in shares:
                    try:
                        shares[plan.plan_id] = measure_exposure_share(
                            window_events, plan, start, end
                        ).share
                    except EmptyWindow:
                        shares[plan.plan_id] = None
            self.params = update_alignment(self.params, pending, updated_at=float(t + 1))
            registry_version = self.registry.version
            self.persist()
        self.tracker.close_window(wid)
        boost_abs = 0.0
        final_abs = 0.0
        for e in window_events:
            if e.exposed:
                boost_abs += sum(abs(g) for g in e.decomposition.plan_boosts.values())
                final_abs += abs(e.decomposition.final)
        drift: dict[str, Optional[float]] = {}
        for stage in ("aligned", "final"):
            current = self.tracker.histogram(stage, wid)
            ref = self._reference_hists.get(stage)
            if ref is None and current.total > 0:
                self._reference_hists[stage] = current
                ref = current
            drift[stage] = drift_score(ref, current) if ref is not None and current.total > 0 else None
        tick = {
            "window_id": wid,
            "t_end": (wid + 1) * self.config.control_tick,
            "registry_version": registry_version,
            "shares": shares,
            "biases": biases,
            "drift": drift,
            "boost_final_ratio": (boost_abs / final_abs if final_abs else 0.0),
            "event_count": self.tracker.event_count,
        }
        with self.lock:
            self.stream_ticks.append(tick)


class StaleVersion(Exception):
    def __init__(self, current_version: int) -> None:
        super().__init__(f"stale expected_version; current is {current_version}")
        self.current_version = current_version


def create_app(
    config: SimConfig,
    data_dir: Optional[Path] = None,
    live: bool = False,
    pace: float = 0.0,
    ui_dir: Optional[Path] = None,
) -> FastAPI:
    state = ServiceState(config, data_dir=data_dir, live=live, pace=pace)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        state.start()
        yield
        state.stop()

    app = FastAPI(title="blendctl service", version="0.1.0", lifespan=lifespan)
    app.state.service = state

    @app.exception_handler(ValidationError)
    def _validation_error(_req: Request, exc: ValidationError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(DegenerateParams)
    def _degenerate(_req: Request, exc: DegenerateParams) -> JSONResponse:
        return JSONResponse(status_code=503, content={"error": str(exc)})

    @app.exception_handler(StaleVersion)
    def _stale(_req: Request, exc: StaleVersion) -> JSONResponse:
        return JSONResponse(
            status_code=409,
            content={"error": str(exc), "current_version": exc.current_version},
        )

    @app.exception_handler(UnknownPlan)
    def _unknown_plan(_req: Request, exc: UnknownPlan) -> JSONResponse:
        return JSONResponse(status_code=404, content={"error": f"unknown plan: {exc}"})

    # -- blending ------------------------------------------------------------

    @app.post("/blend")
    def post_blend(body: dict) -> dict:
        try:
            request = BlendRequest.from_dict(body)
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed blend request: {exc}")
        registry, params = state.snapshot()
        decision = blend(request, registry, params)
        with state.lock:
            state.recent_requests.append(request)
        t = float(state.sim_t)
        ctypes = {c.id: c.content_type for c in request.candidates}
        for rank, d in enumerate(decision.ranked):
            is_exposed = rank < decision.exposed_k
            state.tracker.record(
                ExposureEvent(
                    request_id=decision.request_id,
                    timestamp=t,
                    candidate_id=d.candidate_id,
                    content_type=ctypes[d.candidate_id],
                    decomposition=d,
                    exposed=is_exposed,
                    position=rank if is_exposed else None,
                )
            )
        return decision.to_dict()

    # -- plan configuration ----------------------------------------------------

    @app.get("/plans")
    def get_plans() -> dict:
        registry, _ = state.snapshot()
        return registry.to_dict()

    @app.put("/plans")
    def put_plans(body: dict) -> dict:
        expected = int(body.get("expected_version", -1))
        plans = [validate_plan(Plan.from_dict(p)) for p in body.get("plans", [])]
        return state.swap_registry(expected, plans).to_dict()

    @app.get("/plans/{plan_id}")
    def get_plan(plan_id: str) -> dict:
        registry, _ = state.snapshot()
        plan = registry.get(plan_id)
        return {"plan": plan.to_dict(), "version": registry.version}

    @app.put("/plans/{plan_id}")
    def put_plan(plan_id: str, body: dict) -> dict:
        expected = int(body.get("expected_version", -1))
        plan_dict = dict(body.get("plan", {}))
        plan_dict["plan_id"] = plan_id
        plan = validate_plan(Plan.from_dict(plan_dict))
        return state.upsert_plan(expected, plan).to_dict()

    @app.delete("/plans/{plan_id}")
    def delete_plan(plan_id: str, expected_version: int = Query(...)) -> dict:
        return state.delete_plan(expected_version, plan_id).to_dict()

    # -- reports and metrics ---------------------------------------------------

    @app.get("/reports/plans")
    def get_reports(window: int = Query(...)) -> JSONResponse:
        if window > state.tracker.closed_upto:
            return JSONResponse(status_code=425, content={"error": "window still open"})
        registry, _ = state.snapshot()
        start = window * state.config.control_tick
        end = (window + 1) * state.config.control_tick
        reports = plan_reports(state.tracker.events, registry, float(start), float(end))
        return JSONResponse(content={"window": window, "reports": [r.to_dict() for r in reports]})

    @app.get("/histograms")
    def get_histogram(
        stage: str = Query(...),
        window: int = Query(...),
        plan_id: Optional[str] = Query(default=None),
    ) -> dict:
        try:
            hist = state.tracker.histogram(stage, window, plan_id=plan_id)
        except ValueError as exc:
            raise ValidationError(str(exc))
        return hist.to_dict()

    @app.get("/metrics/stream")
    def metrics_stream(max_ticks: Optional[int] = Query(default=None)) -> StreamingResponse:
        def gen():
            cursor = 0
            sent = 0
            while True:
                with state.lock:
                    new = state.stream_ticks[cursor:]
                    cursor = len(state.stream_ticks)
                for tick in new:
                    yield f"data: {json.dumps(tick, separators=(',', ':'))}\n\n"
                    sent += 1
                    if max_ticks is not None and sent >= max_ticks:
                        return
                if state.mode != "live_sim" and max_ticks is None:
                    # idle services still serve already-closed ticks, then hold
                    time.sleep(STREAM_POLL_SECONDS)
                else:
                    time.sleep(STREAM_POLL_SECONDS)

        return StreamingResponse(gen(), media_type="text/event-stream")

    # -- what-if ---------------------------------------------------------------

    @app.post("/whatif")
    def post_whatif(body: dict) -> dict:
        overrides = body.get("overrides", {})
        registry, params = state.snapshot()
        plans = {p.plan_id: p for p in registry.plans}
        for plan_id, fields in overrides.items():
            if plan_id not in plans:
                raise UnknownPlan(plan_id)
            merged = plans[plan_id].to_dict()
            merged.update(fields)
            merged["plan_id"] = plan_id
            plans[plan_id] = validate_plan(Plan.from_dict(merged))
        hypothetical = PlanRegistry(plans=tuple(plans.values()), version=registry.version)
        if body.get("request") is not None:
            request = BlendRequest.from_dict(body["request"])
        else:
            with state.lock:
                if not state.recent_requests:
                    raise ValidationError("no sample request available yet")
                request = state.recent_requests[-1]
        current = blend(request, registry, params)
        overridden = blend(request, hypothetical, params)
        return {"current": current.to_dict(), "hypothetical": overridden.to_dict()}

    # -- misc -------------------------------------------------------------------

    @app.get("/status")
    def get_status() -> dict:
        registry, params = state.snapshot()
        return {
            "mode": state.mode,
            "sim_t": state.sim_t,
            "closed_window": state.tracker.closed_upto,
            "registry_version": registry.version,
            "event_count": state.tracker.event_count,
            "alignment": params.to_dict(),
            "control_tick": state.config.control_tick,
        }

    @app.get("/sample/request")
    def get_sample_request() -> dict:
        with state.lock:
            if not state.recent_requests:
                raise ValidationError("no requests seen yet")
            return state.recent_requests[-1].to_dict()

    if ui_dir is not None and Path(ui_dir).exists():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


__all__ = ["ServiceState", "StaleVersion", "create_app"]
