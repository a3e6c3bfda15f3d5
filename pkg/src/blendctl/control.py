"""Closed-loop guaranteed delivery: PID on exposure share.

A positional discrete PID turns the gap between a plan's measured exposure
share and its target share into the bias term served for that plan. The
integral is clamped to a windup limit and is additionally frozen on ticks
where the output saturates in the direction the error is pushing
(conditional integration), so a long deficit cannot wind the bias past its
clamp.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Any, Iterable, Mapping, Optional

from .core import Plan, PlanRegistry, WrongMode

if TYPE_CHECKING:
    from .tracking import ExposureEvent

DEFAULT_KP = 0.5
DEFAULT_KI = 0.1
DEFAULT_KD = 0.0
DEFAULT_OUTPUT_MIN = 0.0
DEFAULT_OUTPUT_MAX = 1.0
DEFAULT_INTEGRAL_LIMIT = 10.0


class EmptyWindow(ValueError):
    """No exposures fell inside the measurement window."""


@dataclass(frozen=True, slots=True)
class PidState:
    """Gains, clamps and accumulated state of one plan's controller."""

    kp: float = DEFAULT_KP
    ki: float = DEFAULT_KI
    kd: float = DEFAULT_KD
    integral: float = 0.0
    last_error: Optional[float] = None
    output_min: float = DEFAULT_OUTPUT_MIN
    output_max: float = DEFAULT_OUTPUT_MAX
    integral_limit: float = DEFAULT_INTEGRAL_LIMIT
    last_output: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "kp": self.kp,
            "ki": self.ki,
            "kd": self.kd,
            "integral": self.integral,
            "last_error": self.last_error,
            "output_min": self.output_min,
            "output_max": self.output_max,
            "integral_limit": self.integral_limit,
            "last_output": self.last_output,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PidState":
        return cls(
            kp=float(d.get("kp", DEFAULT_KP)),
            ki=float(d.get("ki", DEFAULT_KI)),
            kd=float(d.get("kd", DEFAULT_KD)),
            integral=float(d.get("integral", 0.0)),
            last_error=(None if d.get("last_error") is None else float(d["last_error"])),
            output_min=float(d.get("output_min", DEFAULT_OUTPUT_MIN)),
            output_max=float(d.get("output_max", DEFAULT_OUTPUT_MAX)),
            integral_limit=float(d.get("integral_limit", DEFAULT_INTEGRAL_LIMIT)),
            last_output=float(d.get("last_output", 0.0)),
        )


@dataclass(frozen=True, slots=True)
class ExposureMeasurement:
    """Windowed exposure share of one plan's members."""

    plan_id: str
    window_start: float
    window_end: float
    exposed_plan: int
    exposed_total: int
    share: float


def measure_exposure_share(
    events: Iterable["ExposureEvent"],
    plan: Plan,
    window_start: float,
    window_end: float,
) -> ExposureMeasurement:
    """Count exposed items in [window_start, window_end).

    Membership is taken from the logged decomposition (a plan_boosts entry
    exists exactly when the selector matched at serve time), so the
    measurement reflects what the pipeline actually applied.
    """
    exposed_total = 0
    exposed_plan = 0
    for event in events:
        if not event.exposed:
            continue
        if not (window_start <= event.timestamp < window_end):
            continue
        exposed_total += 1
        if plan.plan_id in event.decomposition.plan_boosts:
            exposed_plan += 1
    if exposed_total == 0:
        raise EmptyWindow(f"no exposures in [{window_start}, {window_end})")
    return ExposureMeasurement(
        plan_id=plan.plan_id,
        window_start=window_start,
        window_end=window_end,
        exposed_plan=exposed_plan,
        exposed_total=exposed_total,
        share=exposed_plan / exposed_total,
    )


def pid_step(
    state: PidState,
    measured: float,
    target: float,
    dt: float,
) -> tuple[PidState, float]:
    """One positional PID update; returns (new state, bias)."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    error = target - measured
    candidate = state.integral + error * dt
    candidate = min(max(candidate, -state.integral_limit), state.integral_limit)
    derivative = 0.0 if state.last_error is None else (error - state.last_error) / dt
    unclamped = state.kp * error + state.ki * candidate + state.kd * derivative
    bias = min(max(unclamped, state.output_min), state.output_max)
    saturated_up = unclamped > state.output_max and error > 0.0
    saturated_down = unclamped < state.output_min and error < 0.0
    integral = state.integral if (saturated_up or saturated_down) else candidate
    new_state = replace(
        state,
        integral=integral,
        last_error=error,
        last_output=bias,
    )
    return new_state, bias


def apply_controller_outputs(
    registry: PlanRegistry,
    outputs: Mapping[str, float],
) -> PlanRegistry:
    """Write controller biases into their pid plans; version increments."""
    for plan_id in outputs:
        plan = registry.get(plan_id)  # raises UnknownPlan
        if plan.mode != "pid_delivered":
            raise WrongMode(f"plan {plan_id!r} has mode {plan.mode!r}, expected pid_delivered")
    plans = []
    for plan in registry.plans:
        if plan.plan_id in outputs:
            plans.append(replace(plan, bias=float(outputs[plan.plan_id])))
        else:
            plans.append(plan)
    return registry.replaced(plans)


__all__ = [
    "DEFAULT_INTEGRAL_LIMIT",
    "DEFAULT_KD",
    "DEFAULT_KI",
    "DEFAULT_KP",
    "DEFAULT_OUTPUT_MAX",
    "DEFAULT_OUTPUT_MIN",
    "EmptyWindow",
    "ExposureMeasurement",
    "PidState",
    "apply_controller_outputs",
    "measure_exposure_share",
    "pid_step",
]
