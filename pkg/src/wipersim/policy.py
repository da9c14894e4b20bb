"""Autonomous cleaning activation from image-quality feedback.

The controller watches the MSE of the current binarized frame against
the baseline reference (the same quantity the experiment reports), and
fires a cleaning cycle when it crosses a trigger, subject to a re-arm
hysteresis band, a minimum interval between cleanings, and a total
energy budget.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, replace

from . import fouling, imaging, mechanism as mech, relay
from .errors import InvalidParameterError


class Decision(enum.Enum):
    CLEAN = "clean"
    HOLD = "hold"
    STALLED = "stalled"


@dataclass(frozen=True)
class ActivationPolicy:
    """Trigger settings. Hysteresis 0 disables the re-arm latch
    entirely (plain level trigger); a positive hysteresis keeps the
    controller disarmed after a cleaning until the MSE has dropped
    below trigger - hysteresis."""

    mse_trigger: float = 0.04
    hysteresis: float = 0.01
    min_interval_days: float = 2.0
    max_energy_budget_J: float = 1000.0

    def __post_init__(self):
        if self.hysteresis != 0 and not 0 < self.hysteresis < self.mse_trigger:
            raise InvalidParameterError(
                "hysteresis must be 0 (latch off) or satisfy 0 < h < trigger")
        if self.mse_trigger < 0:
            raise InvalidParameterError("trigger must be >= 0")
        if self.max_energy_budget_J < 0:
            raise InvalidParameterError("energy budget must be >= 0")
        if self.min_interval_days < 0:
            raise InvalidParameterError("minimum interval must be >= 0")


@dataclass(frozen=True)
class ControllerState:
    armed: bool = True
    last_clean_day: float = -math.inf
    energy_spent_J: float = 0.0


def should_clean(state: ControllerState, current_mse: float, day: float,
                 policy: ActivationPolicy,
                 clean_cost_J: float) -> tuple[Decision, ControllerState]:
    """One controller evaluation; returns the decision and next state.

    Cleans iff armed, the MSE exceeds the trigger, the minimum interval
    has elapsed, and the prospective cost fits the remaining budget.
    With positive hysteresis a cleaning disarms the controller until
    the MSE falls below trigger - hysteresis; with hysteresis 0 the
    latch is off and the trigger acts as a plain level comparison.
    """
    if current_mse < 0:
        raise InvalidParameterError("mse must be >= 0")
    if policy.hysteresis == 0:
        state = replace(state, armed=True)
    elif not state.armed and current_mse < policy.mse_trigger - policy.hysteresis:
        state = replace(state, armed=True)
    fires = (state.armed
             and current_mse > policy.mse_trigger
             and day - state.last_clean_day >= policy.min_interval_days
             and state.energy_spent_J + clean_cost_J <= policy.max_energy_budget_J)
    if not fires:
        return Decision.HOLD, state
    return Decision.CLEAN, replace(state, armed=False, last_clean_day=day)


@dataclass(frozen=True)
class TimelineEntry:
    day: float
    mse: float
    decision: Decision
    cumulative_energy_J: float


@dataclass
class ClosedLoopResult:
    timeline: list
    controller: ControllerState
    field: fouling.OpacityField
    cleanings: int


def closed_loop(days: int, policy: ActivationPolicy, config) -> ClosedLoopResult:
    """Daily loop: grow, image, compare to the baseline, maybe clean.

    ``config`` is an experiment ProtocolConfig; its growth, band,
    threshold, render and mechanism blocks are reused here, with the
    day-0 frame as the reference. A decoupling fault during a cleaning
    surfaces as a Stalled timeline entry (the film is not wiped).
    Deterministic per config seed.
    """
    from .experiment import _capture_frame, _growth_rng  # shared streams

    if days < 1:
        raise InvalidParameterError("closed loop needs at least one day")
    fld = fouling.OpacityField.window(config.field_cell_mm)
    growth_rng = _growth_rng(config.seed, 2)
    m = config.mechanism
    wiper_state = mech.MechanismState()
    cost = config.passes_per_clean * mech.pass_energy(
        mech.steady_power(m.motor), mech.pass_time(m.screw, m.train, m.motor))

    _, reference = _capture_frame(fld, config, 0, 2, 0)
    controller = ControllerState()
    timeline = []
    cleanings = 0

    for day in range(1, days + 1):
        fld = fouling.grow(fld, config.growth, 1.0, rng=growth_rng)
        _, binary = _capture_frame(fld, config, day, 2, 0)
        current = imaging.mse(binary, reference)
        decision, controller = should_clean(controller, current, day, policy, cost)
        if decision is Decision.CLEAN:
            profile = fouling.carriage_opacity_profile(fld, config.band,
                                                       m.screw.travel_mm)
            plant = relay.WiperPlant(screw=m.screw, train=m.train, motor=m.motor,
                                     coupling=m.coupling, state=wiper_state,
                                     dt_s=m.dt_s, opacity_profile=profile)
            plan = relay.run_passes(config.passes_per_clean, plant)
            controller = replace(
                controller,
                energy_spent_J=controller.energy_spent_J + plan.energy_J)
            if plan.stalled:
                decision = Decision.STALLED
                # re-seat the wiper at the home end (maintenance action)
                wiper_state = mech.MechanismState(elapsed_s=plan.state.elapsed_s)
            else:
                fld = fouling.wipe(fld, config.band, config.passes_per_clean)
                wiper_state = plan.state
                cleanings += 1
        timeline.append(TimelineEntry(day, current, decision,
                                      controller.energy_spent_J))

    return ClosedLoopResult(timeline=timeline, controller=controller,
                            field=fld, cleanings=cleanings)


def timeline_to_csv(timeline) -> bytes:
    out = io.StringIO()
    out.write("day,mse,decision,cumulative_energy_J\n")
    for entry in timeline:
        out.write(f"{entry.day:g},{entry.mse:.6f},{entry.decision.value},"
                  f"{entry.cumulative_energy_J:.6f}\n")
    return out.getvalue().encode()
