"""Latching-relay control logic for the back-and-forth cleaning motion.

A bistable two-coil relay reverses motor polarity whenever the carriage
closes an end-of-travel limit switch, so the wiper shuttles between the
two resting ends with no microcontroller in the loop. The state machine
here is the pure event-level view of that circuit; :func:`run_passes`
drives it against the kinematic plant and accounts for energy.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from . import mechanism as mech
from .errors import InvalidParameterError, ProtocolViolationError


class WiperPhase(enum.Enum):
    PARKED_AT_A = "ParkedAtA"
    PARKED_AT_B = "ParkedAtB"
    FORWARD_PASS = "ForwardPass"   # A -> B
    REVERSE_PASS = "ReversePass"   # B -> A


class RelayEvent(enum.Enum):
    POWER_ON = "PowerOn"
    POWER_OFF = "PowerOff"
    LIMIT_A = "LimitA"
    LIMIT_B = "LimitB"


# Marker recorded in a trace when the coupling breaks mid-pass; not a
# RelayEvent because the circuit itself never observes it.
STALLED = "Stalled"

_TRANSITIONS = {
    # PowerOn while already powered is an idempotent no-op.
    (WiperPhase.PARKED_AT_A, RelayEvent.POWER_ON): WiperPhase.FORWARD_PASS,
    (WiperPhase.PARKED_AT_B, RelayEvent.POWER_ON): WiperPhase.REVERSE_PASS,
    (WiperPhase.FORWARD_PASS, RelayEvent.POWER_ON): WiperPhase.FORWARD_PASS,
    (WiperPhase.REVERSE_PASS, RelayEvent.POWER_ON): WiperPhase.REVERSE_PASS,
    # PowerOff is honored at ends only; the pass phase parks at the end
    # it most recently touched (its departure end).
    (WiperPhase.PARKED_AT_A, RelayEvent.POWER_OFF): WiperPhase.PARKED_AT_A,
    (WiperPhase.PARKED_AT_B, RelayEvent.POWER_OFF): WiperPhase.PARKED_AT_B,
    (WiperPhase.FORWARD_PASS, RelayEvent.POWER_OFF): WiperPhase.PARKED_AT_A,
    (WiperPhase.REVERSE_PASS, RelayEvent.POWER_OFF): WiperPhase.PARKED_AT_B,
    # A limit switch closing reverses the pass direction.
    (WiperPhase.FORWARD_PASS, RelayEvent.LIMIT_B): WiperPhase.REVERSE_PASS,
    (WiperPhase.REVERSE_PASS, RelayEvent.LIMIT_A): WiperPhase.FORWARD_PASS,
}


def handle_event(phase: WiperPhase, event: RelayEvent) -> WiperPhase:
    """Total, deterministic transition function of the relay circuit.

    Limit events that are impossible for the phase (arriving at the end
    the carriage is moving away from, or any limit event while parked)
    raise :class:`ProtocolViolationError`: they indicate a bug in the
    simulation feeding the machine, not a reachable circuit state.
    """
    try:
        return _TRANSITIONS[(phase, event)]
    except KeyError:
        raise ProtocolViolationError(
            f"event {event.value} is impossible in phase {phase.value}") from None


@dataclass(frozen=True)
class TimedEvent:
    time_s: float
    event: str          # RelayEvent value or the Stalled marker
    phase: WiperPhase   # phase after the event


@dataclass
class WiperPlant:
    """Kinematic plant the relay logic drives.

    ``opacity_profile`` maps carriage position (mm along travel) to the
    path opacity resisting the blade there; None means a clean window.
    """

    screw: mech.LeadScrew = field(default_factory=mech.LeadScrew)
    train: mech.GearTrain = field(default_factory=mech.GearTrain)
    motor: mech.MotorSpec = field(default_factory=mech.MotorSpec)
    coupling: mech.MagneticCoupling = field(default_factory=mech.MagneticCoupling)
    state: mech.MechanismState = field(default_factory=mech.MechanismState)
    dt_s: float = 1e-3
    opacity_profile: Optional[Callable[[float], float]] = None


@dataclass(frozen=True)
class PassPlan:
    """Outcome of a requested number of passes."""

    passes_requested: int
    events_emitted: tuple[TimedEvent, ...]
    final_phase: WiperPhase
    energy_J: float
    motion_time_s: float
    completed_passes: int
    stalled: bool
    state: mech.MechanismState


def _phase_for_parked(position_mm: float, travel_mm: float) -> WiperPhase:
    if position_mm == 0.0:
        return WiperPhase.PARKED_AT_A
    if position_mm == travel_mm:
        return WiperPhase.PARKED_AT_B
    raise InvalidParameterError(
        f"parked carriage must sit at an end, got {position_mm} mm")


def _simulate_pass(plant: WiperPlant, state: mech.MechanismState):
    """Run one end-to-end pass; returns (state, pass_seconds, stalled).

    With no decoupling the pass duration is the analytic pass time, so
    energy bookkeeping composes exactly. The dt grid is only used to
    locate the break-away point when a fouling profile is present.
    """
    ideal = mech.pass_time(plant.screw, plant.train, plant.motor)
    speed = mech.carriage_speed(plant.screw, plant.train, plant.motor)
    profile = plant.opacity_profile

    if profile is None:
        if not plant.coupling.holds(0.0, speed):
            return replace(state, coupled=False), 0.0, True
        end = plant.screw.travel_mm if state.direction > 0 else 0.0
        done = replace(state, position_mm=end, elapsed_s=state.elapsed_s + ideal)
        return done, ideal, False

    start_elapsed = state.elapsed_s
    steps = max(1, math.ceil(ideal / plant.dt_s))
    for k in range(steps):
        opacity = profile(state.position_mm)
        if not plant.coupling.holds(opacity, speed):
            stalled = replace(state, coupled=False,
                              elapsed_s=start_elapsed + k * plant.dt_s)
            return stalled, k * plant.dt_s, True
        state = mech.step_carriage(state, plant.dt_s, plant.screw, plant.train,
                                   plant.motor, plant.coupling, opacity)
    # Completed: snap position and time to the analytic pass values.
    end = plant.screw.travel_mm if state.direction > 0 else 0.0
    done = replace(state, position_mm=end, elapsed_s=start_elapsed + ideal)
    return done, ideal, False


def run_passes(n: int, plant: WiperPlant) -> PassPlan:
    """Power on, run ``n`` limit-to-limit passes, power off at the end.

    The trace holds PowerOn, one limit event per completed pass, and
    PowerOff; a decoupling fault replaces the remaining limit events
    with a single Stalled marker. Energy is steady power times the time
    the motor actually drove the wiper.
    """
    if n < 1:
        raise InvalidParameterError("pass count must be >= 1")
    if not plant.state.coupled:
        raise InvalidParameterError("plant must start coupled")

    travel = plant.screw.travel_mm
    phase = _phase_for_parked(plant.state.position_mm, travel)
    state = replace(plant.state,
                    direction=+1 if phase is WiperPhase.PARKED_AT_A else -1)
    power = mech.steady_power(plant.motor)
    t = state.elapsed_s

    phase = handle_event(phase, RelayEvent.POWER_ON)
    trace = [TimedEvent(t, RelayEvent.POWER_ON.value, phase)]

    motion = 0.0
    completed = 0
    stalled = False
    for _ in range(n):
        state, seconds, stalled = _simulate_pass(plant, state)
        motion += seconds
        t += seconds
        if stalled:
            trace.append(TimedEvent(t, STALLED, phase))
            break
        limit = RelayEvent.LIMIT_B if state.direction > 0 else RelayEvent.LIMIT_A
        phase = handle_event(phase, limit)
        state = replace(state, direction=-state.direction, elapsed_s=t)
        trace.append(TimedEvent(t, limit.value, phase))
        completed += 1

    if not stalled:
        phase = handle_event(phase, RelayEvent.POWER_OFF)
        trace.append(TimedEvent(t, RelayEvent.POWER_OFF.value, phase))

    return PassPlan(
        passes_requested=n,
        events_emitted=tuple(trace),
        final_phase=phase,
        energy_J=power * motion,
        motion_time_s=motion,
        completed_passes=completed,
        stalled=stalled,
        state=state,
    )


def trace_to_csv(events) -> str:
    """Serialize a trace as ``time_s,event,phase`` lines (LF endings)."""
    lines = ["time_s,event,phase"]
    for ev in events:
        lines.append(f"{ev.time_s:.6f},{ev.event},{ev.phase.value}")
    return "\n".join(lines) + "\n"
