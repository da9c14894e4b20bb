"""Wiper transmission kinematics and energetics.

Two transmissions move the external wiper through the sealed window:
a geared lead screw (the production drive) and a scotch yoke (kept as an
alternative behind the same carriage maths). The internal drive magnets
pull the external wiper along; the coupling is modeled as a break-away
force threshold, so the only fault mode is "decoupled and stalled".

Units: millimetres, seconds, newtons, volts, amperes, watts, joules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import InvalidParameterError

MAX_SCREW_LENGTH_MM = 75.0  # stock screw length; usable travel cannot exceed it


@dataclass(frozen=True)
class GearTrain:
    """Single-stage spur reduction between motor pinion and screw gears."""

    driver_teeth: int = 20
    driven_teeth: int = 38
    module_mm: float = 1.0  # tooth module

    def __post_init__(self):
        if self.driver_teeth < 1 or self.driven_teeth < 1:
            raise InvalidParameterError("gear teeth counts must be >= 1")
        if self.module_mm <= 0:
            raise InvalidParameterError("gear module must be > 0")


@dataclass(frozen=True)
class LeadScrew:
    """Lead screw converting gear rotation to carriage travel."""

    lead_mm_per_rev: float = 0.5  # standard coarse pitch for an M3 thread
    travel_mm: float = 40.0      # usable carriage travel after end clearances

    def __post_init__(self):
        if self.lead_mm_per_rev <= 0:
            raise InvalidParameterError("screw lead must be > 0")
        # travel 0 is allowed as a degenerate value for the timing formulas
        if not 0 <= self.travel_mm <= MAX_SCREW_LENGTH_MM:
            raise InvalidParameterError(
                f"usable travel must be within [0, {MAX_SCREW_LENGTH_MM}] mm")


@dataclass(frozen=True)
class ScotchYoke:
    """Crank-and-slot drive; stroke equals the crank diameter."""

    crank_radius_mm: float = 10.0

    def __post_init__(self):
        if self.crank_radius_mm <= 0:
            raise InvalidParameterError("crank radius must be > 0")

    @property
    def stroke_mm(self) -> float:
        return 2.0 * self.crank_radius_mm


@dataclass(frozen=True)
class MagneticCoupling:
    """Break-away model of the magnet pair dragging the external wiper.

    The wiper stays coupled while the lateral load stays below
    ``max_lateral_force_N``; beyond that it detaches and the carriage
    freezes. Load sources: biofilm resistance proportional to the
    path opacity under the blade, plus viscous drag proportional
    to carriage speed.
    """

    max_lateral_force_N: float = 2.0
    drag_coeff_N_per_opacity: float = 1.5
    viscous_drag_N_s_per_mm: float = 0.02

    def __post_init__(self):
        if min(self.max_lateral_force_N, self.drag_coeff_N_per_opacity,
               self.viscous_drag_N_s_per_mm) < 0:
            raise InvalidParameterError("coupling parameters must be >= 0")

    def lateral_load_N(self, path_opacity: float, speed_mm_s: float) -> float:
        """Lateral load on the coupling at the given fouling and speed."""
        return (self.drag_coeff_N_per_opacity * path_opacity
                + self.viscous_drag_N_s_per_mm * speed_mm_s)

    def holds(self, path_opacity: float, speed_mm_s: float) -> bool:
        return self.lateral_load_N(path_opacity, speed_mm_s) <= self.max_lateral_force_N


@dataclass(frozen=True)
class MotorSpec:
    """DC gear motor electrical ratings and output speed."""

    rated_voltage_V: float = 6.00
    steady_current_A: float = 0.14
    speed_rev_per_s: float = 19.0

    def __post_init__(self):
        if self.rated_voltage_V <= 0:
            raise InvalidParameterError("rated voltage must be > 0")
        if self.steady_current_A < 0 or self.speed_rev_per_s < 0:
            raise InvalidParameterError("current and speed must be >= 0")


@dataclass(frozen=True)
class MechanismState:
    """Carriage state evolved by discrete-time stepping.

    While ``coupled`` is False the position is frozen; only
    :func:`recouple` (a maintenance action) re-engages the wiper.
    """

    position_mm: float = 0.0
    direction: int = 1  # +1 toward far end, -1 toward home end
    coupled: bool = True
    elapsed_s: float = 0.0

    def __post_init__(self):
        if self.direction not in (+1, -1):
            raise InvalidParameterError("direction must be +1 or -1")
        if self.position_mm < 0:
            raise InvalidParameterError("position must be >= 0")


def gear_ratio(train: GearTrain) -> float:
    """Driven angular speed over driver angular speed."""
    return train.driver_teeth / train.driven_teeth


def scotch_yoke_position(crank_angle_rad: float, yoke: ScotchYoke) -> float:
    """Yoke displacement x = r*sin(theta) about the slot centre."""
    if not math.isfinite(crank_angle_rad):
        raise InvalidParameterError("crank angle must be finite")
    return yoke.crank_radius_mm * math.sin(crank_angle_rad)


def scotch_yoke_velocity(crank_angle_rad: float, yoke: ScotchYoke,
                         crank_speed_rad_s: float) -> float:
    """Analytic yoke velocity r*omega*cos(theta)."""
    return yoke.crank_radius_mm * crank_speed_rad_s * math.cos(crank_angle_rad)


def carriage_speed(screw: LeadScrew, train: GearTrain, motor: MotorSpec) -> float:
    """Steady carriage speed in mm/s for the geared lead-screw drive."""
    return screw.lead_mm_per_rev * motor.speed_rev_per_s * gear_ratio(train)


def pass_time(screw: LeadScrew, train: GearTrain, motor: MotorSpec) -> float:
    """Time for one full pass: travel / (lead * motor speed * gear ratio)."""
    if motor.speed_rev_per_s <= 0:
        raise InvalidParameterError("motor speed must be > 0 for a finite pass time")
    return screw.travel_mm / carriage_speed(screw, train, motor)


def yoke_pass_time(train: GearTrain, motor: MotorSpec) -> float:
    """One end-to-end sweep of the yoke: half a crank revolution."""
    if motor.speed_rev_per_s <= 0:
        raise InvalidParameterError("motor speed must be > 0 for a finite pass time")
    return 0.5 / (motor.speed_rev_per_s * gear_ratio(train))


def steady_power(motor: MotorSpec) -> float:
    """Steady-state electrical power P = V * I."""
    return motor.rated_voltage_V * motor.steady_current_A


def pass_energy(power_W: float, time_s: float) -> float:
    """Energy drawn over one pass, E = P * t."""
    if power_W < 0 or time_s < 0:
        raise InvalidParameterError("power and time must be >= 0")
    return power_W * time_s


def step_carriage(state: MechanismState, dt_s: float, screw: LeadScrew,
                  train: GearTrain, motor: MotorSpec,
                  coupling: MagneticCoupling,
                  path_opacity: float = 0.0) -> MechanismState:
    """Advance the carriage by one time step.

    The ideal advance is direction * lead * motor_speed * gear_ratio * dt,
    clamped to [0, travel]. If the lateral load at the current position
    exceeds the coupling's break-away force, the wiper decouples and the
    position freezes (time still advances). A decoupled state stays
    decoupled until :func:`recouple`.
    """
    if dt_s <= 0:
        raise InvalidParameterError("dt must be > 0")
    elapsed = state.elapsed_s + dt_s
    if not state.coupled:
        return replace(state, elapsed_s=elapsed)
    speed = carriage_speed(screw, train, motor)
    if not coupling.holds(path_opacity, speed):
        return replace(state, coupled=False, elapsed_s=elapsed)
    position = state.position_mm + state.direction * speed * dt_s
    position = min(max(position, 0.0), screw.travel_mm)
    return replace(state, position_mm=position, elapsed_s=elapsed)


def recouple(state: MechanismState) -> MechanismState:
    """Re-engage a decoupled wiper (models manual maintenance)."""
    return replace(state, coupled=True)
