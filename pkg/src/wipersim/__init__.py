"""Deterministic digital twin of a magnetically coupled anti-biofouling
wiper for underwater optical sensors, with the image-quality analysis
pipeline used to quantify fouling."""

from .errors import (
    ConfigError,
    InvalidParameterError,
    PnmError,
    ProtocolViolationError,
    WipersimError,
)
from .fouling import GrowthParams, OpacityField, WiperBand, grow, mean_opacity, wipe
from .imaging import ThresholdParams, binarize, local_mean, mse, render, to_gray
from .mechanism import (
    GearTrain,
    LeadScrew,
    MagneticCoupling,
    MechanismState,
    MotorSpec,
    ScotchYoke,
    gear_ratio,
    pass_energy,
    pass_time,
    scotch_yoke_position,
    steady_power,
    step_carriage,
)
from .policy import ActivationPolicy, ControllerState, closed_loop, should_clean
from .relay import PassPlan, RelayEvent, WiperPhase, WiperPlant, handle_event, run_passes
from .experiment import (
    CalibrationResult,
    ExperimentReport,
    ProtocolConfig,
    calibrate,
    emit_report,
    run_protocol,
)

__version__ = "0.1.0"

__all__ = [
    "ActivationPolicy", "CalibrationResult", "ConfigError", "ControllerState",
    "ExperimentReport", "GearTrain", "GrowthParams", "InvalidParameterError",
    "LeadScrew", "MagneticCoupling", "MechanismState", "MotorSpec",
    "OpacityField", "PassPlan", "PnmError", "ProtocolConfig",
    "ProtocolViolationError", "RelayEvent", "ScotchYoke", "ThresholdParams",
    "WiperBand", "WiperPhase", "WiperPlant", "WipersimError", "binarize",
    "calibrate", "closed_loop", "emit_report", "gear_ratio", "grow",
    "handle_event", "local_mean", "mean_opacity", "mse", "pass_energy",
    "pass_time", "render", "run_passes", "run_protocol",
    "scotch_yoke_position", "should_clean", "steady_power", "step_carriage",
    "to_gray", "wipe",
]
