"""Run configuration: one JSON document holding every parameter block.

Missing blocks and keys fall back to the calibrated defaults; unknown
keys are rejected so a typo cannot silently drop a parameter. The same
file drives simulation, calibration and closed-loop runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import fouling, imaging, mechanism as mech
from .errors import ConfigError
from .experiment import MechanismConfig, ProtocolConfig, RenderConfig
from .policy import ActivationPolicy


@dataclass(frozen=True)
class ProtocolBlock:
    observation_days: tuple = (0, 8, 13, 16)
    replicates: int = 3
    passes_per_clean: int = 1


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    field_cell_mm: float = fouling.DEFAULT_CELL_MM
    growth: fouling.GrowthParams = field(default_factory=fouling.GrowthParams)
    band: fouling.WiperBand = field(default_factory=fouling.WiperBand)
    threshold: imaging.ThresholdParams = field(default_factory=imaging.ThresholdParams)
    render: RenderConfig = field(default_factory=RenderConfig)
    mechanism: MechanismConfig = field(default_factory=MechanismConfig)
    yoke: mech.ScotchYoke = field(default_factory=mech.ScotchYoke)
    protocol: ProtocolBlock = field(default_factory=ProtocolBlock)
    policy: ActivationPolicy = field(default_factory=ActivationPolicy)
    horizon_days: int = 16

    def protocol_config(self) -> ProtocolConfig:
        return ProtocolConfig(
            observation_days=self.protocol.observation_days,
            replicates=self.protocol.replicates,
            passes_per_clean=self.protocol.passes_per_clean,
            growth=self.growth, band=self.band, threshold=self.threshold,
            render=self.render, mechanism=self.mechanism,
            field_cell_mm=self.field_cell_mm, seed=self.seed)


def _build(cls, data: dict, section: str, **special):
    """Instantiate a dataclass from a dict, rejecting unknown keys."""
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown key '{key}' in section '{section}'")
        conv = special.get(key)
        kwargs[key] = conv(value) if conv else value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value in section '{section}': {exc}") from exc


def _trigger(value):
    # JSON has no infinity literal; null means "never trigger"
    return math.inf if value is None else value


def from_dict(doc: dict) -> RunConfig:
    """Validate and build a RunConfig from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be a JSON object")
    top_known = {"seed", "field", "growth", "band", "threshold", "render",
                 "mechanism", "protocol", "policy"}
    for key in doc:
        if key not in top_known:
            raise ConfigError(f"unknown key '{key}' at configuration top level")

    def section(name) -> dict:
        sub = doc.get(name, {})
        if not isinstance(sub, dict):
            raise ConfigError(f"section '{name}' must be a JSON object")
        return dict(sub)

    fld = section("field")
    cell = fld.pop("cell_size_mm", fouling.DEFAULT_CELL_MM)
    if fld:
        raise ConfigError(f"unknown key '{next(iter(fld))}' in section 'field'")

    mech_doc = section("mechanism")
    mech_known = {"gear", "screw", "motor", "coupling", "yoke", "dt_s"}
    for key in mech_doc:
        if key not in mech_known:
            raise ConfigError(f"unknown key '{key}' in section 'mechanism'")
    gear = _build(mech.GearTrain, mech_doc.get("gear", {}), "mechanism.gear")
    screw = _build(mech.LeadScrew, mech_doc.get("screw", {}), "mechanism.screw")
    motor = _build(mech.MotorSpec, mech_doc.get("motor", {}), "mechanism.motor")
    coupling = _build(mech.MagneticCoupling, mech_doc.get("coupling", {}),
                      "mechanism.coupling")
    yoke = _build(mech.ScotchYoke, mech_doc.get("yoke", {}), "mechanism.yoke")
    if yoke.stroke_mm > gear.module_mm * gear.driven_teeth:
        raise ConfigError("yoke stroke exceeds the pitch diameter of its gear")
    try:
        mechanism = MechanismConfig(screw=screw, train=gear, motor=motor,
                                    coupling=coupling,
                                    dt_s=mech_doc.get("dt_s", 1e-3))
    except ValueError as exc:
        raise ConfigError(f"invalid value in section 'mechanism': {exc}") from exc

    pol_doc = section("policy")
    horizon = pol_doc.pop("horizon_days", 16)
    policy = _build(ActivationPolicy, pol_doc, "policy", mse_trigger=_trigger)

    proto_doc = section("protocol")
    protocol = _build(ProtocolBlock, proto_doc, "protocol",
                      observation_days=tuple)

    cfg = RunConfig(
        seed=doc.get("seed", 0),
        field_cell_mm=cell,
        growth=_build(fouling.GrowthParams, section("growth"), "growth"),
        band=_build(fouling.WiperBand, section("band"), "band"),
        threshold=_build(imaging.ThresholdParams, section("threshold"), "threshold"),
        render=_build(RenderConfig, section("render"), "render"),
        mechanism=mechanism,
        yoke=yoke,
        protocol=protocol,
        policy=policy,
        horizon_days=horizon,
    )
    try:
        cfg.protocol_config()  # surface cross-field validation errors now
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path=None, seed_override: int | None = None) -> RunConfig:
    """Load a RunConfig from a JSON file; None gives the defaults.

    Parse errors carry the line and column of the offending token.
    """
    if path is None:
        doc = {}
    else:
        text = Path(path).read_text(encoding="utf-8")
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config parse error at line {exc.lineno}, column {exc.colno}: "
                f"{exc.msg}") from exc
    cfg = from_dict(doc)
    if seed_override is not None:
        doc["seed"] = seed_override
        cfg = from_dict(doc)
    return cfg


def growth_to_dict(params: fouling.GrowthParams) -> dict:
    """Growth block as a plain dict, mergeable into a config document."""
    return {f.name: getattr(params, f.name) for f in fields(params)}


def default_config_dict() -> dict:
    """Full default configuration as a plain JSON-serializable document."""
    cfg = RunConfig()
    return {
        "seed": cfg.seed,
        "field": {"cell_size_mm": cfg.field_cell_mm},
        "growth": growth_to_dict(cfg.growth),
        "band": {f.name: getattr(cfg.band, f.name) for f in fields(cfg.band)},
        "threshold": {f.name: getattr(cfg.threshold, f.name)
                      for f in fields(cfg.threshold)},
        "render": {f.name: getattr(cfg.render, f.name)
                   for f in fields(cfg.render)},
        "mechanism": {
            "gear": {f.name: getattr(cfg.mechanism.train, f.name)
                     for f in fields(cfg.mechanism.train)},
            "screw": {f.name: getattr(cfg.mechanism.screw, f.name)
                      for f in fields(cfg.mechanism.screw)},
            "motor": {f.name: getattr(cfg.mechanism.motor, f.name)
                      for f in fields(cfg.mechanism.motor)},
            "coupling": {f.name: getattr(cfg.mechanism.coupling, f.name)
                         for f in fields(cfg.mechanism.coupling)},
            "yoke": {"crank_radius_mm": cfg.yoke.crank_radius_mm},
            "dt_s": cfg.mechanism.dt_s,
        },
        "protocol": {
            "observation_days": list(cfg.protocol.observation_days),
            "replicates": cfg.protocol.replicates,
            "passes_per_clean": cfg.protocol.passes_per_clean,
        },
        "policy": {
            "mse_trigger": (None if math.isinf(cfg.policy.mse_trigger)
                            else cfg.policy.mse_trigger),
            "hysteresis": cfg.policy.hysteresis,
            "min_interval_days": cfg.policy.min_interval_days,
            "max_energy_budget_J": cfg.policy.max_energy_budget_J,
            "horizon_days": cfg.horizon_days,
        },
    }
