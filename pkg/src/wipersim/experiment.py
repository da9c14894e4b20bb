"""Semi-field fouling protocol run in simulation.

Two dishes share a clean starting state: the control arm fouls freely,
the treated arm gets a wipe cycle immediately before each post-baseline
imaging session. Observation days yield replicate frames that differ
only in sensor noise; every frame is binarized and compared against the
baseline reference frame, and the two arms are compared against each
other, replicate by replicate.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace

import numpy as np

from . import fouling, imaging, mechanism as mech, relay
from .errors import InvalidParameterError

ARMS = ("control", "treated")
CSV_HEADER = "day,arm,replicate,mse_vs_day0,mse_control_vs_treated,mean,stderr"


@dataclass(frozen=True)
class RenderConfig:
    """Sensor model: background brightness, noise, and frame size."""

    background_level: float = 0.92
    noise_sigma: float = 0.02
    frame_width: int = imaging.DEFAULT_FRAME_WIDTH
    frame_height: int = imaging.DEFAULT_FRAME_HEIGHT

    def __post_init__(self):
        if self.frame_width < 1 or self.frame_height < 1:
            raise InvalidParameterError("frame dimensions must be positive")


@dataclass(frozen=True)
class MechanismConfig:
    """Drive train, coupling and integration step used for cleaning."""

    screw: mech.LeadScrew = field(default_factory=mech.LeadScrew)
    train: mech.GearTrain = field(default_factory=mech.GearTrain)
    motor: mech.MotorSpec = field(default_factory=mech.MotorSpec)
    coupling: mech.MagneticCoupling = field(default_factory=mech.MagneticCoupling)
    dt_s: float = 1e-3

    def __post_init__(self):
        if self.dt_s <= 0:
            raise InvalidParameterError("dt_s must be > 0")


@dataclass(frozen=True)
class ProtocolConfig:
    """Full parameter set of one simulated experiment."""

    observation_days: tuple = (0, 8, 13, 16)
    replicates: int = 3
    passes_per_clean: int = 1
    growth: fouling.GrowthParams = field(default_factory=fouling.GrowthParams)
    band: fouling.WiperBand = field(default_factory=fouling.WiperBand)
    threshold: imaging.ThresholdParams = field(default_factory=imaging.ThresholdParams)
    render: RenderConfig = field(default_factory=RenderConfig)
    mechanism: MechanismConfig = field(default_factory=MechanismConfig)
    field_cell_mm: float = fouling.DEFAULT_CELL_MM
    seed: int = 0

    def __post_init__(self):
        days = tuple(self.observation_days)
        object.__setattr__(self, "observation_days", days)
        if not days or days[0] != 0:
            raise InvalidParameterError("observation days must start at 0")
        if any(b <= a for a, b in zip(days, days[1:])):
            raise InvalidParameterError("observation days must be strictly increasing")
        if self.replicates < 1:
            raise InvalidParameterError("replicates must be >= 1")
        if self.passes_per_clean < 1:
            raise InvalidParameterError("passes per clean must be >= 1")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidParameterError("seed must be a non-negative integer")
        if self.field_cell_mm <= 0:
            raise InvalidParameterError("field cell size must be > 0")


@dataclass(frozen=True)
class ReportRow:
    day: float
    arm: str
    replicate: int
    mse_vs_day0: float
    mse_control_vs_treated: float


@dataclass
class ExperimentReport:
    """Per-replicate records plus per-day aggregates."""

    rows: list[ReportRow]
    day_stats: dict          # (day, arm) -> (mean, stderr) of mse_vs_day0
    pair_stats: dict         # day -> (mean, stderr) of control-vs-treated

    def mean_mse_vs_day0(self, day, arm) -> float:
        return self.day_stats[(day, arm)][0]

    def mean_control_vs_treated(self, day) -> float:
        return self.pair_stats[day][0]


@dataclass
class ProtocolResult:
    config: ProtocolConfig
    report: ExperimentReport
    frames: dict             # (day, arm, replicate) -> uint8 frame
    reference_binary: np.ndarray
    final_fields: dict       # arm -> OpacityField after the last day
    cleanings: list          # (day, relay.PassPlan) for the treated arm
    total_clean_energy_J: float


def _growth_rng(seed: int, arm_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, 11, arm_index]))


def _frame_seed(seed: int, day_index: int, arm_index: int, replicate: int):
    return np.random.SeedSequence([seed, 7, day_index, arm_index, replicate])


def _mean_stderr(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, 0.0
    return mean, float(arr.std(ddof=1) / np.sqrt(arr.size))


def _capture_frame(fld, config: ProtocolConfig, day_index: int,
                   arm_index: int, replicate: int):
    """Render through the 8-bit sensor and binarize the stored values."""
    img = imaging.render(
        fld,
        background_level=config.render.background_level,
        noise_sigma=config.render.noise_sigma,
        rng_seed=_frame_seed(config.seed, day_index, arm_index, replicate),
        width=config.render.frame_width,
        height=config.render.frame_height,
    )
    u8 = imaging.quantize_u8(img)
    binary = imaging.binarize(imaging.u8_to_gray(u8), config.threshold)
    return u8, binary


def _clean_treated(fld, state, config: ProtocolConfig):
    """One cleaning session: drive the wiper, then attenuate the film."""
    profile = fouling.carriage_opacity_profile(
        fld, config.band, config.mechanism.screw.travel_mm)
    plant = relay.WiperPlant(
        screw=config.mechanism.screw, train=config.mechanism.train,
        motor=config.mechanism.motor, coupling=config.mechanism.coupling,
        state=state, dt_s=config.mechanism.dt_s, opacity_profile=profile)
    plan = relay.run_passes(config.passes_per_clean, plant)
    if not plan.stalled:
        fld = fouling.wipe(fld, config.band, config.passes_per_clean)
    return fld, plan


def run_protocol(config: ProtocolConfig) -> ProtocolResult:
    """Simulate the full two-arm protocol; deterministic per seed."""
    fields = {arm: fouling.OpacityField.window(config.field_cell_mm)
              for arm in ARMS}
    growth_rngs = {arm: _growth_rng(config.seed, i) for i, arm in enumerate(ARMS)}
    wiper_state = mech.MechanismState()

    frames, binaries = {}, {}
    cleanings = []
    total_energy = 0.0
    reference = None
    previous_day = 0

    for day_index, day in enumerate(config.observation_days):
        for arm in ARMS:
            for _ in range(int(round(day - previous_day))):
                fields[arm] = fouling.grow(fields[arm], config.growth, 1.0,
                                           rng=growth_rngs[arm])
        previous_day = day

        if day_index > 0:
            fields["treated"], plan = _clean_treated(
                fields["treated"], wiper_state, config)
            # a stalled wiper is re-seated at the home end before the
            # next session (maintenance action)
            wiper_state = (plan.state if not plan.stalled
                           else mech.MechanismState(elapsed_s=plan.state.elapsed_s))
            cleanings.append((day, plan))
            total_energy += plan.energy_J

        for arm_index, arm in enumerate(ARMS):
            for rep in range(config.replicates):
                u8, binary = _capture_frame(fields[arm], config,
                                            day_index, arm_index, rep)
                frames[(day, arm, rep)] = u8
                binaries[(day, arm, rep)] = binary
                if reference is None:
                    reference = binary

    rows = []
    for day in config.observation_days:
        for arm in ARMS:
            for rep in range(config.replicates):
                rows.append(ReportRow(
                    day=day, arm=arm, replicate=rep,
                    mse_vs_day0=imaging.mse(binaries[(day, arm, rep)], reference),
                    mse_control_vs_treated=imaging.mse(
                        binaries[(day, "control", rep)],
                        binaries[(day, "treated", rep)]),
                ))

    day_stats, pair_stats = {}, {}
    for day in config.observation_days:
        for arm in ARMS:
            day_stats[(day, arm)] = _mean_stderr(
                [r.mse_vs_day0 for r in rows if r.day == day and r.arm == arm])
        pair_stats[day] = _mean_stderr(
            [r.mse_control_vs_treated for r in rows
             if r.day == day and r.arm == "control"])

    report = ExperimentReport(rows=rows, day_stats=day_stats, pair_stats=pair_stats)
    return ProtocolResult(
        config=config, report=report, frames=frames, reference_binary=reference,
        final_fields=fields, cleanings=cleanings,
        total_clean_energy_J=total_energy)


def control_trajectory(config: ProtocolConfig, days=None) -> list[float]:
    """Control-arm MSE-vs-baseline at each observation day, one replicate.

    Uses the same random streams as :func:`run_protocol`, so the values
    match the full protocol's control replicate 0 exactly.
    """
    days = tuple(config.observation_days if days is None else days)
    fld = fouling.OpacityField.window(config.field_cell_mm)
    rng = _growth_rng(config.seed, 0)
    reference = None
    out = []
    previous_day = days[0]
    for day_index, day in enumerate(days):
        for _ in range(int(round(day - previous_day))):
            fld = fouling.grow(fld, config.growth, 1.0, rng=rng)
        previous_day = day
        _, binary = _capture_frame(fld, config, day_index, 0, 0)
        if reference is None:
            reference = binary
        out.append(imaging.mse(binary, reference))
    return out


@dataclass(frozen=True)
class CalibrationResult:
    params: fouling.GrowthParams
    residual: float
    evaluations: int
    days: tuple
    trajectory: tuple


def calibrate(targets, bounds, config: ProtocolConfig | None = None,
              grid_points: int = 5, refine_rounds: int = 2) -> CalibrationResult:
    """Fit growth parameters to a target MSE-vs-baseline trajectory.

    Deterministic coarse grid search over ``bounds`` (a mapping of
    GrowthParams field names to (low, high) ranges), then local grid
    refinement around the best point. The objective is the sum of
    squared errors of :func:`control_trajectory` against the targets.
    """
    if not bounds:
        raise InvalidParameterError("calibration needs a nonempty search space")
    config = config or ProtocolConfig()
    names = list(bounds)
    growth_fields = {f.name for f in fouling.GrowthParams.__dataclass_fields__.values()}
    for name in names:
        if name not in growth_fields:
            raise InvalidParameterError(f"unknown growth parameter '{name}'")
        lo, hi = bounds[name]
        if not lo <= hi:
            raise InvalidParameterError(f"empty range for '{name}'")

    targets = [(float(d), float(v)) for d, v in targets]
    if not targets:
        raise InvalidParameterError("calibration needs at least one target")
    days = [d for d, _ in targets]
    values = np.array([v for _, v in targets])
    if any(b <= a for a, b in zip(days, days[1:])):
        raise InvalidParameterError("target days must be strictly increasing")
    if any(b < a for a, b in zip(values, values[1:])):
        raise InvalidParameterError("target MSE values must be non-decreasing")
    if days[0] != 0:
        days = [0.0] + days
        values = np.concatenate([[0.0], values])

    evaluations = 0

    def objective(point) -> float:
        nonlocal evaluations
        evaluations += 1
        growth = replace(config.growth, **dict(zip(names, point)))
        sim = control_trajectory(replace(config, growth=growth), days)
        return float(np.sum((np.asarray(sim) - values) ** 2))

    def grid_scan(ranges, points):
        axes = [np.linspace(lo, hi, points) for lo, hi in ranges]
        best_point, best_val = None, np.inf
        mesh = np.meshgrid(*axes, indexing="ij")
        coords = np.stack([m.ravel() for m in mesh], axis=-1)
        for raw in coords:
            point = tuple(float(v) for v in raw)
            val = objective(point)
            if val < best_val:
                best_point, best_val = point, val
            if best_val == 0.0:
                break
        return best_point, best_val

    ranges = [tuple(bounds[name]) for name in names]
    best_point, best_val = grid_scan(ranges, grid_points)

    for _ in range(refine_rounds):
        if best_val == 0.0:
            break
        new_ranges = []
        for (lo, hi), centre in zip(ranges, best_point):
            span = (hi - lo) / max(grid_points - 1, 1)
            new_ranges.append((max(lo, centre - span), min(hi, centre + span)))
        ranges = new_ranges
        best_point, best_val = grid_scan(ranges, 3)

    best_growth = replace(config.growth, **dict(zip(names, best_point)))
    trajectory = control_trajectory(replace(config, growth=best_growth), days)
    return CalibrationResult(params=best_growth, residual=best_val,
                             evaluations=evaluations, days=tuple(days),
                             trajectory=tuple(trajectory))


def emit_report(report: ExperimentReport, format: str = "csv") -> bytes:
    """Serialize a report; formats: ``csv`` (per-replicate rows with
    per-day aggregates) or ``plotdata`` (per-series day/mean/stderr)."""
    if format == "csv":
        out = io.StringIO()
        out.write(CSV_HEADER + "\n")
        for row in report.rows:
            mean, stderr = report.day_stats[(row.day, row.arm)]
            pair = ("" if np.isnan(row.mse_control_vs_treated)
                    else f"{row.mse_control_vs_treated:.6f}")
            out.write(f"{row.day:g},{row.arm},{row.replicate},"
                      f"{row.mse_vs_day0:.6f},{pair},"
                      f"{mean:.6f},{stderr:.6f}\n")
        return out.getvalue().encode()
    if format == "plotdata":
        out = io.StringIO()
        out.write("series,day,mean,stderr\n")
        days = sorted({row.day for row in report.rows})
        arms = []
        for row in report.rows:
            if row.arm not in arms:
                arms.append(row.arm)
        for arm in arms:
            for day in days:
                if (day, arm) in report.day_stats:
                    mean, stderr = report.day_stats[(day, arm)]
                    out.write(f"{arm},{day:g},{mean:.6f},{stderr:.6f}\n")
        for day in days:
            if day in report.pair_stats:
                mean, stderr = report.pair_stats[day]
                out.write(f"control_vs_treated,{day:g},{mean:.6f},{stderr:.6f}\n")
        return out.getvalue().encode()
    raise InvalidParameterError(f"unknown report format '{format}'")
