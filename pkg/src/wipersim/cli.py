"""Command-line entry point.

Subcommands:
  simulate     run the two-arm fouling protocol, write report + frames
  analyze      run the analysis pipeline over a real image corpus
  calibrate    fit growth parameters to a day/MSE target trajectory
  closed-loop  run the autonomous-activation controller
  print-config dump the full default configuration as JSON

Exit codes: 0 success, 2 configuration or argument error, 3 I/O error,
4 image size mismatch, 5 non-monotone calibration targets.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from importlib import resources
from pathlib import Path

from .config import default_config_dict, growth_to_dict, load_config
from .corpus import SizeMismatchError, analyze_corpus, read_manifest
from .errors import ConfigError, InvalidParameterError, PnmError
from .experiment import calibrate, emit_report, run_protocol
from .policy import closed_loop, timeline_to_csv
from . import pnm

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_SIZE_MISMATCH = 4
EXIT_BAD_TARGETS = 5

DEFAULT_CALIBRATION_BOUNDS = {
    "rate_per_day": (0.0, 1.2),
    "seed_rate_per_day": (0.0, 16.0),
}


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _config(args):
    return load_config(args.config, seed_override=args.seed)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    result = run_protocol(cfg.protocol_config())
    out = Path(args.out)
    frames_dir = out / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)

    (out / "report.csv").write_bytes(emit_report(result.report, "csv"))
    (out / "plotdata.csv").write_bytes(emit_report(result.report, "plotdata"))

    manifest_rows = []
    for (day, arm, rep), frame in result.frames.items():
        name = f"day{day:g}_{arm}_r{rep}.pgm"
        pnm.write_pgm(frames_dir / name, frame)
        manifest_rows.append((day, arm, f"frames/{name}"))
    ref_day, ref_arm, ref_rep = result.config.observation_days[0], "control", 0
    lines = ["day,arm,path",
             f"{ref_day:g},reference,frames/day{ref_day:g}_{ref_arm}_r{ref_rep}.pgm"]
    lines += [f"{day:g},{arm},{path}" for day, arm, path in manifest_rows]
    (out / "frames_manifest.csv").write_text("\n".join(lines) + "\n",
                                             encoding="utf-8")

    from . import plots
    plots.save_reference_mse_figure(result.report, out / "mse_vs_reference.png")
    plots.save_pair_mse_figure(result.report, out / "control_vs_treated.png")

    days = result.config.observation_days
    final = result.report.mean_mse_vs_day0(days[-1], "control")
    _say(args, f"wrote {out / 'report.csv'} ({len(result.report.rows)} rows); "
               f"day-{days[-1]:g} control MSE {final:.4f}; "
               f"cleaning energy {result.total_clean_energy_J:.2f} J")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _config(args)
    entries = read_manifest(args.manifest)
    report = analyze_corpus(entries, cfg.threshold)
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(emit_report(report, "csv"))
    from . import plots
    plots.save_reference_mse_figure(report, out.with_suffix(".png"))
    _say(args, f"analyzed {len(entries)} images -> {out}")
    return EXIT_OK


def _read_targets(path) -> list[tuple[float, float]]:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["day", "mse"]:
            raise InvalidParameterError(
                f"targets file {path} must start with header 'day,mse'")
        targets = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                targets.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError) as exc:
                raise InvalidParameterError(
                    f"targets file {path} line {lineno}: {exc}") from exc
    return targets


def default_targets_path() -> Path:
    return Path(resources.files("wipersim").joinpath("data/default_targets.csv"))


def cmd_calibrate(args) -> int:
    cfg = _config(args)
    targets_file = args.targets or default_targets_path()
    targets = _read_targets(targets_file)
    days = [d for d, _ in targets]
    values = [v for _, v in targets]
    if any(b <= a for a, b in zip(days, days[1:])) or \
            any(b < a for a, b in zip(values, values[1:])):
        print(f"error: targets in {targets_file} must have strictly increasing "
              f"days and non-decreasing MSE values", file=sys.stderr)
        return EXIT_BAD_TARGETS

    result = calibrate(targets, DEFAULT_CALIBRATION_BOUNDS,
                       cfg.protocol_config(), grid_points=args.grid_points)
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    document = {"growth": growth_to_dict(result.params),
                "residual": result.residual}
    out.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
    from . import plots
    plots.save_calibration_figure(targets, result.days, result.trajectory,
                                  out.with_suffix(".png"))
    _say(args, f"calibrated in {result.evaluations} evaluations, residual "
               f"{result.residual:.3e}; growth block -> {out}")
    return EXIT_OK


def cmd_closed_loop(args) -> int:
    cfg = _config(args)
    result = closed_loop(cfg.horizon_days, cfg.policy, cfg.protocol_config())
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(timeline_to_csv(result.timeline))
    from . import plots
    plots.save_timeline_figure(result.timeline, out.with_suffix(".png"))
    _say(args, f"{result.cleanings} cleaning(s) over {cfg.horizon_days} days; "
               f"energy {result.controller.energy_spent_J:.2f} J -> {out}")
    return EXIT_OK


def cmd_print_config(args) -> int:
    print(json.dumps(default_config_dict(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wipersim",
        description="Digital twin of a magnetically coupled anti-biofouling "
                    "wiper and its image-quality analysis pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help):
        p.add_argument("--config", help="run configuration JSON (defaults used "
                                        "when omitted)")
        p.add_argument("--out", required=True, help=out_help)
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    p = sub.add_parser("simulate", help="run the two-arm fouling protocol")
    common(p, "output directory for report, plot data, frames and figures")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="analyze a real image corpus")
    common(p, "output CSV path")
    p.add_argument("--manifest", required=True,
                   help="manifest CSV with day,arm,path rows")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("calibrate", help="fit growth parameters to targets")
    common(p, "output JSON path for the fitted growth block")
    p.add_argument("--targets", help="day,mse CSV (bundled defaults when omitted)")
    p.add_argument("--grid-points", type=int, default=5,
                   help="coarse grid resolution per parameter")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("closed-loop", help="run the autonomous controller")
    common(p, "output CSV path for the decision timeline")
    p.set_defaults(func=cmd_closed_loop)

    p = sub.add_parser("print-config", help="dump the default configuration")
    p.set_defaults(func=cmd_print_config)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SizeMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIZE_MISMATCH
    except (InvalidParameterError, PnmError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
