"""Real-image corpus analysis through the same pipeline as the simulator.

A manifest CSV lists ``day,arm,path`` rows, paths relative to the
manifest file; exactly one row must carry the arm label ``reference``
(the baseline frame every image is compared against). Grayscale PGM
files are ingested directly, 24-bit PPM files go through the luma
conversion first.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import imaging, pnm
from .errors import InvalidParameterError
from .experiment import ExperimentReport, ReportRow, _mean_stderr

REFERENCE_ARM = "reference"


@dataclass(frozen=True)
class ManifestEntry:
    day: float
    arm: str
    path: Path


class SizeMismatchError(InvalidParameterError):
    """An image's dimensions differ from the reference frame's."""


def read_manifest(path) -> list[ManifestEntry]:
    """Parse a ``day,arm,path`` manifest; validates the reference row."""
    path = Path(path)
    entries = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["day", "arm", "path"]:
            raise InvalidParameterError(
                f"manifest {path} must start with header 'day,arm,path'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise InvalidParameterError(
                    f"manifest {path} line {lineno}: expected 3 columns")
            try:
                day = float(row[0])
            except ValueError as exc:
                raise InvalidParameterError(
                    f"manifest {path} line {lineno}: bad day '{row[0]}'") from exc
            entries.append(ManifestEntry(day=day, arm=row[1].strip(),
                                         path=path.parent / row[2].strip()))
    refs = [e for e in entries if e.arm == REFERENCE_ARM]
    if len(refs) != 1:
        raise InvalidParameterError(
            f"manifest must contain exactly one '{REFERENCE_ARM}' row, "
            f"found {len(refs)}")
    return entries


def _load_gray(path) -> np.ndarray:
    pixels = pnm.read_image(path)
    if pixels.ndim == 3:
        return imaging.to_gray(pixels.astype(np.float64) / 255.0)
    return imaging.u8_to_gray(pixels)


def analyze_corpus(entries, threshold: imaging.ThresholdParams) -> ExperimentReport:
    """Binarize every image and compare it against the reference frame.

    The report matches the simulated schema: per-row MSE against the
    reference, control/treated pairing by replicate order within each
    day, and per-(day, arm) aggregates.
    """
    reference_entry = next(e for e in entries if e.arm == REFERENCE_ARM)
    reference_gray = _load_gray(reference_entry.path)
    reference_bin = imaging.binarize(reference_gray, threshold)
    ref_shape = reference_gray.shape

    binaries = []
    for entry in entries:
        gray = _load_gray(entry.path)
        if gray.shape != ref_shape:
            raise SizeMismatchError(
                f"{entry.path} is {gray.shape[1]}x{gray.shape[0]}, reference "
                f"is {ref_shape[1]}x{ref_shape[0]}")
        binaries.append(imaging.binarize(gray, threshold))

    replicate_counters: dict = {}
    replicates = []
    for entry in entries:
        key = (entry.day, entry.arm)
        replicates.append(replicate_counters.get(key, 0))
        replicate_counters[key] = replicates[-1] + 1

    pair_of: dict = {}
    by_day_arm: dict = {}
    for idx, entry in enumerate(entries):
        by_day_arm.setdefault((entry.day, entry.arm), []).append(idx)
    for day in sorted({e.day for e in entries}):
        controls = by_day_arm.get((day, "control"), [])
        treateds = by_day_arm.get((day, "treated"), [])
        for c_idx, t_idx in zip(controls, treateds):
            value = imaging.mse(binaries[c_idx], binaries[t_idx])
            pair_of[c_idx] = value
            pair_of[t_idx] = value

    rows = []
    for idx, entry in enumerate(entries):
        rows.append(ReportRow(
            day=entry.day, arm=entry.arm, replicate=replicates[idx],
            mse_vs_day0=imaging.mse(binaries[idx], reference_bin),
            mse_control_vs_treated=pair_of.get(idx, math.nan)))

    day_stats = {}
    for (day, arm), idxs in by_day_arm.items():
        day_stats[(day, arm)] = _mean_stderr([rows[i].mse_vs_day0 for i in idxs])
    pair_stats = {}
    for day in sorted({e.day for e in entries}):
        paired = [pair_of[i] for i in by_day_arm.get((day, "control"), [])
                  if i in pair_of]
        if paired:
            pair_stats[day] = _mean_stderr(paired)
    return ExperimentReport(rows=rows, day_stats=day_stats, pair_stats=pair_stats)
