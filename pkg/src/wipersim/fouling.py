"""Phenomenological biofilm growth on the observation window.

The window is a grid of opacity values in [0, 1]. Growth combines three
deterministic-per-seed effects per step: logistic deepening of existing
film, conservative 4-neighbour spreading, and Poisson-seeded new
colonies stamped as discs. Wiping attenuates the film inside the swept
band and can add a small scratch haze.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError

WINDOW_WIDTH_MM = 60.0
WINDOW_HEIGHT_MM = 45.0
DEFAULT_CELL_MM = 0.25


@dataclass
class OpacityField:
    """Fouling opacity sampled on a regular grid over the window.

    ``grid[i, j]`` covers x in [j*cell, (j+1)*cell) and y likewise; the
    full extent defaults to the 60 x 45 mm observation window.
    """

    grid: np.ndarray
    cell_size_mm: float = DEFAULT_CELL_MM

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.float64)
        if self.grid.ndim != 2 or self.grid.size == 0:
            raise InvalidParameterError("opacity grid must be a nonempty 2-D array")
        if self.cell_size_mm <= 0:
            raise InvalidParameterError("cell size must be > 0")
        if np.any(self.grid < 0) or np.any(self.grid > 1):
            raise InvalidParameterError("opacity values must lie in [0, 1]")

    @classmethod
    def window(cls, cell_size_mm: float = DEFAULT_CELL_MM,
               width_mm: float = WINDOW_WIDTH_MM,
               height_mm: float = WINDOW_HEIGHT_MM) -> "OpacityField":
        """Empty field covering the observation window."""
        cols = int(round(width_mm / cell_size_mm))
        rows = int(round(height_mm / cell_size_mm))
        return cls(np.zeros((rows, cols)), cell_size_mm)

    @property
    def width_mm(self) -> float:
        return self.grid.shape[1] * self.cell_size_mm

    @property
    def height_mm(self) -> float:
        return self.grid.shape[0] * self.cell_size_mm

    def copy(self) -> "OpacityField":
        return OpacityField(self.grid.copy(), self.cell_size_mm)


@dataclass(frozen=True)
class GrowthParams:
    """Knobs of the growth model; rates are per day.

    The defaults are the values calibrated against the bundled
    day/MSE target trajectory (see data/default_targets.csv).
    """

    rate_per_day: float = 0.16875       # logistic deepening rate
    seed_rate_per_day: float = 7.25     # expected new colonies per day
    seed_opacity: float = 0.5           # opacity a fresh colony is stamped at
    colony_radius_mm: float = 0.7
    spread_per_day: float = 0.05        # neighbour exchange fraction
    stimulation_factor: float = 1.0     # >= 1 when biostimulant is present
    rng_seed: int = 0

    def __post_init__(self):
        if min(self.rate_per_day, self.seed_rate_per_day, self.seed_opacity,
               self.colony_radius_mm, self.spread_per_day) < 0:
            raise InvalidParameterError("growth parameters must be >= 0")
        if self.seed_opacity > 1:
            raise InvalidParameterError("seed opacity must be <= 1")
        if self.stimulation_factor < 0:
            raise InvalidParameterError("stimulation factor must be >= 0")


@dataclass(frozen=True)
class WiperBand:
    """Rectangle swept by the blade, plus its cleaning behaviour.

    The blade bridges the two lead screws, so by default it spans the
    full window width; the travel direction runs along the 45 mm axis
    with the blade extent padding the 40 mm travel to 43 mm.
    """

    x_min_mm: float = 0.0
    x_max_mm: float = WINDOW_WIDTH_MM
    y_min_mm: float = 1.0
    y_max_mm: float = 44.0
    efficiency: float = 0.95            # opacity fraction removed per pass
    scratch_haze_per_pass: float = 0.0  # opacity added per pass by abrasion

    def __post_init__(self):
        if not (self.x_min_mm < self.x_max_mm and self.y_min_mm < self.y_max_mm):
            raise InvalidParameterError("band rectangle must have positive area")
        if not 0 <= self.efficiency <= 1:
            raise InvalidParameterError("efficiency must lie in [0, 1]")
        if self.scratch_haze_per_pass < 0:
            raise InvalidParameterError("scratch haze must be >= 0")


def band_mask(fld: OpacityField, band: WiperBand) -> np.ndarray:
    """Boolean mask of cells whose centre lies inside the band."""
    if (band.x_max_mm > fld.width_mm + 1e-9 or band.y_max_mm > fld.height_mm + 1e-9
            or band.x_min_mm < 0 or band.y_min_mm < 0):
        raise InvalidParameterError("band must lie within the window extent")
    rows, cols = fld.grid.shape
    yc = (np.arange(rows) + 0.5) * fld.cell_size_mm
    xc = (np.arange(cols) + 0.5) * fld.cell_size_mm
    in_y = (yc >= band.y_min_mm) & (yc < band.y_max_mm)
    in_x = (xc >= band.x_min_mm) & (xc < band.x_max_mm)
    return np.outer(in_y, in_x)


def _stamp_disc(grid: np.ndarray, cx_mm: float, cy_mm: float,
                radius_mm: float, opacity: float, cell: float) -> None:
    r_cells = radius_mm / cell
    ci, cj = cy_mm / cell - 0.5, cx_mm / cell - 0.5
    i0 = max(0, int(np.floor(ci - r_cells)))
    i1 = min(grid.shape[0], int(np.ceil(ci + r_cells)) + 1)
    j0 = max(0, int(np.floor(cj - r_cells)))
    j1 = min(grid.shape[1], int(np.ceil(cj + r_cells)) + 1)
    if i0 >= i1 or j0 >= j1:
        return
    ii = np.arange(i0, i1)[:, None] - ci
    jj = np.arange(j0, j1)[None, :] - cj
    disc = ii * ii + jj * jj <= r_cells * r_cells
    patch = grid[i0:i1, j0:j1]
    np.maximum(patch, np.where(disc, opacity, patch), out=patch)


def grow(fld: OpacityField, params: GrowthParams, dt_days: float,
         rng: np.random.Generator | None = None) -> OpacityField:
    """One explicit growth step of size ``dt_days``.

    Per cell: o += stimulation * rate * o * (1 - o) * dt plus a
    conservative neighbour-exchange term, clamped to [0, 1]; then
    Poisson(seed_rate * dt) new colonies are stamped as discs of
    ``seed_opacity``. Bit-identical for a fixed seed: pass a generator
    to chain steps, or omit it to derive one from ``params.rng_seed``.
    """
    if dt_days <= 0:
        raise InvalidParameterError("dt_days must be > 0")
    if rng is None:
        rng = np.random.default_rng(params.rng_seed)

    o = fld.grid
    logistic = params.stimulation_factor * params.rate_per_day * o * (1.0 - o)
    exchange = np.zeros_like(o)
    dx = np.diff(o, axis=1)
    exchange[:, :-1] += dx
    exchange[:, 1:] -= dx
    dy = np.diff(o, axis=0)
    exchange[:-1, :] += dy
    exchange[1:, :] -= dy
    new = o + dt_days * (logistic + params.spread_per_day * exchange)
    np.clip(new, 0.0, 1.0, out=new)

    n_colonies = int(rng.poisson(params.seed_rate_per_day * dt_days))
    for _ in range(n_colonies):
        cx = rng.uniform(0.0, fld.width_mm)
        cy = rng.uniform(0.0, fld.height_mm)
        _stamp_disc(new, cx, cy, params.colony_radius_mm,
                    params.seed_opacity, fld.cell_size_mm)

    return OpacityField(new, fld.cell_size_mm)


def wipe(fld: OpacityField, band: WiperBand, pass_count: int = 1) -> OpacityField:
    """Attenuate the film inside the band by (1 - efficiency) per pass.

    Scratch haze, when enabled, adds a constant opacity per pass inside
    the band. Cells outside the band are untouched.
    """
    if pass_count < 1:
        raise InvalidParameterError("pass count must be >= 1")
    mask = band_mask(fld, band)
    new = fld.grid.copy()
    attenuated = (new[mask] * (1.0 - band.efficiency) ** pass_count
                  + band.scratch_haze_per_pass * pass_count)
    new[mask] = np.clip(attenuated, 0.0, 1.0)
    return OpacityField(new, fld.cell_size_mm)


def mean_opacity(fld: OpacityField, region: tuple[float, float, float, float] | None = None) -> float:
    """Arithmetic mean opacity over a (x0, y0, x1, y1) mm region.

    ``None`` averages the whole window. A region that covers no cell
    centres is an error.
    """
    if region is None:
        return float(fld.grid.mean())
    x0, y0, x1, y1 = region
    mask = band_mask(fld, WiperBand(x_min_mm=x0, x_max_mm=x1,
                                    y_min_mm=y0, y_max_mm=y1,
                                    efficiency=0.0))
    if not mask.any():
        raise InvalidParameterError("region covers no grid cells")
    return float(fld.grid[mask].mean())


def field_to_u8(fld: OpacityField) -> np.ndarray:
    """Quantize the field to 8-bit gray for PGM inspection dumps."""
    return np.rint(fld.grid * 255.0).astype(np.uint8)


def save_field_pgm(fld: OpacityField, path) -> None:
    """Write the field as a binary PGM (opaque cells render bright)."""
    from .pnm import write_pgm

    write_pgm(path, field_to_u8(fld))


def carriage_opacity_profile(fld: OpacityField, band: WiperBand,
                             travel_mm: float, blade_halfheight_mm: float = 1.5):
    """Map carriage position to mean opacity under the blade strip.

    The carriage travels along y, centred in the window; the returned
    callable is what the magnetic-coupling drag model consumes.
    """
    offset = (fld.height_mm - travel_mm) / 2.0
    rows, _ = fld.grid.shape
    yc = (np.arange(rows) + 0.5) * fld.cell_size_mm
    cols = band_mask(fld, band).any(axis=0)
    if not cols.any():
        raise InvalidParameterError("band covers no columns")
    row_means = fld.grid[:, cols].mean(axis=1)

    def profile(position_mm: float) -> float:
        y = offset + position_mm
        rows_hit = np.abs(yc - y) <= blade_halfheight_mm
        if not rows_hit.any():
            return 0.0
        return float(row_means[rows_hit].mean())

    return profile
