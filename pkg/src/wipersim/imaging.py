"""Synthetic sensor frames and the image-quality analysis pipeline.

Grayscale images are float arrays in [0, 1] shaped (height, width);
binary images are uint8 arrays of 0/1. The pipeline is: render (or
ingest) -> grayscale -> locally adaptive binarization against the
windowed mean -> MSE against a reference frame. Binarization follows a
Bradley-style rule with threshold offset t(s) = 0.3 * (1 - s), so
sensitivity 0.5 gives the classic 0.15 offset and higher sensitivity
marks more pixels as foreground.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .fouling import OpacityField

DEFAULT_FRAME_WIDTH = 1600
DEFAULT_FRAME_HEIGHT = 1200

#: Luma weights for RGB -> grayscale conversion.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def default_window_side(width: int, height: int) -> int:
    """Adaptive-threshold neighbourhood: odd, about 1/8 of the short side."""
    return 2 * (min(width, height) // 16) + 1


@dataclass(frozen=True)
class ThresholdParams:
    """Locally adaptive binarization settings."""

    sensitivity: float = 0.5
    polarity: str = "dark"      # which side of the local mean is foreground
    window_side: int | None = None  # odd pixels; None picks the size default

    def __post_init__(self):
        if not 0 <= self.sensitivity <= 1:
            raise InvalidParameterError("sensitivity must lie in [0, 1]")
        if self.polarity not in ("dark", "bright"):
            raise InvalidParameterError("polarity must be 'dark' or 'bright'")
        if self.window_side is not None:
            if self.window_side < 3 or self.window_side % 2 == 0:
                raise InvalidParameterError("window side must be odd and >= 3")


def render(field: OpacityField, background_level: float = 0.92,
           noise_sigma: float = 0.02, rng_seed=0,
           width: int = DEFAULT_FRAME_WIDTH,
           height: int = DEFAULT_FRAME_HEIGHT) -> np.ndarray:
    """Render the fouled window against a bright diffuse background.

    Each pixel sees the background attenuated by the opacity at its
    window coordinate: value = background * (1 - opacity) + N(0, sigma),
    clamped to [0, 1]. The window maps onto the full frame. Deterministic
    per seed (any numpy seed-like value); sigma 0 renders the exact
    affine map.
    """
    if not 0 < background_level <= 1:
        raise InvalidParameterError("background level must lie in (0, 1]")
    if noise_sigma < 0:
        raise InvalidParameterError("noise sigma must be >= 0")
    rows, cols = field.grid.shape
    if width < cols or height < rows:
        raise InvalidParameterError(
            f"frame {width}x{height} must be at least the grid size {cols}x{rows}")
    row_map = np.floor((np.arange(height) + 0.5) * rows / height).astype(np.intp)
    col_map = np.floor((np.arange(width) + 0.5) * cols / width).astype(np.intp)
    transmitted = background_level * (1.0 - field.grid)
    img = transmitted[np.ix_(row_map, col_map)]
    if noise_sigma > 0:
        rng = np.random.default_rng(rng_seed)
        img += noise_sigma * rng.standard_normal(img.shape)
    return np.clip(img, 0.0, 1.0, out=img)


def quantize_u8(img: np.ndarray) -> np.ndarray:
    """Quantize a [0, 1] float image to the sensor's 8-bit output."""
    return np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def u8_to_gray(pixels: np.ndarray) -> np.ndarray:
    """Normalize stored 8-bit intensities back to [0, 1] floats."""
    return pixels.astype(np.float64) / 255.0


def to_gray(rgb: np.ndarray) -> np.ndarray:
    """Convert an RGB image with channels in [0, 1] to grayscale luma."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise InvalidParameterError(f"expected (h, w, 3) RGB array, got {rgb.shape}")
    if rgb.min() < 0 or rgb.max() > 1:
        raise InvalidParameterError("RGB channel values must lie in [0, 1]")
    r, g, b = LUMA_WEIGHTS
    return r * rgb[:, :, 0] + g * rgb[:, :, 1] + b * rgb[:, :, 2]


def local_mean(img: np.ndarray, window_side: int) -> np.ndarray:
    """Mean over the window_side square centred at each pixel.

    Windows are truncated at the image border and normalized by the
    number of pixels actually covered. Built on an integral image, so
    the cost does not depend on the window size.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise InvalidParameterError("image must be a nonempty 2-D array")
    if window_side < 1 or window_side % 2 == 0:
        raise InvalidParameterError("window side must be odd and >= 1")
    h, w = img.shape
    r = window_side // 2
    integral = np.zeros((h + 1, w + 1), dtype=np.float64)
    np.cumsum(np.cumsum(img, axis=0), axis=1, out=integral[1:, 1:])
    y0 = np.clip(np.arange(h) - r, 0, h)
    y1 = np.clip(np.arange(h) + r + 1, 0, h)
    x0 = np.clip(np.arange(w) - r, 0, w)
    x1 = np.clip(np.arange(w) + r + 1, 0, w)
    slab = integral[y1] - integral[y0]
    sums = slab[:, x1]
    sums -= slab[:, x0]
    sums /= (y1 - y0)[:, None]
    sums /= (x1 - x0)[None, :]
    return sums


def binarize(img: np.ndarray, params: ThresholdParams = ThresholdParams()) -> np.ndarray:
    """Binarize against the local mean; foreground pixels come out 0.

    Dark polarity: bit = 1 iff pixel > mean * (1 - t(s)); bright
    polarity mirrors it as bit = 1 iff pixel < mean * (1 + t(s)).
    The threshold scales with the local mean, so the output is invariant
    under global intensity scaling.
    """
    img = np.asarray(img, dtype=np.float64)
    side = params.window_side
    if side is None:
        side = default_window_side(img.shape[1], img.shape[0])
    mean = local_mean(img, side)
    offset = 0.3 * (1.0 - params.sensitivity)
    if params.polarity == "dark":
        bits = img > mean * (1.0 - offset)
    else:
        bits = img < mean * (1.0 + offset)
    return bits.astype(np.uint8)


def mse(x: np.ndarray, y: np.ndarray) -> float:
    """Mean squared difference between two equally shaped value arrays."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise InvalidParameterError(f"shape mismatch: {x.shape} vs {y.shape}")
    if x.size == 0:
        raise InvalidParameterError("images must be nonempty")
    if (x.dtype == np.uint8 and y.dtype == np.uint8
            and x.max() <= 1 and y.max() <= 1):
        # binary case: the mean squared difference is the fraction of
        # differing pixels, countable without a float conversion
        return np.count_nonzero(x != y) / x.size
    d = x.astype(np.float64).ravel() - y.astype(np.float64).ravel()
    return float(np.mean(d * d))
