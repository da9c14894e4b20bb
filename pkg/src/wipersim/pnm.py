"""Bit-exact binary PGM (P5) and PPM (P6) readers and writers.

Only the 8-bit maxval-255 variants are supported; that is what the
analysis pipeline ingests and what the renderer emits. Headers accept
arbitrary whitespace and ``#`` comments per the Netpbm convention;
writers emit a canonical header so write -> read -> write round-trips
byte-identically.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .errors import PnmError


def _read_token(buf: io.BytesIO) -> bytes:
    token = b""
    while True:
        ch = buf.read(1)
        if ch == b"":
            if token:
                return token
            raise PnmError("unexpected end of header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = buf.read(1)
            continue
        if ch.isspace():
            if token:
                return token
            continue
        token += ch


def _read_header(buf: io.BytesIO, magic: bytes) -> tuple[int, int]:
    got = _read_token(buf)
    if got != magic:
        raise PnmError(f"expected {magic.decode()} file, got magic {got!r}")
    try:
        width = int(_read_token(buf))
        height = int(_read_token(buf))
        maxval = int(_read_token(buf))
    except ValueError as exc:
        raise PnmError(f"non-numeric header field: {exc}") from exc
    if width <= 0 or height <= 0:
        raise PnmError("image dimensions must be positive")
    if maxval != 255:
        raise PnmError(f"only maxval 255 is supported, got {maxval}")
    return width, height


def _read_raster(buf: io.BytesIO, count: int) -> np.ndarray:
    data = buf.read(count)
    if len(data) != count:
        raise PnmError(f"raster truncated: expected {count} bytes, got {len(data)}")
    return np.frombuffer(data, dtype=np.uint8)


def read_pgm(path) -> np.ndarray:
    """Read an 8-bit binary PGM into a (height, width) uint8 array."""
    buf = io.BytesIO(Path(path).read_bytes())
    width, height = _read_header(buf, b"P5")
    return _read_raster(buf, width * height).reshape(height, width).copy()


def read_ppm(path) -> np.ndarray:
    """Read a 24-bit binary PPM into a (height, width, 3) uint8 array."""
    buf = io.BytesIO(Path(path).read_bytes())
    width, height = _read_header(buf, b"P6")
    return _read_raster(buf, width * height * 3).reshape(height, width, 3).copy()


def _check_u8(pixels: np.ndarray, ndim: int) -> np.ndarray:
    pixels = np.asarray(pixels)
    if pixels.dtype != np.uint8:
        raise PnmError(f"expected uint8 pixels, got {pixels.dtype}")
    if pixels.ndim != ndim:
        raise PnmError(f"expected {ndim}-D pixel array, got shape {pixels.shape}")
    return pixels


def pgm_bytes(pixels: np.ndarray) -> bytes:
    pixels = _check_u8(pixels, 2)
    h, w = pixels.shape
    return b"P5\n%d %d\n255\n" % (w, h) + pixels.tobytes()


def ppm_bytes(pixels: np.ndarray) -> bytes:
    pixels = _check_u8(pixels, 3)
    if pixels.shape[2] != 3:
        raise PnmError("PPM pixels need 3 channels")
    h, w, _ = pixels.shape
    return b"P6\n%d %d\n255\n" % (w, h) + pixels.tobytes()


def write_pgm(path, pixels: np.ndarray) -> None:
    Path(path).write_bytes(pgm_bytes(pixels))


def write_ppm(path, pixels: np.ndarray) -> None:
    Path(path).write_bytes(ppm_bytes(pixels))


def read_image(path) -> np.ndarray:
    """Read either format by magic: PGM -> 2-D, PPM -> 3-D uint8 array."""
    with Path(path).open("rb") as handle:
        head = handle.read(2)
    if head == b"P5":
        return read_pgm(path)
    if head == b"P6":
        return read_ppm(path)
    raise PnmError(f"unsupported image magic {head!r} in {path}")
