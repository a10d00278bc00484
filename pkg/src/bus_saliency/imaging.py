"""Grayscale image and mask I/O.

Only two container formats are supported: PNG and binary PGM (P5), both
8-bit. Pixel values are mapped to [0, 1] as raw / 255 on load and written
back with round-half-up quantization, so a load/save round trip never moves
a pixel by more than one quantization step.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageFormatError, ImageIOError


@dataclass
class GrayImage:
    """A single-channel image with float intensities in [0, 1]."""

    pixels: np.ndarray  # float64, shape (height, width)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])


@dataclass
class BinaryMask:
    """A boolean foreground mask with the same geometry as its image."""

    pixels: np.ndarray  # bool, shape (height, width)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])


def _check_shape(arr: np.ndarray, path: Path) -> None:
    if arr.ndim < 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ImageFormatError(f"{path}: zero-dimension image")


_PGM_HEADER = re.compile(rb"^P5\s+(?:#.*\n\s*)*(\d+)\s+(\d+)\s+(\d+)\s")


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    m = _PGM_HEADER.match(data)
    if m is None:
        raise ImageFormatError(f"{path}: not a binary (P5) PGM file")
    width, height, maxval = (int(g) for g in m.groups())
    if maxval <= 0 or maxval > 255:
        raise ImageFormatError(f"{path}: PGM maxval {maxval} is not 8-bit")
    body = data[m.end():]
    if len(body) < width * height:
        raise ImageFormatError(f"{path}: truncated PGM payload")
    raw = np.frombuffer(body[: width * height], dtype=np.uint8)
    return raw.reshape(height, width)


def _write_pgm(path: Path, raw: np.ndarray) -> None:
    header = f"P5\n{raw.shape[1]} {raw.shape[0]}\n255\n".encode("ascii")
    path.write_bytes(header + raw.astype(np.uint8).tobytes())


def _read_raster(path: Path) -> np.ndarray:
    """Return a (h, w) uint8 array; color inputs are channel-averaged."""
    if not path.exists():
        raise ImageIOError(f"{path}: no such file")
    if path.suffix.lower() == ".pgm":
        return _read_pgm(path)
    try:
        with Image.open(path) as img:
            if img.mode == "L":
                arr = np.asarray(img, dtype=np.uint8)
            elif img.mode in ("RGB", "RGBA", "P", "LA", "1"):
                rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
                arr = np.floor(rgb.mean(axis=2) + 0.5).astype(np.uint8)
            else:
                raise ImageFormatError(f"{path}: unsupported mode {img.mode!r} (8-bit only)")
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"{path}: not a decodable image") from exc
    except OSError as exc:
        raise ImageIOError(f"{path}: {exc}") from exc
    _check_shape(arr, path)
    return arr


def load_image(path: str | Path) -> GrayImage:
    """Load an 8-bit grayscale PNG or PGM as intensities in [0, 1]."""
    raw = _read_raster(Path(path))
    _check_shape(raw, Path(path))
    return GrayImage(pixels=raw.astype(np.float64) / 255.0)


def load_mask(path: str | Path) -> BinaryMask:
    """Load a mask image; any nonzero pixel counts as foreground."""
    raw = _read_raster(Path(path))
    return BinaryMask(pixels=raw > 0)


def quantize(values: np.ndarray) -> np.ndarray:
    """Map [0, 1] floats to uint8 with round-half-up (0.5 -> 128)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size and (v.min() < 0.0 or v.max() > 1.0):
        raise ValueError("saliency values outside [0, 1]")
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def write_gray(path: str | Path, values: np.ndarray) -> None:
    """Write a [0, 1] float array as an 8-bit PNG or PGM (by extension)."""
    path = Path(path)
    raw = quantize(values)
    try:
        if path.suffix.lower() == ".pgm":
            _write_pgm(path, raw)
        else:
            Image.fromarray(raw, mode="L").save(path, format="PNG")
    except OSError as exc:
        raise ImageIOError(f"{path}: {exc}") from exc


def write_mask(path: str | Path, mask: np.ndarray) -> None:
    write_gray(path, np.where(np.asarray(mask, dtype=bool), 1.0, 0.0))
