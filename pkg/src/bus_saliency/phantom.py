"""Synthetic ultrasound-like phantoms for testing.

A phantom is a stack of horizontal tissue bands with an optional
hypoechoic (darker) elliptical inclusion, degraded by multiplicative
speckle noise. Generation is fully deterministic for a given spec, so
test suites can freeze expectations against it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PhantomSpecError
from .imaging import BinaryMask, GrayImage


@dataclass
class TumorSpec:
    center: tuple[float, float]   # (cx, cy), normalized image coordinates
    radii: tuple[float, float]    # (rx, ry), normalized semi-axes
    intensity: float


@dataclass
class PhantomSpec:
    width: int = 256
    height: int = 256
    # (thickness fraction, base intensity), listed top to bottom
    bands: list[tuple[float, float]] = field(
        default_factory=lambda: [(0.25, 0.8), (0.25, 0.25), (0.25, 0.55), (0.25, 0.4)]
    )
    tumor: TumorSpec | None = None
    speckle_sigma: float = 0.05
    seed: int = 0


def _band_rows(spec: PhantomSpec) -> list[tuple[int, int, float]]:
    total = sum(t for t, _ in spec.bands)
    if total <= 0 or any(t <= 0 for t, _ in spec.bands):
        raise PhantomSpecError("band thickness fractions must be positive")
    if any(not (0.0 <= v <= 1.0) for _, v in spec.bands):
        raise PhantomSpecError("band intensities must lie in [0, 1]")
    rows = []
    cum = 0.0
    start = 0
    for i, (thick, value) in enumerate(spec.bands):
        cum += thick / total
        stop = spec.height if i == len(spec.bands) - 1 else int(round(cum * spec.height))
        if stop <= start:
            raise PhantomSpecError(f"band {i} rounds to zero rows")
        rows.append((start, stop, value))
        start = stop
    return rows


def _tumor_mask(spec: PhantomSpec) -> np.ndarray:
    tum = spec.tumor
    if not (0.0 <= tum.intensity <= 1.0):
        raise PhantomSpecError("tumor intensity must lie in [0, 1]")
    if tum.radii[0] <= 0 or tum.radii[1] <= 0:
        raise PhantomSpecError("tumor radii must be positive")
    # pixel-center coordinates, normalized to [0, 1]
    cols = (np.arange(spec.width) + 0.5) / spec.width
    rows = (np.arange(spec.height) + 0.5) / spec.height
    dx = (cols[None, :] - tum.center[0]) / tum.radii[0]
    dy = (rows[:, None] - tum.center[1]) / tum.radii[1]
    mask = dx * dx + dy * dy <= 1.0
    if not mask.any():
        raise PhantomSpecError("tumor ellipse covers no pixel")
    if mask[0, :].any() or mask[-1, :].any() or mask[:, 0].any() or mask[:, -1].any():
        raise PhantomSpecError("tumor ellipse touches the image border")
    return mask


def generate_phantom(spec: PhantomSpec) -> tuple[GrayImage, BinaryMask]:
    """Render the phantom and its ground-truth tumor mask."""
    if spec.width < 2 or spec.height < 2:
        raise PhantomSpecError("phantom must be at least 2x2")
    if spec.speckle_sigma < 0:
        raise PhantomSpecError("speckle sigma must be non-negative")
    pixels = np.empty((spec.height, spec.width), dtype=np.float64)
    for start, stop, value in _band_rows(spec):
        pixels[start:stop, :] = value
    if spec.tumor is not None:
        mask = _tumor_mask(spec)
        pixels[mask] = spec.tumor.intensity
    else:
        mask = np.zeros_like(pixels, dtype=bool)
    if spec.speckle_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        noise = rng.standard_normal(pixels.shape)
        pixels = np.clip(pixels * (1.0 + spec.speckle_sigma * noise), 0.0, 1.0)
    return GrayImage(pixels=pixels), BinaryMask(pixels=mask)


def parse_phantom_text(text: str) -> PhantomSpec:
    """Parse a flat key=value phantom description.

    Recognized keys: width, height, bands (comma list of thickness:intensity),
    tumor_cx, tumor_cy, tumor_rx, tumor_ry, tumor_intensity, speckle_sigma,
    seed. A tumor is emitted only when all five tumor_* keys are present.
    """
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise PhantomSpecError(f"line {lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        values[key.strip()] = raw.strip()

    spec = PhantomSpec()
    try:
        if "width" in values:
            spec.width = int(values["width"])
        if "height" in values:
            spec.height = int(values["height"])
        if "bands" in values:
            bands = []
            for part in values["bands"].split(","):
                thick, _, inten = part.strip().partition(":")
                bands.append((float(thick), float(inten)))
            spec.bands = bands
        if "speckle_sigma" in values:
            spec.speckle_sigma = float(values["speckle_sigma"])
        if "seed" in values:
            spec.seed = int(values["seed"])
        tumor_keys = ["tumor_cx", "tumor_cy", "tumor_rx", "tumor_ry", "tumor_intensity"]
        present = [k for k in tumor_keys if k in values]
        if present and len(present) != len(tumor_keys):
            missing = sorted(set(tumor_keys) - set(present))
            raise PhantomSpecError(f"incomplete tumor description, missing {missing}")
        if present:
            spec.tumor = TumorSpec(
                center=(float(values["tumor_cx"]), float(values["tumor_cy"])),
                radii=(float(values["tumor_rx"]), float(values["tumor_ry"])),
                intensity=float(values["tumor_intensity"]),
            )
    except ValueError as exc:
        raise PhantomSpecError(f"bad phantom value: {exc}") from exc
    return spec
