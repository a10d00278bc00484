"""Pipeline configuration and flat key=value config files.

Every tunable constant of the pipeline lives here so batch runs can be
reproduced from a single small text file. The file format is one
``key = value`` pair per line, ``#`` starts a comment. Unknown keys are
rejected rather than ignored, so typos fail loudly.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path


@dataclass
class PipelineConfig:
    # segmentation
    kernel_sigma: float = 3.0
    max_dist: float = 10.0
    # feature-space weight of intensity; <= 0 means auto (10 * min(w, h) / 256)
    intensity_scale: float = -1.0
    min_region_px: int = 8

    # connectivity / layering
    sigma1_sq: float = 0.5
    sigma2_sq_init: float = 0.2
    sigma2_sq_min: float = 0.05
    sigma2_sq_max: float = 0.4
    max_layer_adapt: int = 8
    min_layers: int = 3
    max_layers: int = 5
    width_cover_frac: float = 0.75
    # fold path confidence into the background connectivity value (nc = t * c);
    # plain t when disabled
    nc_confidence_weighted: bool = True

    # cue maps
    sigma3_sq: float = 0.1
    # keep the literal "60th percentile minus a_g" rule for the global c parameter
    cg_literal: bool = True
    # divide the adaptive center by the coordinate sum instead of the weight sum
    ac_literal_denominator: bool = False

    # objective
    alpha: float = 4.0
    gamma: float = 40.0
    eps_log: float = 1e-6

    # interior point solver
    solver_tol: float = 1e-6
    solver_max_iter: int = 200
    # restore the extra sum(S) = 1 primal residual row of the predecessor model
    compat_sum_row: bool = False

    # evaluation
    theta_sq: float = 0.3

    # default output directory; empty string means pick per invocation
    out_dir: str = ""

    def resolved_intensity_scale(self, width: int, height: int) -> float:
        if self.intensity_scale > 0:
            return self.intensity_scale
        return 10.0 * min(width, height) / 256.0


_BOOL_WORDS = {"true": True, "1": True, "yes": True, "on": True,
               "false": False, "0": False, "no": False, "off": False}


def _coerce(raw: str, target_type: type):
    if target_type is bool:
        word = raw.strip().lower()
        if word not in _BOOL_WORDS:
            raise ValueError(f"not a boolean: {raw!r}")
        return _BOOL_WORDS[word]
    return target_type(raw)


def parse_config_text(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """Parse flat key=value lines into a config, starting from ``base``."""
    cfg = base if base is not None else PipelineConfig()
    known = {f.name: f.type for f in fields(PipelineConfig)}
    types = {f.name: type(getattr(cfg, f.name)) for f in fields(PipelineConfig)}
    updates = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in known:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        try:
            updates[key] = _coerce(raw.strip(), types[key])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return replace(cfg, **updates)


def load_config(path: str | Path, base: PipelineConfig | None = None) -> PipelineConfig:
    return parse_config_text(Path(path).read_text(), base=base)
