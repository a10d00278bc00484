"""Saliency scoring: adaptive-threshold precision/recall/F, MAE, P-R curves.

All metrics are pixel-count ratios between binary masks. A saliency map
enters either through the adaptive threshold (twice its mean) or through
the 256-level sweep that builds a P-R curve. Functions take plain numpy
arrays so they compose with both the raster pipeline output and small
hand-built fixtures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def binarize_adaptive(smap: np.ndarray) -> np.ndarray:
    """Threshold a [0, 1] saliency map at twice its mean value.

    The threshold is capped just below 1 so a saturated map still selects
    its maximal pixels. An all-zero map maps to an all-zero mask; the
    literal ``>= 0`` comparison would select everything instead.
    """
    s = np.asarray(smap, dtype=np.float64)
    thr = min(2.0 * float(s.mean()), 1.0 - 1e-12)
    if thr <= 0.0:
        return np.zeros(s.shape, dtype=bool)
    return s >= thr


def _paired(a, b, a_type, b_type):
    a = np.asarray(a, dtype=a_type)
    b = np.asarray(b, dtype=b_type)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def precision_recall(sm, gt) -> tuple[float, float]:
    """Pixel precision and recall of a binary map against ground truth.

    Empty-set conventions: an empty SM scores precision 1 only when GT is
    also empty (nothing to find, nothing claimed); an empty GT scores
    recall 1 only when SM is empty too. Both conventions matter for
    images that genuinely contain no lesion.
    """
    sm, gt = _paired(sm, gt, bool, bool)
    inter = float(np.count_nonzero(sm & gt))
    n_sm = float(np.count_nonzero(sm))
    n_gt = float(np.count_nonzero(gt))
    if n_sm == 0:
        precision = 1.0 if n_gt == 0 else 0.0
    else:
        precision = inter / n_sm
    if n_gt == 0:
        recall = 1.0 if n_sm == 0 else 0.0
    else:
        recall = inter / n_gt
    return precision, recall


def f_measure(precision: float, recall: float, theta_sq: float = 0.3) -> float:
    """Weighted harmonic mean of precision and recall; 0 when both are 0."""
    denom = theta_sq * precision + recall
    if denom == 0.0:
        return 0.0
    return (1.0 + theta_sq) * precision * recall / denom


def mae(smap, gt) -> float:
    """Mean absolute per-pixel difference; ground truth read as 0/1."""
    s, g = _paired(smap, gt, np.float64, np.float64)
    return float(np.abs(s - g).mean())


@dataclass
class PRCurve:
    """Precision and recall at each of the 256 byte thresholds."""

    precision: np.ndarray  # (256,)
    recall: np.ndarray     # (256,)


def pr_curve(smap, gt) -> PRCurve:
    """Precision/recall of the masks ``S * 255 >= t`` for every t in 0..255.

    Counts come from a reverse-cumulative histogram of the byte-scaled
    map, one pass over the pixels instead of 256. For integer t,
    ``v >= t`` holds exactly when ``floor(v) >= t``, so flooring into
    levels loses nothing.
    """
    s, _ = _paired(smap, gt, np.float64, bool)
    g = np.asarray(gt, dtype=bool)
    level = np.clip(np.floor(s * 255.0).astype(np.int64), 0, 255)
    total = np.bincount(level.ravel(), minlength=256)
    hits = np.bincount(level[g], minlength=256)
    n_sel = np.cumsum(total[::-1])[::-1].astype(np.float64)
    n_int = np.cumsum(hits[::-1])[::-1].astype(np.float64)
    n_gt = float(np.count_nonzero(g))

    empty_p = 1.0 if n_gt == 0 else 0.0
    precision = np.where(n_sel > 0, n_int / np.maximum(n_sel, 1.0), empty_p)
    if n_gt > 0:
        recall = n_int / n_gt
    else:
        recall = np.where(n_sel == 0, 1.0, 0.0)
    return PRCurve(precision=precision, recall=recall)


def mean_curve(curves: list[PRCurve]) -> PRCurve:
    """Pointwise mean over images (fixed-threshold averaging)."""
    if not curves:
        raise ValueError("cannot average an empty set of curves")
    return PRCurve(
        precision=np.mean([c.precision for c in curves], axis=0),
        recall=np.mean([c.recall for c in curves], axis=0),
    )


@dataclass
class ScoreReport:
    precision: float
    recall: float
    f_measure: float
    mae: float


def score_saliency(smap, gt, theta_sq: float = 0.3) -> ScoreReport:
    """Adaptive-threshold scores plus MAE for one map/mask pair."""
    mask = binarize_adaptive(smap)
    p, r = precision_recall(mask, gt)
    return ScoreReport(precision=p, recall=r,
                       f_measure=f_measure(p, r, theta_sq),
                       mae=mae(smap, gt))
