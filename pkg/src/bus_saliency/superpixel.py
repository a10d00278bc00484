"""Mode-seeking superpixel segmentation and the region graph built on it.

Pixels live in a 3-D feature space (x, y, scale * intensity). Each pixel is
linked to its nearest neighbor (feature distance, within ``max_dist``) whose
Parzen density estimate is higher; trees rooted at local density maxima
become regions. The Parzen estimate uses a Gaussian kernel of width
``kernel_sigma`` truncated at a 3 sigma square window and is left
unnormalized, so on flat patches interior pixels tie exactly and the
deterministic tie rule (lower linear index wins) collapses them into one
region. Label fragments that are not 4-connected are split afterwards, and
undersized regions are absorbed by their most similar neighbor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imaging import GrayImage

_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def _parzen_density(feat_i: np.ndarray, kernel_sigma: float) -> np.ndarray:
    """Unnormalized Gaussian kernel density over a truncated square window."""
    h, w = feat_i.shape
    radius = int(np.ceil(3.0 * kernel_sigma))
    inv = 1.0 / (2.0 * kernel_sigma * kernel_sigma)
    density = np.zeros((h, w), dtype=np.float64)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if abs(dy) >= h or abs(dx) >= w:
                continue
            ys = slice(max(dy, 0), min(h + dy, h))
            xs = slice(max(dx, 0), min(w + dx, w))
            yq = slice(max(-dy, 0), min(h - dy, h))
            xq = slice(max(-dx, 0), min(w - dx, w))
            di = feat_i[ys, xs] - feat_i[yq, xq]
            d_sq = dy * dy + dx * dx + di * di
            density[ys, xs] += np.exp(-d_sq * inv)
    return density


def _link_parents(feat_i: np.ndarray, density: np.ndarray, max_dist: float) -> np.ndarray:
    """Nearest denser neighbor per pixel; -1 where the pixel is a mode root.

    Density ties are broken toward the lower linear index, distance ties the
    same way, which keeps the forest deterministic bit for bit.
    """
    h, w = feat_i.shape
    radius = int(np.ceil(max_dist))
    max_sq = max_dist * max_dist
    idx = np.arange(h * w, dtype=np.int64).reshape(h, w)
    best_d = np.full((h, w), np.inf)
    best_q = np.full((h, w), -1, dtype=np.int64)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dy == 0 and dx == 0:
                continue
            if abs(dy) >= h or abs(dx) >= w:
                continue
            ys = slice(max(dy, 0), min(h + dy, h))
            xs = slice(max(dx, 0), min(w + dx, w))
            yq = slice(max(-dy, 0), min(h - dy, h))
            xq = slice(max(-dx, 0), min(w - dx, w))
            di = feat_i[ys, xs] - feat_i[yq, xq]
            d_sq = dy * dy + dx * dx + di * di
            dens_p = density[ys, xs]
            dens_q = density[yq, xq]
            idx_p = idx[ys, xs]
            idx_q = idx[yq, xq]
            denser = (dens_q > dens_p) | ((dens_q == dens_p) & (idx_q < idx_p))
            ok = denser & (d_sq <= max_sq)
            better = ok & ((d_sq < best_d[ys, xs])
                           | ((d_sq == best_d[ys, xs]) & (idx_q < best_q[ys, xs])))
            best_d[ys, xs] = np.where(better, d_sq, best_d[ys, xs])
            best_q[ys, xs] = np.where(better, idx_q, best_q[ys, xs])
    return best_q.reshape(-1)


def _resolve_roots(parent: np.ndarray) -> np.ndarray:
    """Follow parent links to their roots by repeated pointer doubling."""
    root = np.where(parent < 0, np.arange(parent.size, dtype=np.int64), parent)
    while True:
        nxt = root[root]
        if np.array_equal(nxt, root):
            return root
        root = nxt


def _split_disconnected(labels: np.ndarray) -> np.ndarray:
    """Re-label so every region is one 4-connected component."""
    out = np.full(labels.shape, -1, dtype=np.int64)
    next_id = 0
    slices = ndimage.find_objects(labels + 1)
    for lab, sl in enumerate(slices):
        if sl is None:
            continue
        mask = labels[sl] == lab
        comp, n = ndimage.label(mask, structure=_FOUR_CONN)
        out[sl] = np.where(mask, comp + next_id - 1, out[sl])
        next_id += n
    return out


def _merge_small(labels: np.ndarray, intensity: np.ndarray, min_px: int) -> np.ndarray:
    """Fold regions below ``min_px`` into the most similar adjacent region."""
    labels = labels.copy()
    while True:
        n = labels.max() + 1
        if n <= 1:
            break
        counts = np.bincount(labels.reshape(-1), minlength=n)
        sums = np.bincount(labels.reshape(-1), weights=intensity.reshape(-1), minlength=n)
        means = sums / np.maximum(counts, 1)
        small = np.flatnonzero((counts > 0) & (counts < min_px))
        if small.size == 0:
            break
        # smallest first, then lowest id, so the merge order is reproducible
        target = small[np.lexsort((small, counts[small]))][0]
        pairs = _adjacent_pairs(labels)
        nbrs = np.concatenate([pairs[pairs[:, 0] == target, 1],
                               pairs[pairs[:, 1] == target, 0]])
        if nbrs.size == 0:
            break
        nbrs = np.unique(nbrs)
        gap = np.abs(means[nbrs] - means[target])
        into = nbrs[np.lexsort((nbrs, gap))][0]
        labels[labels == target] = into
        # compact ids so bincounts stay small
        remap = -np.ones(n, dtype=np.int64)
        live = np.unique(labels)
        remap[live] = np.arange(live.size)
        labels = remap[labels]
    return labels


def _adjacent_pairs(labels: np.ndarray) -> np.ndarray:
    """Unique (lo, hi) label pairs that share a 4-neighbor pixel edge."""
    right = np.stack([labels[:, :-1].reshape(-1), labels[:, 1:].reshape(-1)], axis=1)
    down = np.stack([labels[:-1, :].reshape(-1), labels[1:, :].reshape(-1)], axis=1)
    pairs = np.concatenate([right, down], axis=0)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    if pairs.size == 0:
        return pairs.reshape(0, 2)
    pairs = np.sort(pairs, axis=1)
    return np.unique(pairs, axis=0)


def _relabel_raster_order(labels: np.ndarray) -> np.ndarray:
    flat = labels.reshape(-1)
    first = np.full(labels.max() + 1, flat.size, dtype=np.int64)
    np.minimum.at(first, flat, np.arange(flat.size, dtype=np.int64))
    order = np.argsort(first, kind="stable")
    remap = np.empty_like(order)
    remap[order] = np.arange(order.size)
    return remap[labels]


def quick_shift_segment(image: GrayImage, kernel_sigma: float = 3.0,
                        max_dist: float = 10.0, intensity_scale: float | None = None,
                        min_region_px: int = 8) -> np.ndarray:
    """Segment an image into superpixel labels (raster-ordered ids).

    ``intensity_scale`` defaults to 10 * min(width, height) / 256 so the
    intensity axis carries the same weight relative to geometry at every
    resolution.
    """
    if kernel_sigma <= 0 or max_dist <= 0:
        raise ValueError("kernel_sigma and max_dist must be positive")
    pix = image.pixels
    if intensity_scale is None:
        intensity_scale = 10.0 * min(image.width, image.height) / 256.0
    feat_i = pix * intensity_scale
    density = _parzen_density(feat_i, kernel_sigma)
    parent = _link_parents(feat_i, density, max_dist)
    roots = _resolve_roots(parent)
    _, labels = np.unique(roots, return_inverse=True)
    labels = labels.reshape(pix.shape)
    labels = _split_disconnected(labels)
    labels = _merge_small(labels, pix, min_region_px)
    return _relabel_raster_order(labels).astype(np.int32)


@dataclass
class RegionSet:
    """Per-region features plus the adjacency structure of the partition."""

    label_grid: np.ndarray       # (h, w) int32
    mean_intensity: np.ndarray   # (n,)
    centroid: np.ndarray         # (n, 2) as (x, y), normalized pixel centers
    pixel_count: np.ndarray      # (n,)
    homogeneity: np.ndarray      # (n,) 1 - clamp(std / 0.5, 0, 1)
    border: np.ndarray           # (n,) bool, region touches the image frame
    adjacency: list[np.ndarray]  # sorted neighbor ids per region

    @property
    def n(self) -> int:
        return int(self.mean_intensity.size)

    @property
    def row(self) -> np.ndarray:
        """Normalized centroid rows, the depth coordinate."""
        return self.centroid[:, 1]

    @property
    def height(self) -> int:
        return int(self.label_grid.shape[0])

    @property
    def width(self) -> int:
        return int(self.label_grid.shape[1])

    def left_boundary_regions(self) -> np.ndarray:
        return np.unique(self.label_grid[:, 0])


def region_std(values: np.ndarray) -> float:
    """Population standard deviation, the spread measure behind homogeneity."""
    return float(np.std(values))


def homogeneity_from_std(std: np.ndarray) -> np.ndarray:
    """Map intensity spread to [0, 1] confidence; flat regions score 1."""
    return 1.0 - np.clip(np.asarray(std, dtype=np.float64) / 0.5, 0.0, 1.0)


def build_region_graph(image: GrayImage, labels: np.ndarray) -> RegionSet:
    """Aggregate per-region features and 4-neighbor adjacency."""
    pix = image.pixels
    if labels.shape != pix.shape:
        raise ValueError("label grid does not match image geometry")
    flat = labels.reshape(-1).astype(np.int64)
    n = int(flat.max()) + 1
    counts = np.bincount(flat, minlength=n)
    if np.any(counts == 0):
        raise ValueError("label ids must be contiguous")
    s1 = np.bincount(flat, weights=pix.reshape(-1), minlength=n)
    s2 = np.bincount(flat, weights=(pix * pix).reshape(-1), minlength=n)
    mean = s1 / counts
    var = np.maximum(s2 / counts - mean * mean, 0.0)
    std = np.sqrt(var)

    h, w = pix.shape
    cols = np.tile((np.arange(w) + 0.5) / w, (h, 1))
    rows = np.repeat((np.arange(h) + 0.5) / h, w).reshape(h, w)
    cx = np.bincount(flat, weights=cols.reshape(-1), minlength=n) / counts
    cy = np.bincount(flat, weights=rows.reshape(-1), minlength=n) / counts

    border = np.zeros(n, dtype=bool)
    for edge in (labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]):
        border[np.unique(edge)] = True

    pairs = _adjacent_pairs(labels)
    adjacency: list[np.ndarray] = [np.empty(0, dtype=np.int64) for _ in range(n)]
    if pairs.size:
        both = np.concatenate([pairs, pairs[:, ::-1]], axis=0)
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        starts = np.searchsorted(both[:, 0], np.arange(n + 1))
        for i in range(n):
            adjacency[i] = both[starts[i]:starts[i + 1], 1].copy()

    return RegionSet(
        label_grid=labels.astype(np.int32),
        mean_intensity=mean,
        centroid=np.stack([cx, cy], axis=1),
        pixel_count=counts,
        homogeneity=homogeneity_from_std(std),
        border=border,
        adjacency=adjacency,
    )
