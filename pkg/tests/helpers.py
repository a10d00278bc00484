"""Hand-assembled graphs, reference oracles and frozen phantom layouts.

Everything here is deliberately naive: the oracles recompute results by
exhaustive loops so the package implementations have something
independent to be compared against.
"""

from __future__ import annotations

import numpy as np

from bus_saliency.phantom import PhantomSpec, TumorSpec
from bus_saliency.superpixel import RegionSet

# Frozen synthetic layout used by the end-to-end tests: skin, subcutaneous
# fat, mammary tissue and chest-wall bands, with a hypoechoic ellipse
# sitting fully inside the third band.
PHANTOM_BANDS = [(0.26, 0.68), (0.19, 0.50), (0.30, 0.72), (0.25, 0.45)]
PHANTOM_TUMOR = dict(center=(0.5, 0.60), radii=(0.15, 0.105), intensity=0.02)


def tumor_phantom_spec(seed: int) -> PhantomSpec:
    return PhantomSpec(bands=list(PHANTOM_BANDS), tumor=TumorSpec(**PHANTOM_TUMOR),
                       speckle_sigma=0.05, seed=seed)


def clean_phantom_spec(seed: int) -> PhantomSpec:
    return PhantomSpec(bands=list(PHANTOM_BANDS), tumor=None,
                       speckle_sigma=0.05, seed=seed)


def make_graph(intensity, edges=(), centroid=None, homogeneity=None,
               border=None, counts=None, label_grid=None) -> RegionSet:
    """Build a RegionSet directly from per-region features.

    Defaults describe a vertical chain: region i sits at depth
    (i + 0.5) / n, every region is homogeneous, one pixel each, all on
    the border. The label grid is a 1-pixel-wide column unless given.
    """
    inten = np.asarray(intensity, dtype=np.float64)
    n = inten.size
    if centroid is None:
        centroid = np.stack([np.full(n, 0.5), (np.arange(n) + 0.5) / max(n, 1)],
                            axis=1)
    if label_grid is None:
        label_grid = np.arange(n, dtype=np.int32).reshape(n, 1)
    adj = [set() for _ in range(n)]
    for a, b in edges:
        adj[int(a)].add(int(b))
        adj[int(b)].add(int(a))
    return RegionSet(
        label_grid=np.asarray(label_grid, dtype=np.int32),
        mean_intensity=inten,
        centroid=np.asarray(centroid, dtype=np.float64),
        pixel_count=(np.asarray(counts, dtype=np.int64) if counts is not None
                     else np.ones(n, dtype=np.int64)),
        homogeneity=(np.asarray(homogeneity, dtype=np.float64)
                     if homogeneity is not None else np.ones(n)),
        border=(np.asarray(border, dtype=bool) if border is not None
                else np.ones(n, dtype=bool)),
        adjacency=[np.asarray(sorted(s), dtype=np.int64) for s in adj],
    )


def random_graph(rng: np.random.Generator, max_regions: int = 8) -> RegionSet:
    """Random connected-ish graph with random features, for oracle sweeps."""
    n = int(rng.integers(3, max_regions + 1))
    edges = {(i, int(rng.integers(0, i))) for i in range(1, n)}  # spanning tree
    extra = int(rng.integers(0, n))
    for _ in range(extra):
        a, b = rng.integers(0, n, size=2)
        if a != b:
            edges.add((max(int(a), int(b)), min(int(a), int(b))))
    border = np.zeros(n, dtype=bool)
    border[rng.integers(0, n)] = True
    return make_graph(rng.random(n), edges=edges,
                      centroid=rng.random((n, 2)),
                      homogeneity=rng.random(n), border=border)


def enumerate_nc(graph: RegionSet, seeds, sigma1_sq: float,
                 sigma2_sq: float | None = None,
                 anchor_row: float | None = None):
    """Reference (t, c) by walking every simple path from the seed set.

    Exponential; only for graphs of a handful of regions. Returns the
    lexicographic best (t, c) per region, zeros where unreachable.
    """
    inten = graph.mean_intensity
    homog = graph.homogeneity
    rows = graph.row
    best = [(-1.0, -1.0)] * graph.n

    def visit(node: int, t: float, c: float, seen: frozenset):
        if (t, c) > best[node]:
            best[node] = (t, c)
        for nbr in graph.adjacency[node]:
            nbr = int(nbr)
            if nbr in seen:
                continue
            mu = float(np.exp(-abs(inten[nbr] - inten[node]) / sigma1_sq))
            if sigma2_sq is not None:
                mu *= float(np.exp(-abs(rows[nbr] - anchor_row) / sigma2_sq))
            visit(nbr, min(t, mu), min(c, float(min(homog[nbr], homog[node]))),
                  seen | {nbr})

    for s in seeds:
        visit(int(s), 1.0, 1.0, frozenset({int(s)}))
    t = np.array([max(tc[0], 0.0) for tc in best])
    c = np.array([max(tc[1], 0.0) for tc in best])
    return t, c
