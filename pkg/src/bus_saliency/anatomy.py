"""Region connectivity and breast-anatomy layer decomposition.

Connectivity between regions carries two channels: a degree ``t`` (how
strongly connected, the max-min bottleneck over paths) and a confidence
``c`` (how trustworthy that path is, the weakest homogeneity along it).
Layers are grown from the left image boundary: each left-boundary region
roots a tree whose edges are damped by the depth offset from the root, and
every region joins the root it is most strongly connected to. Trees that
fail to span most of the image width are folded into the nearest layer by
depth, and the depth scale adapts until the layer count is workable.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import LayeringError
from .superpixel import RegionSet

# the adaptation never raises the depth scale beyond its conventional start
_SIGMA2_RAISE_CEIL = 0.2


def similarity(intensity_a: float, intensity_b: float, sigma1_sq: float) -> float:
    """Intensity affinity exp(-|dI| / sigma1^2), shared by every edge weight."""
    return float(np.exp(-abs(intensity_a - intensity_b) / sigma1_sq))


def nc_adjacency(graph: RegionSet, i: int, j: int, sigma1_sq: float,
                 sigma2_sq: float | None = None,
                 anchor_row: float | None = None) -> tuple[float, float]:
    """Edge weights (mu_t, mu_c) for stepping onto region ``i`` from ``j``.

    With a depth scale, mu_t is additionally damped by how far region ``i``
    sits from the anchor row (the tree root's depth). Without one the edge
    is purely intensity driven.
    """
    mu_t = similarity(graph.mean_intensity[i], graph.mean_intensity[j], sigma1_sq)
    if sigma2_sq is not None:
        if anchor_row is None:
            raise ValueError("depth-weighted edges need an anchor row")
        mu_t *= float(np.exp(-abs(graph.row[i] - anchor_row) / sigma2_sq))
    mu_c = float(min(graph.homogeneity[i], graph.homogeneity[j]))
    return mu_t, mu_c


@dataclass
class NCMap:
    """Propagated connectivity from a seed set."""

    t: np.ndarray        # (n,) degree channel
    c: np.ndarray        # (n,) confidence along the winning path
    parent: np.ndarray   # (n,) predecessor region, -1 for seeds and unreached
    seeds: np.ndarray


def nc_propagate(graph: RegionSet, seeds, sigma1_sq: float,
                 sigma2_sq: float | None = None,
                 anchor_row: float | None = None) -> NCMap:
    """Best-first propagation of (t, c) from ``seeds`` to every region.

    t is the classic widest-path value: the maximum over paths of the
    minimum edge mu_t. Among t-optimal paths the one with the largest
    confidence c (minimum edge mu_c) wins, ties falling to the smaller
    region id. A plain best-first pass is not enough for that second
    criterion, so the search keeps the Pareto frontier of (t, c) labels per
    region: a label is expanded unless some earlier label at the same
    region was at least as good in both channels. Labels pop in
    lexicographically decreasing (t, c) order, which makes the first label
    accepted at a region its final answer.
    """
    n = graph.n
    if sigma2_sq is not None and anchor_row is None:
        raise ValueError("depth-weighted propagation needs an anchor row")
    seeds = np.asarray(sorted(int(s) for s in set(np.asarray(seeds).tolist())))
    if seeds.size == 0:
        raise ValueError("need at least one seed region")
    if seeds.min() < 0 or seeds.max() >= n:
        raise ValueError("seed id out of range")

    t_out = np.zeros(n)
    c_out = np.zeros(n)
    parent = np.full(n, -1, dtype=np.int64)
    settled = np.zeros(n, dtype=bool)
    max_c = np.full(n, -1.0)  # best confidence accepted so far per region

    inten = graph.mean_intensity
    homog = graph.homogeneity
    rows = graph.row

    heap = []
    for s in seeds:
        heapq.heappush(heap, (-1.0, -1.0, int(s), -1))

    while heap:
        neg_t, neg_c, node, pred = heapq.heappop(heap)
        t, c = -neg_t, -neg_c
        if c <= max_c[node]:
            continue  # dominated: an earlier label had >= t and >= c
        if not settled[node]:
            settled[node] = True
            t_out[node] = t
            c_out[node] = c
            parent[node] = pred
        max_c[node] = c
        for nbr in graph.adjacency[node]:
            nbr = int(nbr)
            mu_t = similarity(inten[nbr], inten[node], sigma1_sq)
            if sigma2_sq is not None:
                mu_t *= float(np.exp(-abs(rows[nbr] - anchor_row) / sigma2_sq))
            cand_t = min(t, mu_t)
            cand_c = min(c, min(homog[nbr], homog[node]))
            if cand_c > max_c[nbr]:
                heapq.heappush(heap, (-cand_t, -cand_c, nbr, node))
    return NCMap(t=t_out, c=c_out, parent=parent, seeds=seeds)


@dataclass
class Layer:
    """One anatomical layer: a group of regions claimed by a boundary root."""

    regions: np.ndarray
    root_region: int
    root_row: float
    weight: float = 1.0
    part: str = "LM"          # LT / LM / LB after foreground weighting
    dark_flag: int = 0        # 1 dark, 0 normal, -1 bright and smooth
    z_local: tuple[float, float, float] | None = None


@dataclass
class LayerModel:
    layers: list[Layer] = field(default_factory=list)
    layer_of: np.ndarray = None   # (n,) region -> layer index
    sigma2_sq: float = 0.2
    fallback: bool = False

    @property
    def layer_num(self) -> int:
        return len(self.layers)

    def weights_per_region(self) -> np.ndarray:
        w = np.empty(self.layer_of.size)
        for idx, layer in enumerate(self.layers):
            w[self.layer_of == idx] = layer.weight
        return w


def _region_columns(graph: RegionSet) -> np.ndarray:
    """(n, width) bool table of which pixel columns each region touches."""
    h, w = graph.label_grid.shape
    cols = np.zeros((graph.n, w), dtype=bool)
    col_idx = np.tile(np.arange(w), (h, 1))
    cols[graph.label_grid.reshape(-1), col_idx.reshape(-1)] = True
    return cols


def _grow_groups(graph: RegionSet, roots: np.ndarray, sigma1_sq: float,
                 sigma2_sq: float) -> dict[int, list[int]]:
    """Claim every region for the root with the strongest depth-damped path."""
    rows = graph.row
    order = sorted(roots.tolist(), key=lambda k: (rows[k], k))  # topmost wins ties
    best_t = np.full(graph.n, -1.0)
    best_c = np.full(graph.n, -1.0)
    owner = np.full(graph.n, -1, dtype=np.int64)
    for k in order:
        ncm = nc_propagate(graph, [k], sigma1_sq, sigma2_sq, anchor_row=float(rows[k]))
        better = (ncm.t > best_t) | ((ncm.t == best_t) & (ncm.c > best_c))
        owner[better] = k
        best_t = np.where(better, ncm.t, best_t)
        best_c = np.where(better, ncm.c, best_c)
    groups: dict[int, list[int]] = {}
    for region in range(graph.n):
        groups.setdefault(int(owner[region]), []).append(region)
    groups.pop(-1, None)  # disconnected from every root: none on sane graphs
    return groups


def _merge_narrow(groups: dict[int, list[int]], graph: RegionSet,
                  region_cols: np.ndarray, width_cover_frac: float) -> dict[int, list[int]]:
    """Fold groups that span too little width into their nearest layer.

    The narrowest group moves first, into the group whose root sits closest
    in depth; its columns count toward the absorber afterwards, so a
    cascade of thin bands can accumulate into a proper layer.
    """
    w = graph.label_grid.shape[1]
    need = width_cover_frac * w
    rows = graph.row
    cover = {k: region_cols[members].any(axis=0) for k, members in groups.items()}
    while len(groups) > 1:
        narrow = [(cover[k].sum(), rows[k], k) for k in groups if cover[k].sum() <= need]
        if not narrow:
            break
        _, _, victim = min(narrow)
        others = [k for k in groups if k != victim]
        target = min(others, key=lambda k: (abs(rows[k] - rows[victim]), rows[k], k))
        groups[target].extend(groups.pop(victim))
        cover[target] = cover[target] | cover.pop(victim)
    return groups


def _consolidate_similar(ordered: list[tuple[int, list[int]]], graph: RegionSet,
                         max_layers: int) -> list[tuple[int, list[int]]]:
    """Fold depth-adjacent groups with the closest mean intensity.

    Runs only while there are more groups than ``max_layers``. Boundary
    roots are denser than distinct tissue bands, so several stacked groups
    usually describe one band; the most similar adjacent pair is the safest
    to unify. The absorber is the heavier (more pixels) of the two.
    """
    counts = graph.pixel_count
    inten = graph.mean_intensity
    rows = graph.row

    def mass(members):
        return float(counts[members].sum())

    def typical_int(members):
        # median over member regions; a handful of outlier regions (a
        # lesion inside the band) must not shift the group's identity
        return float(np.median(inten[members]))

    ordered = list(ordered)
    while len(ordered) > max_layers:
        gaps = []
        for pos in range(len(ordered) - 1):
            a, b = ordered[pos][1], ordered[pos + 1][1]
            gaps.append((abs(typical_int(a) - typical_int(b)), pos))
        _, pos = min(gaps)
        (root_a, mem_a), (root_b, mem_b) = ordered[pos], ordered[pos + 1]
        if (mass(mem_b), -rows[root_b], -root_b) > (mass(mem_a), -rows[root_a], -root_a):
            root_a = root_b
        ordered[pos] = (root_a, mem_a + mem_b)
        del ordered[pos + 1]
    return ordered


def decompose_layers(graph: RegionSet, sigma1_sq: float = 0.5,
                     sigma2_sq_init: float = 0.2, sigma2_sq_min: float = 0.05,
                     sigma2_sq_max: float = 0.4, min_layers: int = 3,
                     max_layers: int = 5, max_adapt: int = 8,
                     width_cover_frac: float = 0.75) -> LayerModel:
    """Split the region graph into horizontal anatomy layers.

    The depth scale sigma2^2 starts at its conventional value and is
    stepped down by 0.05 while there are too many layers, or up (never past
    0.2) while there are too few, at most ``max_adapt`` recomputations. If
    the count still exceeds ``max_layers`` afterwards, depth-adjacent
    groups with near-identical mean intensity are folded together until it
    fits; too few layers are reported as-is rather than split by force.

    Raises LayeringError for graphs with fewer than 3 regions; callers fall
    back to a single full-image layer in that case.
    """
    if graph.n < 3:
        raise LayeringError(f"need at least 3 regions to layer, got {graph.n}")
    roots = graph.left_boundary_regions()
    region_cols = _region_columns(graph)

    def build(sigma2_sq: float) -> dict[int, list[int]]:
        groups = _grow_groups(graph, roots, sigma1_sq, sigma2_sq)
        return _merge_narrow(groups, graph, region_cols, width_cover_frac)

    sigma2 = sigma2_sq_init
    groups = build(sigma2)
    for _ in range(max_adapt):
        count = len(groups)
        if count > max_layers:
            stepped = np.clip(sigma2 - 0.05, sigma2_sq_min, sigma2_sq_max)
        elif count < min_layers and sigma2 < _SIGMA2_RAISE_CEIL - 1e-12:
            stepped = np.clip(sigma2 + 0.05, sigma2_sq_min, sigma2_sq_max)
        else:
            break
        if abs(stepped - sigma2) < 1e-12:
            break
        sigma2 = float(stepped)
        groups = build(sigma2)

    rows = graph.row
    ordered = sorted(groups.items(),
                     key=lambda kv: (float(np.mean(rows[kv[1]])), kv[0]))
    ordered = _consolidate_similar(ordered, graph, max_layers)
    ordered.sort(key=lambda kv: (float(np.mean(rows[kv[1]])), kv[0]))

    layers = []
    layer_of = np.full(graph.n, -1, dtype=np.int64)
    for idx, (root, members) in enumerate(ordered):
        members = np.asarray(sorted(members), dtype=np.int64)
        layer_of[members] = idx
        layers.append(Layer(regions=members, root_region=int(root),
                            root_row=float(rows[root])))
    return LayerModel(layers=layers, layer_of=layer_of, sigma2_sq=float(sigma2))


def single_layer_model(graph: RegionSet) -> LayerModel:
    """Fallback when layering is impossible: everything in one mid layer."""
    members = np.arange(graph.n, dtype=np.int64)
    layer = Layer(regions=members, root_region=0,
                  root_row=float(np.mean(graph.row)) if graph.n else 0.5,
                  weight=1.0, part="LM")
    return LayerModel(layers=[layer], layer_of=np.zeros(graph.n, dtype=np.int64),
                      sigma2_sq=0.2, fallback=True)
