"""Per-region cue maps feeding the saliency objective.

Three cues are produced over the region graph: a foreground map W built
from layer-wise Z-shaped intensity weighting (tumors are hypoechoic, so
low intensity earns high weight), a distance map D decaying away from the
foreground's weight center, and a background map T grown from the image
border through region connectivity. A dense pairwise similarity table
supplies the smoothness coupling between regions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .anatomy import LayerModel, nc_propagate
from .superpixel import RegionSet


@dataclass(frozen=True)
class ZParams:
    """Breakpoints of the Z-shaped weighting curve, a <= b <= c intended."""

    a: float
    b: float
    c: float

    def ordered(self) -> "ZParams":
        # degenerate inputs (c below a, b outside [a, c]) collapse to the
        # nearest well-formed shape instead of erroring; c = a becomes a
        # step function at a
        c = max(self.c, self.a)
        b = min(max(self.b, self.a), c)
        return ZParams(self.a, b, c)


def z_value(intensity, params: ZParams):
    """Z-shaped decreasing weight: 1 up to a, quadratic falloff, 0 past c.

    Accepts scalars or arrays. Continuous at all three breakpoints; when
    b collapses onto a or c the dead quadratic branch is skipped, matching
    the limit of the generic formula.
    """
    p = params.ordered()
    arr = np.atleast_1d(np.asarray(intensity, dtype=float))
    out = np.zeros(arr.shape)
    out[arr <= p.a] = 1.0
    if p.c > p.a:
        span = p.c - p.a
        if p.b > p.a:
            mid = (arr > p.a) & (arr <= p.b)
            out[mid] = 1.0 - (arr[mid] - p.a) ** 2 / (span * (p.b - p.a))
        if p.c > p.b:
            upper = (arr > p.b) & (arr <= p.c)
            out[upper] = (arr[upper] - p.c) ** 2 / (span * (p.c - p.b))
    if np.ndim(intensity) == 0:
        return float(out[0])
    return out


def _rank_value(sorted_vals: np.ndarray, num: int, den: int) -> float:
    # value at rank ceil(num/den * n) of the ascending list, 1-indexed
    n = sorted_vals.size
    rank = max(-((-num * n) // den), 1)
    return float(sorted_vals[rank - 1])


def global_z_params(intensities, cg_literal: bool = True) -> ZParams:
    """Image-wide Z breakpoints from the region intensity distribution.

    a sits at the 10th percentile, c at the 60th, b is the mean of the
    values below c. With ``cg_literal`` the 60th-percentile value has a
    subtracted from it first; the resulting c can drop below a, which the
    Z evaluation absorbs as a step shape.
    """
    vals = np.sort(np.asarray(intensities, dtype=float))
    a = _rank_value(vals, 1, 10)
    c = _rank_value(vals, 6, 10)
    if cg_literal:
        c = c - a
    below = vals[vals < c]
    b = float(below.mean()) if below.size else a
    return ZParams(a, b, c)


def layer_z_params(intensities) -> ZParams:
    """Per-layer Z breakpoints; same ranks as the global rule, no offset."""
    vals = np.sort(np.asarray(intensities, dtype=float))
    a = _rank_value(vals, 1, 10)
    c = _rank_value(vals, 6, 10)
    below = vals[vals < c]
    b = float(below.mean()) if below.size else a
    return ZParams(a, b, c)


def _edge_weight(i: int, layer_num: int) -> float:
    # top and bottom layers are amplified the further they sit from the
    # vertical middle, never below 1
    return float(max((i - layer_num // 2) ** 2, 1))


def _initial_foreground(graph: RegionSet, model: LayerModel,
                        zg: ZParams) -> np.ndarray:
    """First foreground pass: classify each layer and weight its regions.

    A layer whose dark mass b_i sits within a tenth of the global spread
    above a is flagged dark (1) and keeps its local curve; a layer whose
    10th percentile exceeds the global c is uniformly bright (-1) and
    contributes nothing; everything else is ordinary (0) and uses the
    global curve. The (possibly clamped) local breakpoints are stored on
    the layer for the second pass.
    """
    inten = graph.mean_intensity
    fg = np.zeros(graph.n)
    for layer in model.layers:
        members = layer.regions
        local = layer_z_params(inten[members])
        a_i, b_i, c_i = local.a, local.b, local.c
        if b_i - zg.a < 0.1 * (zg.c - zg.a):
            layer.dark_flag = 1
            fg[members] = z_value(inten[members], local)
        elif a_i > zg.c:
            layer.dark_flag = -1
            fg[members] = 0.0
        else:
            a_i = min(zg.a, a_i)
            c_i = min(zg.c, c_i)
            layer.dark_flag = 0
            fg[members] = z_value(inten[members], zg)
        layer.z_local = (a_i, b_i, c_i)
    return fg


def foreground_weights(graph: RegionSet, model: LayerModel,
                       cg_literal: bool = True) -> np.ndarray:
    """Final per-region foreground map W, in [0, 1].

    Dark layers at the image top or bottom are split off as probe-contact
    and far-field parts with quadratic weights as long as another dark
    layer exists; a lone dark bottom layer is instead treated as ordinary
    tissue. The remaining middle layers share one damped weight, and
    their curves are re-derived with shadow regions (dark layers rooted
    in the bottom third) counted as bright. Layer weights, parts and
    flags are recorded on ``model`` as a side effect.
    """
    inten = graph.mean_intensity
    zg = global_z_params(inten, cg_literal)
    fg = _initial_foreground(graph, model, zg)
    layers = model.layers
    num = model.layer_num

    def another_dark(i: int) -> bool:
        return any(l.dark_flag == 1
                   for j, l in enumerate(layers, start=1) if j != i)

    loop_s, loop_e = 1, num
    half = (num + 1) // 2
    for i in range(num, half - 1, -1):
        layer = layers[i - 1]
        if layer.dark_flag == 1 and another_dark(i):
            layer.weight = _edge_weight(i, num)
            layer.part = "LB"
            loop_e -= 1
            continue
        if layer.dark_flag == 1 and i == num:
            # the only dark layer in the image is not a separable shadow;
            # demote it and let the global curve weight it
            layer.dark_flag = 0
            fg[layer.regions] = z_value(inten[layer.regions], zg)
        break
    for i in range(1, half + 1):
        if i > loop_e:
            break
        layer = layers[i - 1]
        if layer.dark_flag == 1 and another_dark(i):
            layer.weight = _edge_weight(i, num)
            layer.part = "LT"
            loop_s += 1
            continue
        break

    if loop_s <= loop_e:
        shadowed = inten.copy()
        for i in range(loop_s, loop_e + 1):
            layer = layers[i - 1]
            if layer.dark_flag == 1 and layer.root_row > 2.0 / 3.0:
                shadowed[layer.regions] = 1.0
        zg2 = global_z_params(shadowed, cg_literal)
        middle_w = 1.0 if model.fallback else float(
            np.exp(-np.sqrt(num) / (2.0 * (loop_e - loop_s + 1))))
        for i in range(loop_s, loop_e + 1):
            layer = layers[i - 1]
            members = layer.regions
            a_i, _, c_i = layer.z_local
            if layer.dark_flag == 1:
                a2 = max(zg2.a, a_i)
                c2 = max(zg2.c, c_i)
                fg[members] = z_value(inten[members],
                                      ZParams(a2, (a2 + c2) / 2.0, c2))
            elif layer.dark_flag == 0:
                a2 = min(zg2.a, a_i)
                c2 = min(zg2.c, c_i)
                vals = inten[members]
                below = vals[vals < c2]
                b2 = float(below.mean()) if below.size else a2
                fg[members] = z_value(vals, ZParams(a2, b2, c2))
            else:
                fg[members] = 0.0
            layer.part = "LM"
            layer.weight = middle_w

    w = fg * model.weights_per_region()
    return np.clip(w, 0.0, 1.0)


def rasterize(graph: RegionSet, values: np.ndarray) -> np.ndarray:
    """Broadcast per-region values onto the pixel grid."""
    return np.asarray(values, dtype=float)[graph.label_grid]


def adaptive_center(w_grid: np.ndarray,
                    literal_denominator: bool = False) -> tuple[float, float]:
    """Weight center of the per-pixel foreground map, normalized coords.

    A zero map falls back to the image center. The literal-denominator
    variant divides by the coordinate sums instead of the weight total
    and exists only for auditing.
    """
    h, w = w_grid.shape
    xs = (np.arange(w) + 0.5) / w
    ys = (np.arange(h) + 0.5) / h
    total = float(w_grid.sum())
    if total <= 0.0:
        return (0.5, 0.5)
    mx = float((w_grid * xs[None, :]).sum())
    my = float((w_grid * ys[:, None]).sum())
    if literal_denominator:
        return (mx / float(xs.sum() * h), my / float(ys.sum() * w))
    return (mx / total, my / total)


def distance_map(graph: RegionSet, center: tuple[float, float],
                 sigma3_sq: float = 0.1) -> np.ndarray:
    """Per-region distance cue exp(-d / sigma3^2) from the weight center."""
    diff = graph.centroid - np.asarray(center, dtype=float)[None, :]
    dist = np.sqrt((diff ** 2).sum(axis=1))
    return np.exp(-dist / sigma3_sq)


def background_map(graph: RegionSet, model: LayerModel,
                   sigma1_sq: float = 0.5,
                   confidence_weighted: bool = True) -> np.ndarray:
    """Per-region background cue T grown from the border regions.

    Connectivity is propagated depth-free from every border region; the
    squared connectedness is then scaled by the owning layer's weight.
    With ``confidence_weighted`` the degree channel is multiplied by the
    path confidence first, so connections routed through blurry mixed
    regions count less.
    """
    seeds = np.nonzero(graph.border)[0]
    ncm = nc_propagate(graph, seeds, sigma1_sq)
    nc = ncm.t * ncm.c if confidence_weighted else ncm.t
    t = nc ** 2 * model.weights_per_region()
    return np.clip(t, 0.0, 1.0)


def smoothness_weights(graph: RegionSet, sigma1_sq: float = 0.5) -> np.ndarray:
    """Dense symmetric similarity q_ij over all region pairs."""
    inten = graph.mean_intensity
    pos = graph.centroid
    di = np.abs(inten[:, None] - inten[None, :])
    dp = np.sqrt(((pos[:, None, :] - pos[None, :, :]) ** 2).sum(axis=2))
    return np.exp(-di / sigma1_sq) * np.exp(-dp / sigma1_sq)
