"""Cue-map construction: Z-curves, layer weighting passes, D, T and q."""

import numpy as np
import pytest

from bus_saliency.anatomy import Layer, LayerModel, single_layer_model
from bus_saliency.maps import (ZParams, _edge_weight, _initial_foreground,
                               adaptive_center, background_map, distance_map,
                               foreground_weights, global_z_params,
                               layer_z_params, rasterize, smoothness_weights,
                               z_value)
from bus_saliency.phantom import generate_phantom
from bus_saliency.pipeline import run_pipeline
from helpers import make_graph, tumor_phantom_spec


# ---------------------------------------------------------------- Z curve

def test_z_curve_hand_values():
    p = ZParams(0.2, 0.5, 0.8)
    assert z_value(0.2, p) == 1.0
    assert z_value(0.0, p) == 1.0
    assert z_value(0.81, p) == 0.0
    assert z_value(0.5, p) == pytest.approx(0.5, abs=1e-15)   # midpoint
    assert z_value(0.3, p) == pytest.approx(1.0 - 0.01 / 0.18, abs=1e-12)
    assert z_value(0.7, p) == pytest.approx(0.01 / 0.18, abs=1e-12)


def test_z_curve_degenerate_shapes():
    step = ZParams(0.4, 0.4, 0.4)          # c = a: step function
    assert z_value(0.4, step) == 1.0
    assert z_value(0.4 + 1e-12, step) == 0.0

    no_lower = ZParams(0.2, 0.2, 0.8)      # b = a: single quadratic piece
    assert z_value(0.3, no_lower) == pytest.approx(0.25 / 0.36, abs=1e-12)

    no_upper = ZParams(0.2, 0.8, 0.8)      # b = c: single quadratic piece
    assert z_value(0.5, no_upper) == pytest.approx(1.0 - 0.09 / 0.36, abs=1e-12)


def test_z_params_sanitized_not_errored():
    # c below a collapses into a step at a; b is clamped into [a, c]
    scrambled = ZParams(0.5, 0.9, 0.3)
    assert scrambled.ordered() == ZParams(0.5, 0.5, 0.5)
    assert z_value(0.49, scrambled) == 1.0
    assert z_value(0.51, scrambled) == 0.0


def test_z_curve_array_and_scalar_forms():
    p = ZParams(0.1, 0.4, 0.9)
    arr = z_value(np.array([0.0, 0.5, 1.0]), p)
    assert isinstance(arr, np.ndarray) and arr.shape == (3,)
    assert isinstance(z_value(0.5, p), float)
    assert arr[1] == z_value(0.5, p)


def test_z_curve_random_property_sweep():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        a, b, c = np.sort(rng.random(3))
        p = ZParams(float(a), float(b), float(c))
        grid = np.sort(rng.random(64))
        vals = z_value(grid, p)
        assert np.all(vals >= 0.0) and np.all(vals <= 1.0)
        assert np.all(np.diff(vals) <= 1e-12)            # non-increasing
        assert z_value(float(a), p) == 1.0
        assert z_value(min(float(c) + 1e-9, 1.0), p) <= 1e-6
        for x in (a, b, c):                              # continuity
            lo = z_value(max(float(x) - 1e-9, 0.0), p)
            hi = z_value(min(float(x) + 1e-9, 1.0), p)
            assert abs(hi - lo) < 1e-6


# ------------------------------------------------- percentile parameters

def test_global_params_on_even_decade():
    p = global_z_params(np.arange(0.1, 1.05, 0.1))
    assert p.a == pytest.approx(0.1, abs=1e-15)
    assert p.c == pytest.approx(0.5, abs=1e-12)          # 0.6 minus 0.1
    assert p.b == pytest.approx(0.25, abs=1e-12)         # mean of 0.1..0.4


def test_global_params_plain_percentile_variant():
    p = global_z_params(np.arange(0.1, 1.05, 0.1), cg_literal=False)
    assert p.c == pytest.approx(0.6, abs=1e-15)
    assert p.b == pytest.approx(0.3, abs=1e-12)          # mean of 0.1..0.5


def test_global_params_degenerate_and_fallback():
    p = global_z_params([0.7, 0.7, 0.7])
    assert (p.a, p.b, p.c) == (0.7, 0.7, 0.0)

    # no intensity sits below c: b falls back onto a
    p2 = global_z_params([0.5, 0.5, 0.5, 0.9])
    assert (p2.a, p2.b, p2.c) == (0.5, 0.5, 0.0)


def test_rank_is_ceiling_of_fraction():
    vals = np.arange(0.0, 1.05, 0.1)                     # 11 values
    p = global_z_params(vals, cg_literal=False)
    assert p.a == pytest.approx(0.1, abs=1e-15)          # rank ceil(1.1) = 2
    assert p.c == pytest.approx(0.6, abs=1e-15)          # rank ceil(6.6) = 7


def test_layer_params_have_no_offset():
    p = layer_z_params(np.arange(0.1, 1.05, 0.1))
    assert p.a == pytest.approx(0.1, abs=1e-15)
    assert p.c == pytest.approx(0.6, abs=1e-15)
    assert p.b == pytest.approx(0.3, abs=1e-12)


# ------------------------------------------------------ foreground passes

def _chain_model(graph, members_per_layer, root_rows=None):
    layers = []
    layer_of = np.full(graph.n, -1, dtype=np.int64)
    for idx, members in enumerate(members_per_layer):
        members = np.asarray(members, dtype=np.int64)
        layer_of[members] = idx
        root = int(members[0])
        row = (float(graph.row[root]) if root_rows is None
               else float(root_rows[idx]))
        layers.append(Layer(regions=members, root_region=root, root_row=row))
    return LayerModel(layers=layers, layer_of=layer_of, sigma2_sq=0.2)


def test_initial_pass_classifies_the_three_layer_kinds():
    inten = [0.1, 0.1, 0.3,      # layer 0: dark
             0.2, 0.45,          # layer 1: ordinary
             0.9, 0.95]          # layer 2: uniformly bright
    g = make_graph(inten)
    model = _chain_model(g, [[0, 1, 2], [3, 4], [5, 6]])
    zg = ZParams(0.1, 0.25, 0.4)
    fg = _initial_foreground(g, model, zg)

    dark, ordinary, bright = model.layers
    assert dark.dark_flag == 1
    # local curve is degenerate (a = b = c = 0.1): step at 0.1
    assert fg[0] == 1.0 and fg[1] == 1.0 and fg[2] == 0.0

    assert ordinary.dark_flag == 0
    assert fg[3] == pytest.approx(1.0 - 0.01 / 0.045, abs=1e-12)
    assert fg[4] == 0.0                                  # above global c
    assert ordinary.z_local == (0.1, 0.2, 0.4)           # locals clamped

    assert bright.dark_flag == -1
    assert fg[5] == 0.0 and fg[6] == 0.0


def test_edge_layer_weight_values():
    assert _edge_weight(5, 5) == 9.0
    assert _edge_weight(3, 5) == 1.0
    assert _edge_weight(1, 5) == 1.0
    assert _edge_weight(1, 4) == 1.0
    assert _edge_weight(4, 4) == 4.0


def test_dark_top_and_bottom_become_weighted_edge_parts():
    # five layers, two regions each; the outermost layers are dark
    inten = [0.25, 0.25, 0.5, 0.75, 0.5, 0.75, 0.5, 0.8125, 0.25, 0.25]
    g = make_graph(inten)
    model = _chain_model(g, [[0, 1], [2, 3], [4, 5], [6, 7], [8, 9]])
    w = foreground_weights(g, model, cg_literal=False)

    assert [l.part for l in model.layers] == ["LT", "LM", "LM", "LM", "LB"]
    mid = float(np.exp(-np.sqrt(5.0) / 6.0))             # loop covers 2..4
    assert model.layers[0].weight == 1.0                 # max((1-2)^2, 1)
    assert model.layers[4].weight == 9.0                 # max((5-2)^2, 1)
    for layer in model.layers[1:4]:
        assert layer.weight == pytest.approx(mid, abs=1e-12)

    # edge parts keep their step-curve 1.0; weight 9 is clipped at 1
    assert np.all(w[[0, 1, 8, 9]] == 1.0)
    assert np.all(w[2:8] <= 1.0)


def test_lone_dark_bottom_layer_is_demoted_to_ordinary():
    inten = [0.5, 0.75, 0.5, 0.75, 0.5, 0.75, 0.5, 0.75, 0.25, 0.25]
    g = make_graph(inten)
    model = _chain_model(g, [[0, 1], [2, 3], [4, 5], [6, 7], [8, 9]])
    w = foreground_weights(g, model, cg_literal=False)

    assert [l.dark_flag for l in model.layers] == [0, 0, 0, 0, 0]
    assert [l.part for l in model.layers] == ["LM"] * 5
    mid = float(np.exp(-np.sqrt(5.0) / 10.0))            # loop covers 1..5
    for layer in model.layers:
        assert layer.weight == pytest.approx(mid, abs=1e-12)
    # the demoted layer keeps full foreground: its intensities sit at the
    # global a, and the middle weight is the only attenuation
    assert w[8] == pytest.approx(mid, abs=1e-12)
    assert w[9] == pytest.approx(mid, abs=1e-12)


def test_all_middle_weight_matches_damped_formula():
    # one interior dark layer, nothing dark at the edges: the walks stop
    # immediately and all four layers share the damped middle weight
    inten = [0.5, 0.55, 0.6,
             0.25, 0.3, 0.6,
             0.5, 0.55, 0.6,
             0.5, 0.55, 0.6]
    g = make_graph(inten)
    model = _chain_model(g, [[0, 1, 2], [3, 4, 5], [6, 7, 8], [9, 10, 11]])
    foreground_weights(g, model, cg_literal=False)
    assert [l.dark_flag for l in model.layers] == [0, 1, 0, 0]
    for layer in model.layers:
        assert layer.part == "LM"
        assert layer.weight == pytest.approx(0.7788007830714049, abs=1e-12)


def test_deep_rooted_dark_middle_counts_as_shadow():
    inten = [0.5, 0.75, 0.25, 0.4, 0.5, 0.75]
    members = [[0, 1], [2, 3], [4, 5]]

    g1 = make_graph(inten)
    plain = _chain_model(g1, members, root_rows=[0.1, 0.5, 0.8])
    w_plain = foreground_weights(g1, plain, cg_literal=False)

    g2 = make_graph(inten)
    shadowed = _chain_model(g2, members, root_rows=[0.1, 0.7, 0.8])
    w_shadow = foreground_weights(g2, shadowed, cg_literal=False)

    assert plain.layers[1].dark_flag == 1
    assert shadowed.layers[1].dark_flag == 1
    mid = float(np.exp(-np.sqrt(3.0) / 6.0))
    # with the layer treated as shadow, the recomputed global curve starts
    # higher and the 0.4 region scores full foreground instead of the
    # partial quadratic value
    assert w_shadow[3] == pytest.approx(mid, abs=1e-12)
    assert w_plain[3] == pytest.approx(0.32 * mid, abs=1e-12)
    assert w_shadow[3] > w_plain[3]


def test_fallback_model_keeps_unit_weight():
    g = make_graph([0.3, 0.6, 0.9])
    model = single_layer_model(g)
    w = foreground_weights(g, model)
    assert model.layers[0].weight == 1.0
    assert w.shape == (3,)
    assert np.all((w >= 0.0) & (w <= 1.0))


# --------------------------------------------------- center and distance

def test_adaptive_center_symmetry_and_point_mass():
    assert adaptive_center(np.ones((6, 4))) == pytest.approx((0.5, 0.5))
    assert adaptive_center(np.zeros((6, 4))) == (0.5, 0.5)

    point = np.zeros((4, 5))
    point[1, 2] = 3.0
    assert adaptive_center(point) == (0.5, 0.375)

    corners = np.zeros((4, 5))
    corners[0, 0] = 1.0
    corners[3, 4] = 1.0
    cx, cy = adaptive_center(corners)
    assert (cx, cy) == (pytest.approx(0.5), pytest.approx(0.5))


def test_adaptive_center_literal_denominator_variant():
    point = np.zeros((4, 5))
    point[1, 2] = 1.0
    cx, cy = adaptive_center(point, literal_denominator=True)
    assert cx == pytest.approx(0.5 / 10.0, abs=1e-12)
    assert cy == pytest.approx(0.375 / 10.0, abs=1e-12)


def test_distance_decay_values_and_ordering():
    g = make_graph([0.5, 0.5, 0.5],
                   centroid=[[0.5, 0.5], [0.5, 0.6], [0.9, 0.9]])
    d = distance_map(g, (0.5, 0.5), sigma3_sq=0.1)
    assert d[0] == 1.0
    assert d[1] == pytest.approx(np.exp(-1.0), rel=1e-9)
    order = np.argsort([0.0, 0.1, np.hypot(0.4, 0.4)])
    assert np.all(np.diff(d[order]) <= 0.0)


# -------------------------------------------------------- background map

def test_background_decays_with_squared_connectivity():
    delta = 0.5 * np.log(2.0)                 # similarity exactly one half
    g = make_graph([0.2, 0.2 + delta], edges=[(0, 1)],
                   border=[True, False])
    model = single_layer_model(g)
    t = background_map(g, model)
    assert t[0] == 1.0                        # seed, homogeneous layer
    assert t[1] == pytest.approx(0.25, rel=1e-12)


def test_background_scales_with_layer_weight():
    delta = 0.5 * np.log(1.0 / 0.9)
    g = make_graph([0.2, 0.2 + delta], edges=[(0, 1)],
                   border=[True, False])
    model = single_layer_model(g)
    model.layers[0].weight = 0.5
    t = background_map(g, model)
    assert t[0] == pytest.approx(0.5, rel=1e-12)
    assert t[1] == pytest.approx(0.81 * 0.5, rel=1e-12)
    assert np.all(t <= 0.5 + 1e-15)           # bounded by the layer weight


def test_background_confidence_weighting_toggle():
    g = make_graph([0.2, 0.2], edges=[(0, 1)],
                   homogeneity=[1.0, 0.8], border=[True, False])
    model = single_layer_model(g)
    weighted = background_map(g, model)
    plain = background_map(g, model, confidence_weighted=False)
    assert plain[1] == pytest.approx(1.0, rel=1e-12)
    assert weighted[1] == pytest.approx(0.8 ** 2, rel=1e-12)


# ---------------------------------------------------- smoothness weights

def test_smoothness_is_symmetric_similarity_product():
    g = make_graph([0.4, 0.4, 0.9],
                   centroid=[[0.2, 0.5], [0.7, 0.5], [0.2, 0.1]])
    q = smoothness_weights(g)
    assert q[0, 0] == 1.0
    assert q[0, 1] == pytest.approx(np.exp(-1.0), rel=1e-9)   # distance 0.5
    assert np.array_equal(q, q.T)
    assert np.all((q > 0.0) & (q <= 1.0))


def test_rasterize_broadcasts_by_label():
    g = make_graph([0.0, 0.0], label_grid=[[0, 1], [1, 0]])
    grid = rasterize(g, np.array([0.25, 0.75]))
    assert grid.tolist() == [[0.25, 0.75], [0.75, 0.25]]


# ------------------------------------------------- phantom-level behavior

@pytest.fixture(scope="module")
def phantom_run():
    img, gt = generate_phantom(tumor_phantom_spec(seed=0))
    res = run_pipeline(img)
    overlap = np.bincount(res.graph.label_grid[gt.pixels],
                          minlength=res.graph.n)
    tumor_regions = overlap >= 0.5 * res.graph.pixel_count
    return res, tumor_regions


def test_cue_maps_are_bounded_and_finite(phantom_run):
    res, _ = phantom_run
    for cue in (res.foreground, res.distance, res.background):
        assert np.all(np.isfinite(cue))
        assert np.all((cue >= 0.0) & (cue <= 1.0))


def test_foreground_favors_the_hypoechoic_inclusion(phantom_run):
    res, tumor = phantom_run
    assert tumor.any() and (~tumor).any()
    assert (res.foreground[tumor].mean()
            > res.foreground[~tumor].mean())


def test_background_favors_the_border(phantom_run):
    res, tumor = phantom_run
    border = res.graph.border
    assert res.background[border].mean() > res.background[tumor].mean()
