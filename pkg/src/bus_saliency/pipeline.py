"""End-to-end pipeline: image in, saliency map and scores out.

``run_pipeline`` drives one loaded image through segmentation, layer
decomposition, cue maps and the interior-point solve. ``process_image``
adds file I/O around it, and ``batch_evaluate`` walks a directory,
pairing images with ``<stem>_GT`` masks and writing per-image, aggregate
and P-R curve CSVs. Any stage failure is re-raised as a
``PipelineStageError`` naming the stage, so batch runs can say which
image broke where.
"""

from __future__ import annotations

import csv
import multiprocessing
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .anatomy import LayerModel, decompose_layers, single_layer_model
from .config import PipelineConfig
from .errors import LayeringError, PipelineStageError
from .imaging import GrayImage, load_image, load_mask, write_gray
from .maps import (adaptive_center, background_map, distance_map,
                   foreground_weights, rasterize, smoothness_weights)
from .metrics import ScoreReport, mean_curve, pr_curve, score_saliency
from .solver import SolveResult, assemble_problem, solve_ipm
from .superpixel import RegionSet, build_region_graph, quick_shift_segment

IMAGE_SUFFIXES = (".png", ".pgm")


@dataclass
class PipelineResult:
    saliency: np.ndarray       # per-region values in [0, 1]
    saliency_map: np.ndarray   # per-pixel raster of the same
    graph: RegionSet
    model: LayerModel
    foreground: np.ndarray     # W per region
    distance: np.ndarray       # D per region
    background: np.ndarray     # T per region
    solve: SolveResult
    diagnostics: dict


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError(name, exc) from exc


def run_pipeline(image: GrayImage, cfg: PipelineConfig | None = None) -> PipelineResult:
    """Compute the saliency map of one image.

    A graph too small to layer falls back to a single full-image layer
    instead of failing; a solve that stops on the iteration cap is
    reported through the diagnostics, not raised.
    """
    cfg = cfg if cfg is not None else PipelineConfig()
    started = time.perf_counter()

    scale = cfg.resolved_intensity_scale(image.width, image.height)
    labels = _stage("segment", quick_shift_segment, image,
                    kernel_sigma=cfg.kernel_sigma, max_dist=cfg.max_dist,
                    intensity_scale=scale, min_region_px=cfg.min_region_px)
    graph = _stage("segment", build_region_graph, image, labels)

    try:
        model = _stage("layers", decompose_layers, graph,
                       sigma1_sq=cfg.sigma1_sq,
                       sigma2_sq_init=cfg.sigma2_sq_init,
                       sigma2_sq_min=cfg.sigma2_sq_min,
                       sigma2_sq_max=cfg.sigma2_sq_max,
                       min_layers=cfg.min_layers, max_layers=cfg.max_layers,
                       max_adapt=cfg.max_layer_adapt,
                       width_cover_frac=cfg.width_cover_frac)
    except PipelineStageError as exc:
        if not isinstance(exc.cause, LayeringError):
            raise
        model = single_layer_model(graph)

    w = _stage("foreground", foreground_weights, graph, model,
               cg_literal=cfg.cg_literal)
    w_grid = _stage("foreground", rasterize, graph, w)
    center = _stage("center", adaptive_center, w_grid,
                    literal_denominator=cfg.ac_literal_denominator)
    d = _stage("distance", distance_map, graph, center, sigma3_sq=cfg.sigma3_sq)
    t = _stage("background", background_map, graph, model,
               sigma1_sq=cfg.sigma1_sq,
               confidence_weighted=cfg.nc_confidence_weighted)
    q = _stage("smoothness", smoothness_weights, graph, sigma1_sq=cfg.sigma1_sq)

    problem = _stage("assemble", assemble_problem, w, d, t, q, graph.border,
                     alpha=cfg.alpha, gamma=cfg.gamma, eps_log=cfg.eps_log)
    solve = _stage("solve", solve_ipm, problem,
                   tol=cfg.solver_tol, max_iter=cfg.solver_max_iter,
                   compat_sum_row=cfg.compat_sum_row)
    smap = _stage("rasterize", rasterize, graph, solve.s)

    diagnostics = {
        "regions": graph.n,
        "layers": model.layer_num,
        "sigma2_sq": model.sigma2_sq,
        "layer_fallback": model.fallback,
        "center_x": center[0],
        "center_y": center[1],
        "iterations": solve.iterations,
        "converged": solve.converged,
        "residual": solve.residual,
        "objective": solve.objective,
        "mean_saliency": float(smap.mean()),
        "seconds": time.perf_counter() - started,
    }
    return PipelineResult(saliency=solve.s, saliency_map=smap, graph=graph,
                          model=model, foreground=w, distance=d, background=t,
                          solve=solve, diagnostics=diagnostics)


def _write_debug(result: PipelineResult, out_dir: Path, stem: str) -> None:
    # cue maps are already in [0, 1]; layer ids become an even gray ramp
    graph = result.graph
    write_gray(out_dir / f"{stem}_W.png", rasterize(graph, np.clip(result.foreground, 0.0, 1.0)))
    write_gray(out_dir / f"{stem}_D.png", rasterize(graph, np.clip(result.distance, 0.0, 1.0)))
    write_gray(out_dir / f"{stem}_T.png", rasterize(graph, np.clip(result.background, 0.0, 1.0)))
    num = max(result.model.layer_num - 1, 1)
    shade = result.model.layer_of.astype(np.float64) / num
    write_gray(out_dir / f"{stem}_layers.png", rasterize(graph, shade))


def process_image(image_path, cfg: PipelineConfig | None = None,
                  gt_path=None, out_dir=None,
                  emit_debug: bool = False) -> tuple[PipelineResult, ScoreReport | None]:
    """Load, run and optionally score/export one image file."""
    image_path = Path(image_path)
    image = _stage("load", load_image, image_path)
    result = run_pipeline(image, cfg)

    report = None
    if gt_path is not None:
        gt = _stage("load", load_mask, gt_path)
        if gt.pixels.shape != result.saliency_map.shape:
            raise PipelineStageError("load", ValueError(
                f"mask {gt_path} does not match image geometry"))
        theta = cfg.theta_sq if cfg is not None else PipelineConfig().theta_sq
        report = score_saliency(result.saliency_map, gt.pixels, theta_sq=theta)

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_gray(out_dir / f"{image_path.stem}_saliency.png", result.saliency_map)
        if emit_debug:
            _write_debug(result, out_dir, image_path.stem)
    return result, report


def find_gt(image_path: Path) -> Path | None:
    """Sibling ground-truth mask <stem>_GT.<ext>, if one exists."""
    for suffix in (image_path.suffix, *IMAGE_SUFFIXES):
        cand = image_path.with_name(f"{image_path.stem}_GT{suffix}")
        if cand.exists():
            return cand
    return None


def _list_images(directory: Path) -> list[Path]:
    out = []
    for p in sorted(directory.iterdir()):
        if p.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        if p.stem.endswith("_GT") or p.stem.endswith("_saliency"):
            continue
        out.append(p)
    return out


def _batch_worker(args):
    image_path, cfg, out_dir, emit_debug = args
    gt_path = find_gt(image_path)
    result, report = process_image(image_path, cfg, gt_path=gt_path,
                                   out_dir=out_dir, emit_debug=emit_debug)
    curve = None
    if gt_path is not None:
        gt = load_mask(gt_path)
        curve = pr_curve(result.saliency_map, gt.pixels)
    return {
        "file": image_path.name,
        "mean_saliency": float(result.saliency_map.mean()),
        "report": report,
        "curve": curve,
        "diagnostics": result.diagnostics,
    }


def batch_evaluate(directory, cfg: PipelineConfig | None = None,
                   out_dir=None, jobs: int = 1,
                   emit_debug: bool = False) -> dict:
    """Process every image in a directory and write the evaluation CSVs.

    Images are processed independently (optionally in parallel) but
    always aggregated in sorted filename order, so reruns give identical
    files regardless of the job count. Returns the aggregate row.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ValueError(f"not a directory: {directory}")
    images = _list_images(directory)
    if not images:
        raise ValueError(f"no {'/'.join(IMAGE_SUFFIXES)} images in {directory}")
    out_dir = Path(out_dir) if out_dir is not None else directory / "results"
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = [(p, cfg, out_dir, emit_debug) for p in images]
    if jobs > 1:
        with multiprocessing.Pool(jobs) as pool:
            rows = pool.map(_batch_worker, tasks)
    else:
        rows = [_batch_worker(t) for t in tasks]

    with open(out_dir / "results.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["file", "mean_saliency", "precision", "recall",
                         "f_measure", "mae", "converged"])
        for row in rows:
            rep = row["report"]
            scored = ["", "", "", ""] if rep is None else [
                f"{rep.precision:.6f}", f"{rep.recall:.6f}",
                f"{rep.f_measure:.6f}", f"{rep.mae:.6f}"]
            writer.writerow([row["file"], f"{row['mean_saliency']:.6f}",
                             *scored, int(row["diagnostics"]["converged"])])

    scored_rows = [r for r in rows if r["report"] is not None]
    aggregate = {
        "images": len(rows),
        "scored": len(scored_rows),
        "mean_saliency": float(np.mean([r["mean_saliency"] for r in rows])),
        "converged_frac": float(np.mean(
            [r["diagnostics"]["converged"] for r in rows])),
    }
    if scored_rows:
        for name in ("precision", "recall", "f_measure", "mae"):
            aggregate[name] = float(np.mean(
                [getattr(r["report"], name) for r in scored_rows]))
    with open(out_dir / "aggregate.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(aggregate))
        writer.writerow([f"{v:.6f}" if isinstance(v, float) else v
                         for v in aggregate.values()])

    if scored_rows:
        curve = mean_curve([r["curve"] for r in scored_rows])
        with open(out_dir / "pr_curve.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["threshold", "precision", "recall"])
            for t in range(256):
                writer.writerow([t, f"{curve.precision[t]:.6f}",
                                 f"{curve.recall[t]:.6f}"])
    return aggregate
