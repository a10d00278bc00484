"""Anatomy-aware tumor saliency estimation for breast ultrasound images."""

from .anatomy import (Layer, LayerModel, NCMap, decompose_layers, nc_propagate,
                      single_layer_model)
from .config import PipelineConfig, load_config, parse_config_text
from .imaging import (BinaryMask, GrayImage, load_image, load_mask, write_gray,
                      write_mask)
from .maps import (ZParams, adaptive_center, background_map, distance_map,
                   foreground_weights, global_z_params, layer_z_params,
                   rasterize, smoothness_weights, z_value)
from .metrics import (PRCurve, ScoreReport, binarize_adaptive, f_measure, mae,
                      mean_curve, pr_curve, precision_recall, score_saliency)
from .phantom import PhantomSpec, TumorSpec, generate_phantom, parse_phantom_text
from .pipeline import PipelineResult, batch_evaluate, process_image, run_pipeline
from .solver import (SaliencyProblem, SolveResult, assemble_problem,
                     evaluate_objective, objective_gradient, oracle_solve,
                     smoothness_hessian, solve_ipm)
from .superpixel import RegionSet, build_region_graph, quick_shift_segment

__all__ = [
    "BinaryMask",
    "GrayImage",
    "Layer",
    "LayerModel",
    "NCMap",
    "PRCurve",
    "PhantomSpec",
    "PipelineConfig",
    "PipelineResult",
    "RegionSet",
    "SaliencyProblem",
    "ScoreReport",
    "SolveResult",
    "TumorSpec",
    "ZParams",
    "adaptive_center",
    "assemble_problem",
    "background_map",
    "batch_evaluate",
    "binarize_adaptive",
    "build_region_graph",
    "decompose_layers",
    "distance_map",
    "evaluate_objective",
    "f_measure",
    "foreground_weights",
    "generate_phantom",
    "global_z_params",
    "layer_z_params",
    "load_config",
    "load_image",
    "load_mask",
    "mae",
    "mean_curve",
    "nc_propagate",
    "objective_gradient",
    "oracle_solve",
    "parse_config_text",
    "parse_phantom_text",
    "pr_curve",
    "precision_recall",
    "process_image",
    "quick_shift_segment",
    "rasterize",
    "run_pipeline",
    "score_saliency",
    "single_layer_model",
    "smoothness_hessian",
    "smoothness_weights",
    "solve_ipm",
    "write_gray",
    "write_mask",
    "z_value",
]
