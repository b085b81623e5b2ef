"""Anisotropic-diffusion kernel-matrix features for face liveness detection.

The library covers the full pipeline: diffuse grayscale clips, turn each
diffused clip into a fixed-size kernel-matrix feature, fuse those with
externally supplied deep vectors through a two-kernel learner, and score
splits with FAR/FRR/HTER reporting. The `livediff` CLI wraps the same
stages.
"""

from .diffusion import DiffusionConfig, conductance, diffuse, diffuse_step, flux_diagnostic
from .dkfeatures import (
    DKFeature,
    FeatureMatrix,
    Reducer,
    clip_to_matrix,
    extract_dk,
    fit_reducer,
    kernel_matrix,
    load_reducer,
    median_heuristic_gamma,
    pairwise_sq_dists,
    reduce,
    save_reducer,
)
from .errors import (
    DimensionMismatch,
    DuplicateId,
    InsufficientSamples,
    InvalidDimensions,
    LivediffError,
    MalformedFile,
    MissingClass,
    MissingDeepFeature,
    MissingFile,
    ParseError,
    SingleClass,
    UnsupportedFormat,
)
from .featureio import read_features, write_features
from .gmkl import (
    GmklConfig,
    GmklModel,
    TrainingSet,
    classify,
    decision,
    load_model,
    save_model,
    score_samples,
    solve_dual,
    train,
)
from .imaging import Clip, GrayImage, decode_image, encode_pgm, resize
from .metrics import EvalReport, ScoredSample, evaluate, report_text, select_threshold
from .pipeline import (
    Manifest,
    ManifestEntry,
    PipelineConfig,
    load_manifest,
    parse_config,
    run_all,
    run_eval,
    run_predict,
    run_train,
)

__version__ = "0.1.0"

__all__ = [
    "Clip",
    "DKFeature",
    "DiffusionConfig",
    "DimensionMismatch",
    "DuplicateId",
    "EvalReport",
    "FeatureMatrix",
    "GmklConfig",
    "GmklModel",
    "GrayImage",
    "InsufficientSamples",
    "InvalidDimensions",
    "LivediffError",
    "MalformedFile",
    "Manifest",
    "ManifestEntry",
    "MissingClass",
    "MissingDeepFeature",
    "MissingFile",
    "ParseError",
    "PipelineConfig",
    "Reducer",
    "ScoredSample",
    "SingleClass",
    "TrainingSet",
    "UnsupportedFormat",
    "classify",
    "clip_to_matrix",
    "conductance",
    "decision",
    "decode_image",
    "diffuse",
    "diffuse_step",
    "encode_pgm",
    "evaluate",
    "extract_dk",
    "fit_reducer",
    "flux_diagnostic",
    "kernel_matrix",
    "load_manifest",
    "load_model",
    "load_reducer",
    "median_heuristic_gamma",
    "pairwise_sq_dists",
    "parse_config",
    "read_features",
    "reduce",
    "report_text",
    "resize",
    "run_all",
    "run_eval",
    "run_predict",
    "run_train",
    "save_model",
    "save_reducer",
    "score_samples",
    "select_threshold",
    "solve_dual",
    "train",
    "write_features",
]
