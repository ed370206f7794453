"""Traffic-sign recognition benchmark toolkit: seven HOG-based
preprocessing pipelines, an SMO-trained RBF-SVM, and the harness that
compares them, exposed over HTTP with a thin command-line client."""

__version__ = "0.1.0"

from .hog import HogConfig, hog_descriptor
from .imgcore import ColorSpace, Image, decode_ppm, encode_ppm, resize_bilinear
from .metrics import EvalReport, confusion, scores
from .pipeline import PIPELINE_ORDER, PipelineKind, apply_pipeline, pipeline_from_name
from .svm import (
    DEFAULT_C,
    DEFAULT_GAMMA,
    MulticlassSvmModel,
    TrainConfig,
    load_model,
    predict,
    predict_batch,
    save_model,
    smo_train,
    train_multiclass,
)

__all__ = [
    "__version__",
    "ColorSpace",
    "Image",
    "decode_ppm",
    "encode_ppm",
    "resize_bilinear",
    "HogConfig",
    "hog_descriptor",
    "PipelineKind",
    "PIPELINE_ORDER",
    "apply_pipeline",
    "pipeline_from_name",
    "TrainConfig",
    "MulticlassSvmModel",
    "DEFAULT_C",
    "DEFAULT_GAMMA",
    "smo_train",
    "train_multiclass",
    "predict",
    "predict_batch",
    "save_model",
    "load_model",
    "EvalReport",
    "confusion",
    "scores",
]
