"""Sub-center ArcFace with class-size dependent margins, plus the retrieval,
postprocessing, ensembling and GAP evaluation pipeline for landmark
recognition."""

from .arcface import ArcFaceHead, class_cosines, forward_logits, head_scores, loss_and_grad
from .data import TrainConfig, stratified_kfold, synth_longtail, train_toy
from .ensemble import ModelOutputs, average_head_scores, concat_features
from .margins import MarginSchedule, calibrate, margin_for, margins_from_counts
from .metrics import DISTRACTOR, Prediction, accuracy, gap
from .postprocess import (ClassScoreTable, PostprocessConfig, combine_neighbors,
                          fuse_head_scores, predict_with_postprocessing)
from .retrieval import Gallery, Neighbor, baseline_predict, top_k

__version__ = "0.1.0"

__all__ = [
    "ArcFaceHead",
    "class_cosines",
    "forward_logits",
    "head_scores",
    "loss_and_grad",
    "TrainConfig",
    "stratified_kfold",
    "synth_longtail",
    "train_toy",
    "ModelOutputs",
    "average_head_scores",
    "concat_features",
    "MarginSchedule",
    "calibrate",
    "margin_for",
    "margins_from_counts",
    "DISTRACTOR",
    "Prediction",
    "accuracy",
    "gap",
    "ClassScoreTable",
    "PostprocessConfig",
    "combine_neighbors",
    "fuse_head_scores",
    "predict_with_postprocessing",
    "Gallery",
    "Neighbor",
    "baseline_predict",
    "top_k",
]
