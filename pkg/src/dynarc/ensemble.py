"""Fusing several models: concatenated features and averaged head scores."""

from dataclasses import dataclass

import numpy as np

from .errors import MissingHeadScores, NonNormalizedInput, RowCountMismatch, ShapeMismatch
from .numerics import l2_normalize_rows, row_norms

UNIT_TOL = 1e-6


@dataclass
class ModelOutputs:
    features: np.ndarray
    head_scores: np.ndarray = None
    model_id: str = ""


def concat_features(models):
    """Concatenate per-model unit rows and renormalize.

    With unit blocks the row norm is ``sqrt(M)``, so the cosine between two
    fused rows is the mean of the per-model cosines.
    """
    if not models:
        raise ShapeMismatch("need at least one model")
    blocks = [np.atleast_2d(np.asarray(m.features, dtype=np.float64)) for m in models]
    n = blocks[0].shape[0]
    for m, blk in zip(models, blocks):
        if blk.shape[0] != n:
            raise RowCountMismatch(f"model {m.model_id!r} has {blk.shape[0]} rows, expected {n}")
        if np.any(np.abs(row_norms(blk) - 1.0) > UNIT_TOL):
            raise NonNormalizedInput(f"model {m.model_id!r} has non-unit feature rows")
    if len(blocks) == 1:
        return blocks[0].copy()
    return l2_normalize_rows(np.concatenate(blocks, axis=1))


def average_head_scores(models):
    if not models:
        raise ShapeMismatch("need at least one model")
    missing = [m.model_id for m in models if m.head_scores is None]
    if missing:
        raise MissingHeadScores(f"models without head scores: {missing}")
    scores = [np.asarray(m.head_scores, dtype=np.float64) for m in models]
    if any(s.shape != scores[0].shape for s in scores):
        raise ShapeMismatch(f"head score shapes differ: {[s.shape for s in scores]}")
    return np.mean(np.stack(scores), axis=0)
