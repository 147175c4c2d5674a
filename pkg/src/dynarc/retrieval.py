"""Exact brute-force cosine search over a labelled gallery."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyGallery, InvalidParams, NonNormalizedInput
from .metrics import Prediction
from .numerics import row_norms, rowwise_dot

UNIT_TOL = 1e-6


@dataclass(frozen=True)
class Neighbor:
    row_index: int
    cosine: float
    class_id: int


@dataclass
class Gallery:
    """Unit-norm feature rows with a class label and string id per row."""

    features: np.ndarray
    labels: np.ndarray
    ids: list = field(default=None)

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        self.labels = np.asarray(self.labels, dtype=np.int64)
        n = self.features.shape[0]
        if n == 0 or self.features.size == 0:
            raise EmptyGallery("gallery has no rows")
        if self.ids is None:
            self.ids = [str(i) for i in range(n)]
        if self.labels.shape != (n,) or len(self.ids) != n:
            raise DimensionMismatch("labels and ids must have one entry per row")
        if np.any(np.abs(row_norms(self.features) - 1.0) > UNIT_TOL):
            raise NonNormalizedInput("gallery rows must be unit norm")
        self.features.setflags(write=False)

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    def cosines(self, query):
        query = np.asarray(query, dtype=np.float64)
        if query.shape != (self.dim,):
            raise DimensionMismatch(f"query shape {query.shape}, gallery dim {self.dim}")
        return np.clip(rowwise_dot(self.features, query), -1.0, 1.0)


def top_k(gallery, query, k):
    """The ``k`` most similar rows, cosine descending, ties by row index."""
    if k < 1:
        raise InvalidParams(f"k must be >= 1, got {k}")
    if gallery is None or len(gallery) == 0:
        raise EmptyGallery("gallery has no rows")
    cos = gallery.cosines(query)
    order = np.argsort(-cos, kind="stable")[:k]
    return [Neighbor(int(i), float(cos[i]), int(gallery.labels[i])) for i in order]


def baseline_predict(gallery, query, query_id=""):
    """Top-1 neighbor's class, with its cosine as the confidence."""
    best = top_k(gallery, query, 1)[0]
    return Prediction(query_id, best.class_id, best.cosine)
