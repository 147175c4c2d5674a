"""Score refinement on top of nearest-neighbor retrieval.

Step 1 sums ``max(0, cos)**p1`` over same-class entries among the top-k
neighbors. Step 2 adds ``max(0, head_cos)**p2`` from the classification head
to every candidate class. The prediction is the argmax of the result.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyNeighbors, InvalidParams
from .metrics import Prediction
from .retrieval import baseline_predict, top_k


@dataclass
class ClassScoreTable:
    scores: dict = field(default_factory=dict)
    from_neighbors: set = field(default_factory=set)
    from_head: set = field(default_factory=set)

    def score(self, class_id):
        return self.scores.get(class_id, 0.0)

    def best(self):
        """``(class_id, score)`` of the highest score, ties to the lower class."""
        return min(self.scores.items(), key=lambda kv: (-kv[1], kv[0]))


@dataclass(frozen=True)
class PostprocessConfig:
    neighbor_k: int = 5
    p1: float = 8.0
    p2: float = 12.0
    head_candidates: int = 5  # 0 restricts fusion to neighbor classes

    def __post_init__(self):
        if self.neighbor_k < 1 or self.head_candidates < 0:
            raise InvalidParams("neighbor_k must be >= 1 and head_candidates >= 0")
        if self.p1 < 1 or self.p2 < 1:
            raise InvalidParams("powers must be >= 1")


def _power(cos, p):
    # a negative cosine is no evidence at all, even under an even power
    return max(0.0, cos) ** p


def combine_neighbors(neighbors, p1=8.0):
    if not neighbors:
        raise EmptyNeighbors("no neighbors to combine")
    table = ClassScoreTable()
    for nb in neighbors:
        table.scores[nb.class_id] = table.score(nb.class_id) + _power(nb.cosine, p1)
        table.from_neighbors.add(nb.class_id)
    return table


def fuse_head_scores(table, head_scores, p2=12.0, head_candidates=5):
    head_scores = np.asarray(head_scores, dtype=np.float64)
    if head_scores.ndim != 1:
        raise DimensionMismatch("head scores must be a per-class vector")
    if table.scores and max(table.scores) >= head_scores.shape[0]:
        raise DimensionMismatch(
            f"class {max(table.scores)} has no head score (C={head_scores.shape[0]})")
    top_head = np.argsort(-head_scores, kind="stable")[:head_candidates]
    candidates = sorted(set(table.scores) | {int(c) for c in top_head})
    out = ClassScoreTable(from_neighbors=set(table.from_neighbors))
    for c in candidates:
        out.scores[c] = table.score(c) + _power(float(head_scores[c]), p2)
        out.from_head.add(c)
    return out


def predict_with_postprocessing(gallery, head_scores, query, cfg=None, query_id=""):
    """Neighbor combination, then head fusion when ``head_scores`` is given."""
    cfg = cfg or PostprocessConfig()
    neighbors = top_k(gallery, query, cfg.neighbor_k)
    table = combine_neighbors(neighbors, cfg.p1)
    if head_scores is not None:
        table = fuse_head_scores(table, head_scores, cfg.p2, cfg.head_candidates)
    class_id, score = table.best()
    return Prediction(query_id, class_id, score)


MODES = ("baseline", "pp1", "pp1+pp2")


def predict_many(gallery, queries, query_ids, mode="pp1+pp2", cfg=None, head_scores=None):
    """Predictions for every query row under one of ``MODES``.

    ``head_scores`` is a ``(num_queries, C)`` matrix and is required for
    ``pp1+pp2``.
    """
    if mode not in MODES:
        raise InvalidParams(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "pp1+pp2" and head_scores is None:
        raise InvalidParams("mode pp1+pp2 needs head scores")
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if len(query_ids) != queries.shape[0]:
        raise DimensionMismatch("one id per query row required")
    if head_scores is not None and mode == "pp1+pp2":
        head_scores = np.atleast_2d(np.asarray(head_scores, dtype=np.float64))
        if head_scores.shape[0] != queries.shape[0]:
            raise DimensionMismatch("one row of head scores per query required")
    out = []
    for i, (qid, q) in enumerate(zip(query_ids, queries)):
        if mode == "baseline":
            out.append(baseline_predict(gallery, q, qid))
        else:
            hs = head_scores[i] if mode == "pp1+pp2" else None
            out.append(predict_with_postprocessing(gallery, hs, q, cfg, qid))
    return out
