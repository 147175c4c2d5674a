"""Global Average Precision and top-1 accuracy for recognition predictions.

Ground truth maps each query id to a class index, or to ``DISTRACTOR``
(``None``) for queries that contain no landmark.
"""

import math
from dataclasses import dataclass

from .errors import DuplicatePrediction, InvalidParams, UnknownQueryId

DISTRACTOR = None


@dataclass(frozen=True)
class Prediction:
    query_id: str
    class_id: int
    confidence: float


def _check(predictions, truth):
    seen = set()
    for p in predictions:
        if p.query_id not in truth:
            raise UnknownQueryId(f"query {p.query_id!r} has no ground truth")
        if p.query_id in seen:
            raise DuplicatePrediction(f"query {p.query_id!r} predicted twice")
        if not math.isfinite(p.confidence):
            raise InvalidParams(f"non-finite confidence for {p.query_id!r}")
        seen.add(p.query_id)
    m = sum(1 for c in truth.values() if c is not DISTRACTOR)
    if m < 1:
        raise InvalidParams("ground truth has no landmark queries")
    return m


def gap(predictions, truth):
    """Micro-averaged precision over the confidence-sorted predictions.

    Ties in confidence are ordered by ascending query id. Every wrong
    prediction, including any prediction on a distractor, lowers the
    precision of the correct ones ranked after it.
    """
    m = _check(predictions, truth)
    ranked = sorted(predictions, key=lambda p: (-p.confidence, p.query_id))
    correct = 0
    total = 0.0
    for i, p in enumerate(ranked, start=1):
        expected = truth[p.query_id]
        if expected is not DISTRACTOR and p.class_id == expected:
            correct += 1
            total += correct / i
    return total / m


def accuracy(predictions, truth):
    """Fraction of landmark queries predicted correctly; missing ones are wrong."""
    m = _check(predictions, truth)
    hits = sum(1 for p in predictions
               if truth[p.query_id] is not DISTRACTOR and p.class_id == truth[p.query_id])
    return hits / m
