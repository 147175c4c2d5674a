"""Sub-center ArcFace head with per-class additive angular margins.

Each class owns ``K`` unit-norm sub-center vectors. The class cosine of an
embedding is the maximum over its sub-centers; during training the target
class angle is widened by that class's margin before scaling and softmax.
Gradients follow the argmax sub-center only (ties go to the lowest index).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidParams, TargetOutOfRange
from .numerics import l2_normalize_rows, log_softmax, row_norms

UNIT_TOL = 1e-6


@dataclass
class ArcFaceHead:
    """Weights are ``(C, K, D)``; ``margins`` has one entry per class."""

    weights: np.ndarray
    margins: np.ndarray
    scale: float = 30.0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.margins = np.asarray(self.margins, dtype=np.float64)
        if self.weights.ndim != 3 or self.weights.shape[1] < 1:
            raise InvalidParams(f"weights must be (C, K>=1, D), got {self.weights.shape}")
        if self.margins.shape != (self.weights.shape[0],):
            raise DimensionMismatch(
                f"{self.margins.shape[0] if self.margins.ndim else 0} margins for "
                f"{self.weights.shape[0]} classes")
        if np.any(self.margins < 0) or np.any(self.margins >= math.pi / 2):
            raise InvalidParams("margins must lie in [0, pi/2)")
        if not self.scale > 0:
            raise InvalidParams(f"scale must be positive, got {self.scale}")
        if np.any(np.abs(row_norms(self.weights) - 1.0) > UNIT_TOL):
            raise InvalidParams("sub-center weights must be unit norm")

    @property
    def num_classes(self):
        return self.weights.shape[0]

    @property
    def num_subcenters(self):
        return self.weights.shape[1]

    @property
    def embed_dim(self):
        return self.weights.shape[2]

    @classmethod
    def random(cls, num_classes, embed_dim, margins, num_subcenters=3, scale=30.0,
               rng=None):
        rng = np.random.default_rng(rng)
        w = rng.standard_normal((num_classes, num_subcenters, embed_dim))
        return cls(l2_normalize_rows(w), margins, scale)

    def renormalize(self):
        """Project every sub-center back onto the unit sphere (after a step)."""
        self.weights = l2_normalize_rows(self.weights)


def _check_dim(head, e):
    if e.shape[-1] != head.embed_dim:
        raise DimensionMismatch(
            f"embedding dim {e.shape[-1]} != head dim {head.embed_dim}")


def subcenter_cosines(weights, embeddings):
    """Max-over-sub-center cosines for a batch.

    Returns ``(cos, argk)``, both ``(B, C)``.
    """
    c, k, d = weights.shape
    raw = (embeddings @ weights.reshape(c * k, d).T).reshape(-1, c, k)
    argk = np.argmax(raw, axis=2)
    cos = np.take_along_axis(raw, argk[:, :, None], axis=2)[:, :, 0]
    return cos, argk


def class_cosines(head, e):
    """Per-class cosine of a single embedding and the winning sub-center index."""
    e = np.asarray(e, dtype=np.float64)
    _check_dim(head, e)
    raw = np.sum(head.weights * e, axis=2)
    argk = np.argmax(raw, axis=1)
    cos = raw[np.arange(head.num_classes), argk]
    return np.clip(cos, -1.0, 1.0), argk


def head_scores(head, e):
    """Inference scores: plain class cosines, no margin and no scale."""
    return class_cosines(head, e)[0]


def head_scores_batch(head, embeddings):
    embeddings = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
    _check_dim(head, embeddings)
    return np.clip(subcenter_cosines(head.weights, embeddings)[0], -1.0, 1.0)


def margin_logit(cos, m):
    """``cos(theta + m)`` with the hard-region fallback, and its derivative
    with respect to ``cos``. Works elementwise on arrays."""
    cos = np.asarray(cos, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    cos_m, sin_m = np.cos(m), np.sin(m)
    sin = np.sqrt(np.maximum(0.0, 1.0 - cos * cos))
    main = cos > -cos_m  # cos(pi - m) == -cos(m)
    phi = np.where(main, cos * cos_m - sin * sin_m, cos - m * sin_m)
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.where(sin > 0, cos * sin_m / sin, 0.0)
    dphi = np.where(main, cos_m + slope, 1.0)
    return phi, dphi


def forward_logits(head, e, target):
    e = np.asarray(e, dtype=np.float64)
    if not 0 <= target < head.num_classes:
        raise TargetOutOfRange(f"target {target} not in [0, {head.num_classes})")
    cos, _ = class_cosines(head, e)
    logits = head.scale * cos
    phi, _ = margin_logit(cos[target], head.margins[target])
    logits[target] = head.scale * phi
    return logits


def arcface_loss(weights, margins, scale, embeddings, targets):
    """Mean margin-softmax loss and gradients from raw arrays.

    No normalization is applied inside, so the returned gradients are the
    exact derivatives of the formula as evaluated on the given arrays.
    Returns ``(loss, grad_embeddings, grad_weights)``.
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.intp)
    b = embeddings.shape[0]
    c, k, _ = weights.shape
    rows = np.arange(b)

    raw, argk = subcenter_cosines(weights, embeddings)
    cos = np.clip(raw, -1.0, 1.0)
    phi, dphi = margin_logit(cos[rows, targets], margins[targets])
    logits = scale * cos
    logits[rows, targets] = scale * phi

    logp = log_softmax(logits)
    loss = -np.mean(logp[rows, targets])

    dlogits = np.exp(logp)
    dlogits[rows, targets] -= 1.0
    dlogits /= b
    dcos = scale * dlogits
    dcos[rows, targets] *= dphi
    dcos[raw != cos] = 0.0

    selected = weights[np.arange(c)[None, :], argk]  # (B, C, D)
    grad_e = np.einsum("bc,bcd->bd", dcos, selected)
    grad_w = np.zeros_like(weights)
    for j in range(k):
        grad_w[:, j, :] = (dcos * (argk == j)).T @ embeddings
    return float(loss), grad_e, grad_w


def loss_and_grad(head, embeddings, targets):
    embeddings = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
    targets = np.asarray(targets)
    _check_dim(head, embeddings)
    if embeddings.shape[0] != targets.shape[0] or embeddings.shape[0] == 0:
        raise DimensionMismatch("need one target per embedding row and B >= 1")
    if np.any(targets < 0) or np.any(targets >= head.num_classes):
        raise TargetOutOfRange("target index out of range")
    return arcface_loss(head.weights, head.margins, head.scale, embeddings, targets)
