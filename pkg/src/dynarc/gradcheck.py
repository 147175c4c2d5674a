"""Finite-difference verification of the ArcFace loss gradients."""

from dataclasses import dataclass

import numpy as np

from .arcface import arcface_loss, subcenter_cosines
from .numerics import finite_diff_grad, l2_normalize_rows, relative_error

GAP_TOL = 1e-3


@dataclass
class Instance:
    weights: np.ndarray
    margins: np.ndarray
    scale: float
    embeddings: np.ndarray
    targets: np.ndarray


def _well_conditioned(inst):
    """Reject sub-center ties, margin-branch boundaries and |cos| near 1,
    where the loss is not differentiable or the difference quotient is
    unreliable."""
    w, e, y = inst.weights, inst.embeddings, inst.targets
    rows = np.arange(e.shape[0])
    if w.shape[1] > 1:
        c, k, d = w.shape
        raw = (e @ w.reshape(c * k, d).T).reshape(-1, c, k)
        top2 = np.sort(raw, axis=2)[:, :, -2:]
        if np.any(top2[:, :, 1] - top2[:, :, 0] < GAP_TOL):
            return False
    cos, _ = subcenter_cosines(w, e)
    cos_y = cos[rows, y]
    m = inst.margins[y]
    if np.any(np.abs(cos_y + np.cos(m)) < GAP_TOL):
        return False
    return not np.any(np.abs(cos) > 1.0 - GAP_TOL)


def random_instance(rng, max_classes=10, max_subcenters=3, max_dim=32, max_batch=8,
                    scale=30.0, max_margin=0.6):
    """Draw instances until one is away from every non-smooth point."""
    while True:
        c = int(rng.integers(2, max_classes + 1))
        k = int(rng.integers(1, max_subcenters + 1))
        d = int(rng.integers(2, max_dim + 1))
        b = int(rng.integers(1, max_batch + 1))
        inst = Instance(
            l2_normalize_rows(rng.standard_normal((c, k, d))),
            rng.uniform(0.0, max_margin, size=c),
            scale,
            l2_normalize_rows(rng.standard_normal((b, d))),
            rng.integers(0, c, size=b),
        )
        if _well_conditioned(inst):
            return inst


def check_instance(inst, eps=1e-5):
    """Relative errors ``(embeddings, weights)`` of analytic vs central
    differences."""
    _, g_e, g_w = arcface_loss(inst.weights, inst.margins, inst.scale,
                               inst.embeddings, inst.targets)
    fd_e = finite_diff_grad(
        lambda e: arcface_loss(inst.weights, inst.margins, inst.scale, e, inst.targets)[0],
        inst.embeddings, eps)
    fd_w = finite_diff_grad(
        lambda w: arcface_loss(w, inst.margins, inst.scale, inst.embeddings, inst.targets)[0],
        inst.weights, eps)
    return relative_error(g_e, fd_e), relative_error(g_w, fd_w)


def run_suite(n_instances=50, seed=0, eps=1e-5):
    """Max relative errors over ``n_instances`` random instances."""
    rng = np.random.default_rng(seed)
    worst_e = worst_w = 0.0
    for _ in range(n_instances):
        err_e, err_w = check_instance(random_instance(rng), eps)
        worst_e = max(worst_e, err_e)
        worst_w = max(worst_w, err_w)
    return worst_e, worst_w
