"""Vector utilities, a stable softmax cross-entropy, and a finite-difference
gradient used as the reference for every analytic gradient in the package."""

import numpy as np

from .errors import DimensionMismatch, TargetOutOfRange, ZeroVector

NORM_EPS = 1e-12


def l2_normalize(v, eps=NORM_EPS):
    """Return ``v / ||v||``. Raises ZeroVector when ``||v|| <= eps``."""
    v = np.asarray(v, dtype=np.float64)
    norm = np.sqrt(np.sum(v * v))
    if not norm > eps:
        raise ZeroVector(f"cannot normalize vector with norm {norm:g}")
    return v / norm


def l2_normalize_rows(m, eps=NORM_EPS):
    m = np.asarray(m, dtype=np.float64)
    norms = np.sqrt(np.sum(m * m, axis=-1, keepdims=True))
    if np.any(~(norms > eps)):
        raise ZeroVector("matrix contains a row with (near) zero norm")
    return m / norms


def row_norms(m):
    m = np.asarray(m, dtype=np.float64)
    return np.sqrt(np.sum(m * m, axis=-1))


def rowwise_dot(m, v):
    """Dot product of every row of ``m`` with ``v``.

    Uses an elementwise product followed by a per-row reduction so that
    identical rows always produce bit-identical results (BLAS gemv does not
    guarantee this).
    """
    return np.sum(m * v, axis=-1)


def cosine_sim(a, b):
    """Cosine of two unit vectors, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    # elementwise products commute exactly, so the sum is symmetric
    return float(np.clip(np.sum(a * b), -1.0, 1.0))


def log_softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - np.max(z, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def softmax_cross_entropy(logits, target):
    """Cross-entropy of ``softmax(logits)`` against a class index.

    Returns ``(loss, grad)`` where ``grad = softmax(logits) - onehot(target)``.
    """
    logits = np.asarray(logits, dtype=np.float64)
    n = logits.shape[-1]
    if not 0 <= target < n:
        raise TargetOutOfRange(f"target {target} not in [0, {n})")
    logp = log_softmax(logits)
    grad = np.exp(logp)
    grad[target] -= 1.0
    return float(-logp[target]), grad


def finite_diff_grad(f, x, eps=1e-5):
    """Central-difference gradient of scalar ``f`` at ``x`` (any shape)."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    g = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        f_plus = f(x)
        flat[i] = orig - eps
        f_minus = f(x)
        flat[i] = orig
        g[i] = (f_plus - f_minus) / (2.0 * eps)
    return grad


def relative_error(analytic, numeric):
    """Norm-wise relative error ``||a - n|| / max(||a||, ||n||)``."""
    a = np.ravel(analytic)
    n = np.ravel(numeric)
    denom = max(np.linalg.norm(a), np.linalg.norm(n))
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(a - n) / denom)
