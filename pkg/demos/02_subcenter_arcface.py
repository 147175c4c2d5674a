"""
Sub-center ArcFace head and its gradients
=========================================

A class scores an embedding by its best-matching sub-center. During training
the target angle is widened by that class's margin. The analytic gradients
are checked against central finite differences.
"""

import math

import numpy as np

from dynarc.arcface import ArcFaceHead, class_cosines, forward_logits, loss_and_grad
from dynarc.gradcheck import run_suite

# one class with two sub-centers along the axes
head = ArcFaceHead(np.array([[[1.0, 0.0], [0.0, 1.0]]]), margins=[0.0])
cos, which = class_cosines(head, np.array([0.6, 0.8]))
print("class cosine", cos[0], "from sub-center", which[0])

# margin applied to the target: cos(theta + m), scaled by s
head = ArcFaceHead(np.array([[[1.0, 0.0]], [[0.0, 1.0]]]), margins=[0.25, 0.0], scale=30.0)
logits = forward_logits(head, np.array([0.8, 0.6]), target=0)
print("target logit", logits[0], "=", 30 * math.cos(math.acos(0.8) + 0.25))

rng = np.random.default_rng(0)
w = rng.standard_normal((10, 3, 16))
w /= np.linalg.norm(w, axis=2, keepdims=True)
e = rng.standard_normal((8, 16))
e /= np.linalg.norm(e, axis=1, keepdims=True)
head = ArcFaceHead(w, np.linspace(0.05, 0.5, 10))
loss, grad_e, grad_w = loss_and_grad(head, e, rng.integers(0, 10, 8))
print(f"batch loss {loss:.4f}; grad shapes {grad_e.shape} {grad_w.shape}")

err_e, err_w = run_suite(n_instances=20, seed=1)
print(f"finite-difference check over 20 instances: embeddings {err_e:.1e}, weights {err_w:.1e}")
