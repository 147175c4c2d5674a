"""
Ensembling by feature concatenation
===================================

Concatenating unit-norm features from several models and renormalizing gives
a cosine equal to the mean of the per-model cosines. Head outputs are
averaged directly.
"""

import numpy as np

from dynarc.ensemble import ModelOutputs, average_head_scores, concat_features

rng = np.random.default_rng(3)


def unit(n, d):
    x = rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


dims = [64, 64, 32]
models = [ModelOutputs(unit(2, d), rng.random((2, 5)), f"model{i}") for i, d in enumerate(dims)]
fused = concat_features(models)
per_model = [m.features[0] @ m.features[1] for m in models]
print("per-model cosines", np.round(per_model, 4))
print("fused cosine     ", round(fused[0] @ fused[1], 12), "mean", round(np.mean(per_model), 12))
print("averaged head scores\n", np.round(average_head_scores(models), 3))
