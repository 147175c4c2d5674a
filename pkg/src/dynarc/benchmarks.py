"""Synthetic query/gallery benchmark for the postprocessing ladder.

Classes consist of several clusters (as with photos of one landmark from
different viewpoints) and a fraction of gallery labels is corrupted. A head
whose sub-centers sit near the true cluster centers stands in for an ArcFace
head trained on a larger, cleaner set.
"""

from dataclasses import dataclass

import numpy as np

from .arcface import ArcFaceHead, head_scores_batch
from .data import longtail_sizes, rng_stream
from .metrics import gap
from .numerics import l2_normalize_rows
from .postprocess import PostprocessConfig, predict_many
from .retrieval import Gallery


@dataclass
class RetrievalBenchmark:
    gallery: Gallery
    queries: np.ndarray
    query_ids: list
    truth: dict
    head: ArcFaceHead


def synth_retrieval_benchmark(seed, num_classes=100, clusters=3, dim=32,
                              gallery_size=2000, zipf_exponent=1.0,
                              queries_per_class=5, noise_sigma=0.12,
                              label_noise=0.15, head_noise=0.1):
    centers = l2_normalize_rows(
        rng_stream(seed, "bench-centers").standard_normal((num_classes, clusters, dim)))
    rng = rng_stream(seed, "bench-samples")

    def draw(labels):
        which = rng.integers(0, clusters, size=labels.size)
        noise = rng.standard_normal((labels.size, dim))
        return l2_normalize_rows(centers[labels, which] + noise_sigma * noise)

    sizes = longtail_sizes(num_classes, zipf_exponent, gallery_size)
    g_true = np.repeat(np.arange(num_classes), sizes)
    g_feats = draw(g_true)
    flip = rng.random(g_true.size) < label_noise
    shift = rng.integers(1, num_classes, size=g_true.size)
    g_labels = np.where(flip, (g_true + shift) % num_classes, g_true)

    q_true = np.repeat(np.arange(num_classes), queries_per_class)
    q_feats = draw(q_true)
    q_ids = [f"q{i:05d}" for i in range(q_true.size)]

    w = centers + head_noise * rng_stream(seed, "bench-head").standard_normal(centers.shape)
    head = ArcFaceHead(l2_normalize_rows(w), np.zeros(num_classes))
    return RetrievalBenchmark(
        Gallery(g_feats, g_labels, [f"g{i:05d}" for i in range(g_true.size)]),
        q_feats, q_ids, dict(zip(q_ids, q_true.tolist())), head)


def run_ladder(bench, cfg=None):
    """GAP of baseline, pp1 and pp1+pp2 predictions on one benchmark."""
    scores = head_scores_batch(bench.head, bench.queries)
    out = {}
    for mode in ("baseline", "pp1", "pp1+pp2"):
        preds = predict_many(bench.gallery, bench.queries, bench.query_ids, mode,
                             cfg or PostprocessConfig(), scores)
        out[mode] = gap(preds, bench.truth)
    return out
