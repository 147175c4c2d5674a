"""Synthetic long-tailed data, stratified folds, and a small trainer that
fits a linear encoder plus a Sub-center ArcFace head end to end."""

import zlib
from dataclasses import dataclass, field

import numpy as np

from . import margins as margin_lib
from .arcface import ArcFaceHead, arcface_loss
from .errors import DivergedLoss, InvalidK, InvalidParams
from .metrics import Prediction, accuracy, gap
from .numerics import l2_normalize_rows


def rng_stream(seed, tag):
    """Independent generator for one purpose, derived from the run seed.

    The stream is keyed by ``(seed, crc32(tag))`` so components never share
    draws and adding a new consumer does not perturb existing ones.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(tag.encode())]))


@dataclass
class ToyDataset:
    inputs: np.ndarray
    labels: np.ndarray
    class_counts: np.ndarray
    seed: int
    centers: np.ndarray = None

    @property
    def num_classes(self):
        return len(self.class_counts)


def longtail_sizes(num_classes, zipf_exponent, total_samples):
    """Class sizes proportional to ``rank**-zipf_exponent``, each at least 1,
    summing to ``total_samples`` (largest-remainder rounding)."""
    w = np.arange(1, num_classes + 1, dtype=np.float64) ** -zipf_exponent
    ideal = total_samples * w / w.sum()
    sizes = np.maximum(1, np.floor(ideal)).astype(np.int64)
    diff = total_samples - sizes.sum()
    if diff > 0:
        order = np.argsort(-(ideal - sizes), kind="stable")
        sizes[order[:diff]] += 1
    while diff < 0:
        # only reachable when the floor-at-1 rule overshoots; trim the head
        j = int(np.argmax(np.where(sizes > 1, sizes - ideal, -np.inf)))
        sizes[j] -= 1
        diff += 1
    return sizes


def synth_longtail(num_classes, zipf_exponent, total_samples, input_dim, noise_sigma, seed):
    if num_classes < 2 or total_samples < num_classes or input_dim < 1:
        raise InvalidParams("need num_classes >= 2, total_samples >= num_classes, input_dim >= 1")
    if zipf_exponent < 0 or noise_sigma < 0:
        raise InvalidParams("zipf_exponent and noise_sigma must be non-negative")
    sizes = longtail_sizes(num_classes, zipf_exponent, total_samples)
    centers = l2_normalize_rows(
        rng_stream(seed, "centers").standard_normal((num_classes, input_dim)))
    labels = np.repeat(np.arange(num_classes), sizes)
    noise = rng_stream(seed, "noise").standard_normal((total_samples, input_dim))
    inputs = centers[labels] + noise_sigma * noise
    return ToyDataset(inputs, labels, sizes, seed, centers)


def stratified_kfold(labels, k, seed):
    """Fold index per sample; each class is spread over folds as evenly as
    possible (per-fold counts within a class differ by at most one).

    Assignment depends only on each sample's rank within its class, so
    reordering samples while keeping within-class order preserves it.
    """
    if k < 2:
        raise InvalidK(f"k must be >= 2, got {k}")
    labels = np.asarray(labels)
    rng = rng_stream(seed, "kfold")
    folds = np.empty(labels.shape[0], dtype=np.int64)
    offset = 0
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        n = idx.size
        folds[idx[rng.permutation(n)]] = (offset + np.arange(n)) % k
        offset += n
    return folds


@dataclass(frozen=True)
class TrainConfig:
    embed_dim: int = 64
    epochs: int = 30
    lr: float = 0.1
    momentum: float = 0.9
    batch_size: int = 64
    scale: float = 30.0
    num_subcenters: int = 3
    margin_kind: str = "dynamic"
    margin_lambda: float = 0.25
    margin_lower: float = 0.05
    margin_upper: float = 0.5
    margin_n_min: int = None
    margin_n_max: int = None
    folds: int = 5
    val_fold: int = 0
    seed: int = 0

    def __post_init__(self):
        if min(self.embed_dim, self.epochs, self.batch_size, self.num_subcenters) < 1:
            raise InvalidParams("embed_dim, epochs, batch_size, num_subcenters must be >= 1")
        if not (self.lr > 0 and self.scale > 0 and 0 <= self.momentum < 1):
            raise InvalidParams("need lr > 0, scale > 0, 0 <= momentum < 1")
        if not 0 <= self.val_fold < self.folds:
            raise InvalidParams("val_fold must index one of the folds")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    val_gap: float
    val_acc: float


@dataclass
class TrainResult:
    encoder: np.ndarray
    head: ArcFaceHead
    history: list
    train_index: np.ndarray
    val_index: np.ndarray
    margins: np.ndarray = field(default=None)

    def embed(self, inputs):
        return encode(self.encoder, inputs)


def encode(encoder, inputs):
    return l2_normalize_rows(np.asarray(inputs, dtype=np.float64) @ encoder)


def batch_top1(gallery_feats, gallery_labels, queries, chunk=1024):
    """Top-1 class and cosine per query via matrix products.

    Ties go to the lowest gallery row, as in ``retrieval.top_k``; this is the
    fast path used for per-epoch validation.
    """
    classes = np.empty(queries.shape[0], dtype=np.int64)
    conf = np.empty(queries.shape[0])
    for s in range(0, queries.shape[0], chunk):
        sims = queries[s:s + chunk] @ gallery_feats.T
        best = np.argmax(sims, axis=1)
        classes[s:s + chunk] = gallery_labels[best]
        conf[s:s + chunk] = np.clip(sims[np.arange(best.size), best], -1.0, 1.0)
    return classes, conf


def evaluate_baseline(gallery_feats, gallery_labels, query_feats, query_labels):
    """Held-out ``(gap, accuracy)`` of top-1 neighbor predictions."""
    classes, conf = batch_top1(gallery_feats, gallery_labels, query_feats)
    ids = [f"q{i:06d}" for i in range(len(query_labels))]
    preds = [Prediction(q, int(c), float(s)) for q, c, s in zip(ids, classes, conf)]
    truth = {q: int(c) for q, c in zip(ids, query_labels)}
    return gap(preds, truth), accuracy(preds, truth)


def margin_schedule(cfg, counts):
    return margin_lib.schedule_from_config(
        cfg.margin_kind, counts, lam=cfg.margin_lambda, lower=cfg.margin_lower,
        upper=cfg.margin_upper, n_min=cfg.margin_n_min, n_max=cfg.margin_n_max)


def train_toy(dataset, cfg):
    """Momentum SGD on encoder and head over the non-validation folds.

    The learning rate drops tenfold at 75% of the epochs. Head sub-centers
    are renormalized after every step. History holds the mean training loss
    of each epoch and the held-out baseline GAP/accuracy after it.
    """
    if dataset.num_classes < 2:
        raise InvalidParams("need at least two classes")
    x = np.asarray(dataset.inputs, dtype=np.float64)
    y = np.asarray(dataset.labels, dtype=np.int64)
    folds = stratified_kfold(y, cfg.folds, cfg.seed)
    train_idx = np.flatnonzero(folds != cfg.val_fold)
    val_idx = np.flatnonzero(folds == cfg.val_fold)

    counts = np.bincount(y[train_idx], minlength=dataset.num_classes)
    margins = margin_lib.margins_from_counts(
        margin_schedule(cfg, np.maximum(counts, 1)), np.maximum(counts, 1))

    d_in = x.shape[1]
    encoder = rng_stream(cfg.seed, "encoder").standard_normal((d_in, cfg.embed_dim))
    encoder /= np.sqrt(d_in)
    head = ArcFaceHead.random(dataset.num_classes, cfg.embed_dim, margins,
                              cfg.num_subcenters, cfg.scale, rng_stream(cfg.seed, "head"))
    shuffle = rng_stream(cfg.seed, "shuffle")
    v_enc = np.zeros_like(encoder)
    v_head = np.zeros_like(head.weights)
    drop_at = int(0.75 * cfg.epochs)

    history = []
    for epoch in range(cfg.epochs):
        lr = cfg.lr if epoch < drop_at else cfg.lr * 0.1
        order = train_idx[shuffle.permutation(train_idx.size)]
        losses = []
        for s in range(0, order.size, cfg.batch_size):
            batch = order[s:s + cfg.batch_size]
            xb = x[batch]
            z = xb @ encoder
            norms = np.sqrt(np.sum(z * z, axis=1, keepdims=True))
            if not np.all(np.isfinite(norms) & (norms > 0)):
                raise DivergedLoss(f"encoder output overflowed at epoch {epoch}")
            e = z / norms
            loss, g_e, g_w = arcface_loss(head.weights, head.margins, head.scale, e, y[batch])
            if not np.isfinite(loss):
                raise DivergedLoss(f"loss became {loss} at epoch {epoch}")
            losses.append(loss * batch.size)
            g_z = (g_e - e * np.sum(g_e * e, axis=1, keepdims=True)) / norms
            v_enc = cfg.momentum * v_enc + xb.T @ g_z
            v_head = cfg.momentum * v_head + g_w
            encoder = encoder - lr * v_enc
            head.weights = l2_normalize_rows(head.weights - lr * v_head)

        epoch_loss = float(np.sum(losses) / order.size)
        if not np.isfinite(epoch_loss):
            raise DivergedLoss(f"loss became {epoch_loss} at epoch {epoch}")
        if val_idx.size:
            feats = encode(encoder, x)
            val_gap, val_acc = evaluate_baseline(feats[train_idx], y[train_idx],
                                                 feats[val_idx], y[val_idx])
        else:
            val_gap = val_acc = float("nan")
        history.append(EpochStats(epoch, epoch_loss, val_gap, val_acc))

    return TrainResult(encoder, head, history, train_idx, val_idx, margins)
