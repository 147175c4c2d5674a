"""``dynarc`` command line: synth, train, predict, eval, ensemble, gradcheck.

Exit codes: 0 success, 1 usage error, 2 runtime or data error.
"""

import argparse
import os
import sys

import numpy as np

from . import fileio
from .arcface import head_scores_batch
from .config import ConfigError, load_config, merge, parse_overrides
from .data import ToyDataset, TrainConfig, synth_longtail, train_toy
from .ensemble import ModelOutputs, average_head_scores, concat_features
from .errors import DimensionMismatch, DynarcError, FormatError
from .gradcheck import run_suite
from .metrics import accuracy, gap
from .postprocess import MODES, PostprocessConfig, predict_many
from .retrieval import Gallery

USAGE_ERROR = 1
RUNTIME_ERROR = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _require_files(*paths):
    for p in paths:
        if not os.path.isfile(p):
            raise FileNotFoundError(f"no such file: {p}")


def _require_out_dir(prefix):
    parent = os.path.dirname(os.path.abspath(prefix))
    if not os.path.isdir(parent):
        raise FileNotFoundError(f"output directory does not exist: {parent}")


def _load_split(prefix):
    """``prefix.emb`` plus ``prefix.csv`` -> (features, ids, labels)."""
    _require_files(prefix + ".emb", prefix + ".csv")
    feats = fileio.read_emb(prefix + ".emb")
    ids, labels = fileio.read_labels(prefix + ".csv")
    if len(ids) != feats.shape[0]:
        raise FormatError(f"{prefix}: {feats.shape[0]} rows but {len(ids)} labels")
    return feats, ids, labels


def _save_split(prefix, feats, ids, labels, float_width=8):
    fileio.write_emb(prefix + ".emb", feats, float_width)
    fileio.write_labels(prefix + ".csv", ids, labels)


# -- synth -----------------------------------------------------------------

def cmd_synth(args, cfg):
    _require_out_dir(args.out)
    ds = synth_longtail(args.classes, args.zipf, args.samples, args.dim, args.noise, args.seed)
    ids = [f"s{i:06d}" for i in range(len(ds.labels))]
    _save_split(args.out, ds.inputs, ids, ds.labels.tolist(), cfg.get("io.float_width", 8))
    sizes = ds.class_counts
    print(f"classes={len(sizes)} samples={sizes.sum()} min={sizes.min()} "
          f"median={int(np.median(sizes))} max={sizes.max()}")
    edges = [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000]
    for lo, hi in zip(edges, edges[1:] + [None]):
        n = int(np.sum((sizes >= lo) & (sizes < hi))) if hi else int(np.sum(sizes >= lo))
        if n:
            label = f"[{lo}, {hi})" if hi else f"[{lo}, inf)"
            print(f"  size {label:>12}: {n} classes")
    return 0


# -- train -----------------------------------------------------------------

_MARGIN_DEFAULTS = {
    "constant": {"margin.lower": 0.25, "margin.upper": 0.25},
    "dynamic": {"margin.lambda": 0.25, "margin.lower": 0.05, "margin.upper": 0.5},
}


def _train_config(cfg, seed):
    kind = cfg.get("margin.kind", "dynamic")
    if kind not in _MARGIN_DEFAULTS:
        raise UsageError(f"margin.kind must be constant or dynamic, got {kind!r}")
    m = dict(_MARGIN_DEFAULTS[kind])
    m.update({k: v for k, v in cfg.items() if k.startswith("margin.")})
    if kind == "constant":
        # one bound is enough to pin a constant level
        if "margin.lower" in cfg and "margin.upper" not in cfg:
            m["margin.upper"] = m["margin.lower"]
        elif "margin.upper" in cfg and "margin.lower" not in cfg:
            m["margin.lower"] = m["margin.upper"]
    defaults = TrainConfig()
    try:
        return TrainConfig(
            embed_dim=cfg.get("train.embed_dim", defaults.embed_dim),
            epochs=cfg.get("train.epochs", defaults.epochs),
            lr=cfg.get("train.lr", defaults.lr),
            momentum=cfg.get("train.momentum", defaults.momentum),
            batch_size=cfg.get("train.batch_size", defaults.batch_size),
            scale=cfg.get("train.scale", defaults.scale),
            num_subcenters=cfg.get("train.subcenters", defaults.num_subcenters),
            margin_kind=kind,
            margin_lambda=m.get("margin.lambda", defaults.margin_lambda),
            margin_lower=m["margin.lower"],
            margin_upper=m["margin.upper"],
            margin_n_min=m.get("margin.n_min"),
            margin_n_max=m.get("margin.n_max"),
            folds=cfg.get("train.folds", defaults.folds),
            val_fold=cfg.get("train.val_fold", defaults.val_fold),
            seed=seed,
        )
    except DynarcError as exc:
        raise UsageError(str(exc)) from None


def cmd_train(args, cfg):
    data = args.data or cfg.get("io.data")
    out = args.out or cfg.get("io.out")
    if not data or not out:
        raise UsageError("train needs --data and --out (or io.data / io.out)")
    tcfg = _train_config(cfg, args.seed)
    _require_files(data + ".emb", data + ".csv")
    _require_out_dir(out)
    width = cfg.get("io.float_width", 8)

    feats, ids, labels = _load_split(data)
    if any(c is None for c in labels):
        raise FormatError(f"{data}.csv: training labels must not be empty")
    y = np.asarray(labels, dtype=np.int64)
    ds = ToyDataset(feats, y, np.bincount(y), args.seed)
    result = train_toy(ds, tcfg)

    m = result.margins
    print(f"margins: kind={tcfg.margin_kind} min={m.min():.6f} max={m.max():.6f} "
          f"mean={m.mean():.6f}")
    fileio.write_head(out + ".head.afh", result.head, width)
    fileio.write_emb(out + ".encoder.emb", result.encoder, width)
    with open(out + ".metrics.csv", "w", encoding="utf-8") as fh:
        fh.write("epoch,loss,val_gap,val_acc\n")
        for h in result.history:
            fh.write(f"{h.epoch},{h.loss!r},{h.val_gap!r},{h.val_acc!r}\n")

    emb = result.embed(feats)
    tr, va = result.train_index, result.val_index
    _save_split(out + ".gallery", emb[tr], [ids[i] for i in tr], y[tr].tolist(), width)
    _save_split(out + ".query", emb[va], [ids[i] for i in va], y[va].tolist(), width)
    fileio.write_emb(out + ".query.head.emb", head_scores_batch(result.head, emb[va]), width)
    fileio.write_truth(out + ".truth.csv", {ids[i]: int(y[i]) for i in va})
    last = result.history[-1]
    print(f"epoch={last.epoch} loss={last.loss:.6f} val_gap={last.val_gap:.6f} "
          f"val_acc={last.val_acc:.6f}")
    return 0


# -- predict ---------------------------------------------------------------

def cmd_predict(args, cfg):
    mode = args.mode
    if args.no_head_fusion and mode == "pp1+pp2":
        mode = "pp1"
    if mode == "pp1+pp2" and not (args.head or args.head_scores):
        raise UsageError("--mode pp1+pp2 needs --head or --head-scores")
    post = PostprocessConfig(
        neighbor_k=_pick(args.neighbor_k, cfg, "post.neighbor_k", 5),
        p1=_pick(args.p1, cfg, "post.p1", 8.0),
        p2=_pick(args.p2, cfg, "post.p2", 12.0),
        head_candidates=_pick(args.head_candidates, cfg, "post.head_candidates", 5),
    )
    _require_files(*(p for p in (args.head, args.head_scores) if p))
    _require_out_dir(args.out)

    g_feats, g_ids, g_labels = _load_split(args.gallery)
    if any(c is None for c in g_labels):
        raise FormatError(f"{args.gallery}.csv: gallery labels must not be empty")
    gallery = Gallery(g_feats, g_labels, g_ids)
    q_feats, q_ids, _ = _load_split(args.query)
    if q_feats.shape[1] != gallery.dim:
        raise DimensionMismatch(
            f"query dim {q_feats.shape[1]} != gallery dim {gallery.dim}")

    scores = None
    if mode == "pp1+pp2":
        if args.head_scores:
            scores = fileio.read_emb(args.head_scores)
        else:
            scores = head_scores_batch(fileio.read_head(args.head), q_feats)
        if scores.shape[0] != q_feats.shape[0]:
            raise DimensionMismatch(
                f"{scores.shape[0]} rows of head scores for {q_feats.shape[0]} queries")
    preds = predict_many(gallery, q_feats, q_ids, mode, post, scores)
    fileio.write_predictions(args.out, preds)
    print(f"mode={mode} queries={len(preds)} written={args.out}")
    return 0


def _pick(flag, cfg, key, default):
    if flag is not None:
        return flag
    return cfg.get(key, default)


# -- eval ------------------------------------------------------------------

def cmd_eval(args, cfg):
    _require_files(args.predictions, args.truth)
    preds = fileio.read_predictions(args.predictions)
    truth = fileio.read_truth(args.truth)
    print(f"gap={gap(preds, truth):.6f} acc={accuracy(preds, truth):.6f}")
    return 0


# -- ensemble --------------------------------------------------------------

def cmd_ensemble(args, cfg):
    specs = []
    for spec in args.model:
        feat, _, head = spec.partition(":")
        _require_files(feat, *([head] if head else []))
        specs.append((feat, head or None))
    _require_out_dir(args.out)
    models = [ModelOutputs(fileio.read_emb(f), fileio.read_emb(h) if h else None, f)
              for f, h in specs]
    width = cfg.get("io.float_width", 8)
    fileio.write_emb(args.out + ".emb", concat_features(models), width)
    written = [args.out + ".emb"]
    if any(m.head_scores is not None for m in models):
        fileio.write_emb(args.out + ".head.emb", average_head_scores(models), width)
        written.append(args.out + ".head.emb")
    print(f"models={len(models)} written={','.join(written)}")
    return 0


# -- gradcheck -------------------------------------------------------------

def cmd_gradcheck(args, cfg):
    err_e, err_w = run_suite(args.instances, args.seed, args.eps)
    worst = max(err_e, err_w)
    print(f"instances={args.instances} max_rel_err_embeddings={err_e:.3e} "
          f"max_rel_err_weights={err_w:.3e} max_rel_err={worst:.3e}")
    return 0 if worst < args.tol else RUNTIME_ERROR


def build_parser():
    parser = _Parser(prog="dynarc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", type=int, default=0)
        return p

    p = common(sub.add_parser("synth", help="write a synthetic long-tailed dataset"))
    p.add_argument("--classes", type=int, default=200)
    p.add_argument("--zipf", type=float, default=1.2)
    p.add_argument("--samples", type=int, default=5000)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--noise", type=float, default=0.25)
    p.add_argument("--out", required=True, help="output prefix (.emb and .csv)")
    p.set_defaults(func=cmd_synth)

    p = common(sub.add_parser("train", help="train encoder and Sub-center ArcFace head"))
    p.add_argument("--data", help="dataset prefix written by synth")
    p.add_argument("--out", help="output prefix")
    p.set_defaults(func=cmd_train)

    p = common(sub.add_parser("predict", help="predict query classes"))
    p.add_argument("--gallery", required=True, help="gallery prefix (.emb and .csv)")
    p.add_argument("--query", required=True, help="query prefix (.emb and .csv)")
    p.add_argument("--head", help="AFH1 head checkpoint")
    p.add_argument("--head-scores", help="EMB1 matrix of per-query head scores")
    p.add_argument("--mode", choices=MODES, default="baseline")
    p.add_argument("--neighbor-k", type=int)
    p.add_argument("--p1", type=float)
    p.add_argument("--p2", type=float)
    p.add_argument("--head-candidates", type=int)
    p.add_argument("--no-head-fusion", action="store_true")
    p.add_argument("--out", required=True, help="predictions CSV")
    p.set_defaults(func=cmd_predict)

    p = common(sub.add_parser("eval", help="GAP and accuracy of a predictions CSV"))
    p.add_argument("--predictions", required=True)
    p.add_argument("--truth", required=True)
    p.set_defaults(func=cmd_eval)

    p = common(sub.add_parser("ensemble", help="fuse several models' outputs"))
    p.add_argument("--model", action="append", required=True,
                   help="features.emb[:head.emb]; repeat per model")
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_ensemble)

    p = common(sub.add_parser("gradcheck", help="finite-difference check of the loss"))
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None):
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        overrides = parse_overrides(extra)
        file_cfg = load_config(args.config) if args.config else {}
        return args.func(args, merge(file_cfg, overrides))
    except (UsageError, ConfigError) as exc:
        print(f"dynarc {args.command}: usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (DynarcError, OSError) as exc:
        print(f"dynarc {args.command}: error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
