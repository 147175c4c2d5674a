"""Namespaced ``key=value`` run configuration.

Files hold one ``key = value`` per line; ``#`` starts a comment. Command-line
``--key value`` overrides win over the file. Unknown keys are rejected.
"""

from .errors import ConfigError

SCHEMA = {
    "margin.kind": str,
    "margin.lambda": float,
    "margin.lower": float,
    "margin.upper": float,
    "margin.n_min": int,
    "margin.n_max": int,
    "train.embed_dim": int,
    "train.epochs": int,
    "train.lr": float,
    "train.momentum": float,
    "train.batch_size": int,
    "train.scale": float,
    "train.subcenters": int,
    "train.folds": int,
    "train.val_fold": int,
    "post.neighbor_k": int,
    "post.p1": float,
    "post.p2": float,
    "post.head_candidates": int,
    "io.data": str,
    "io.out": str,
    "io.float_width": int,
}


def _coerce(key, value):
    if key not in SCHEMA:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        return SCHEMA[key](value)
    except ValueError:
        raise ConfigError(f"bad value {value!r} for {key}") from None


def parse_config_text(text, source="<config>"):
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = _coerce(key, value)
    return out


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), path)


def parse_overrides(tokens):
    """Turn ``['--margin.kind', 'constant', ...]`` into a typed dict."""
    out = {}
    it = iter(tokens)
    for tok in it:
        if not tok.startswith("--") or "." not in tok:
            raise ConfigError(f"unrecognized argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            value = next(it, None)
            if value is None:
                raise ConfigError(f"missing value for {tok}")
        out[key] = _coerce(key, value)
    return out


def merge(file_cfg, overrides):
    cfg = dict(file_cfg)
    cfg.update(overrides)
    return cfg
