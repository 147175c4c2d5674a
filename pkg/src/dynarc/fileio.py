"""Binary matrix/head formats and the CSV files exchanged between commands.

EMB1: magic ``EMB1``, u32 N, u32 D, u32 float width (4 or 8), then N*D
little-endian floats, row-major.

AFH1: magic ``AFH1``, u32 C, u32 K, u32 D, u32 float width, C margins,
then C*K*D weights row-major. The logit scale is not stored.
"""

import csv
import math
import struct

import numpy as np

from .arcface import ArcFaceHead
from .errors import FormatError
from .metrics import DISTRACTOR, Prediction

_DTYPES = {4: "<f4", 8: "<f8"}


def _dtype(width):
    if width not in _DTYPES:
        raise FormatError(f"float width must be 4 or 8, got {width}")
    return np.dtype(_DTYPES[width])


def write_emb(path, matrix, float_width=8):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    n, d = matrix.shape
    with open(path, "wb") as fh:
        fh.write(b"EMB1")
        fh.write(struct.pack("<III", n, d, float_width))
        fh.write(matrix.astype(_dtype(float_width)).tobytes(order="C"))


def read_emb(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != b"EMB1" or len(blob) < 16:
        raise FormatError(f"{path}: not an EMB1 file")
    n, d, width = struct.unpack("<III", blob[4:16])
    dtype = _dtype(width)
    expected = 16 + n * d * dtype.itemsize
    if len(blob) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(blob)}")
    data = np.frombuffer(blob, dtype=dtype, offset=16, count=n * d)
    return data.astype(np.float64).reshape(n, d)


def write_head(path, head, float_width=8):
    c, k, d = head.weights.shape
    dtype = _dtype(float_width)
    with open(path, "wb") as fh:
        fh.write(b"AFH1")
        fh.write(struct.pack("<IIII", c, k, d, float_width))
        fh.write(head.margins.astype(dtype).tobytes())
        fh.write(head.weights.astype(dtype).tobytes(order="C"))


def read_head(path, scale=30.0):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != b"AFH1" or len(blob) < 20:
        raise FormatError(f"{path}: not an AFH1 file")
    c, k, d, width = struct.unpack("<IIII", blob[4:20])
    dtype = _dtype(width)
    expected = 20 + (c + c * k * d) * dtype.itemsize
    if len(blob) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(blob)}")
    margins = np.frombuffer(blob, dtype=dtype, offset=20, count=c).astype(np.float64)
    weights = np.frombuffer(blob, dtype=dtype, offset=20 + c * dtype.itemsize,
                            count=c * k * d).astype(np.float64).reshape(c, k, d)
    return ArcFaceHead(weights, margins, scale)


def _rows(path, header):
    """Yield ``(line_number, row)`` after checking the header."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first != header:
            raise FormatError(f"{path}: expected header {','.join(header)}", line=1)
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}: expected {len(header)} fields, got {len(row)}",
                                  line=reader.line_num)
            yield reader.line_num, row


def _int(value, path, line):
    try:
        return int(value)
    except ValueError:
        raise FormatError(f"{path}: bad class id {value!r}", line=line) from None


def write_labels(path, ids, labels):
    """``id,class_id`` CSV; a ``None`` label is written as an empty field."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "class_id"])
        for i, c in zip(ids, labels):
            w.writerow([i, "" if c is None else int(c)])


def read_labels(path):
    ids, labels = [], []
    for line, (qid, cls) in _rows(path, ["id", "class_id"]):
        ids.append(qid)
        labels.append(None if cls == "" else _int(cls, path, line))
    return ids, labels


def write_predictions(path, predictions):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["query_id", "class_id", "confidence"])
        for p in predictions:
            w.writerow([p.query_id, p.class_id, repr(float(p.confidence))])


def read_predictions(path):
    out = []
    for line, (qid, cls, conf) in _rows(path, ["query_id", "class_id", "confidence"]):
        try:
            confidence = float(conf)
        except ValueError:
            raise FormatError(f"{path}: bad confidence {conf!r}", line=line) from None
        if not math.isfinite(confidence):
            raise FormatError(f"{path}: non-finite confidence", line=line)
        out.append(Prediction(qid, _int(cls, path, line), confidence))
    return out


def write_truth(path, truth):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["query_id", "class_id"])
        for qid, cls in truth.items():
            w.writerow([qid, "" if cls is DISTRACTOR else int(cls)])


def read_truth(path):
    truth = {}
    for line, (qid, cls) in _rows(path, ["query_id", "class_id"]):
        if qid in truth:
            raise FormatError(f"{path}: duplicate query id {qid!r}", line=line)
        truth[qid] = DISTRACTOR if cls == "" else _int(cls, path, line)
    return truth
