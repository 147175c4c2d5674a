"""Class-size dependent ArcFace margins.

A schedule maps a class size ``n`` to a margin ``a * n**(-lam) + b``. The
coefficients are solved from the requested bounds so that the smallest class
size ``n_min`` receives ``upper`` and the largest ``n_max`` receives
``lower``; sizes outside that range are clamped.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRange, EmptyCounts, InvalidBounds, InvalidParams


@dataclass(frozen=True)
class MarginSchedule:
    lam: float
    a: float
    b: float
    lower: float
    upper: float
    n_min: int
    n_max: int

    @property
    def is_constant(self):
        return self.a == 0.0

    def __call__(self, n):
        return margin_for(self, n)


def calibrate(lam, lower, upper, n_min, n_max):
    """Solve ``a`` and ``b`` so that f(n_min) = upper and f(n_max) = lower."""
    if lam <= 0:
        raise InvalidParams(f"lambda must be positive, got {lam}")
    if lower > upper:
        raise InvalidBounds(f"lower bound {lower} exceeds upper bound {upper}")
    if lower < 0 or upper >= math.pi / 2:
        raise InvalidBounds(f"bounds [{lower}, {upper}] outside [0, pi/2)")
    if n_min < 1 or n_max < n_min:
        raise InvalidParams(f"need 1 <= n_min <= n_max, got {n_min}, {n_max}")
    if lower == upper:
        return MarginSchedule(lam, 0.0, float(lower), lower, upper, n_min, n_max)
    if n_min == n_max:
        raise DegenerateRange("n_min == n_max but the bounds differ")
    lo_pow = float(n_min) ** -lam
    hi_pow = float(n_max) ** -lam
    a = (upper - lower) / (lo_pow - hi_pow)
    b = lower - a * hi_pow
    return MarginSchedule(lam, a, b, lower, upper, n_min, n_max)


def constant(margin, n_min=1, n_max=1):
    return calibrate(1.0, margin, margin, n_min, max(n_min, n_max))


def margin_for(schedule, n):
    if n < 1:
        raise InvalidParams(f"class size must be >= 1, got {n}")
    if schedule.is_constant:
        return schedule.b
    n = min(max(n, schedule.n_min), schedule.n_max)
    m = schedule.a * float(n) ** -schedule.lam + schedule.b
    # rounding can push the endpoints a hair past the bounds
    return min(max(m, schedule.lower), schedule.upper)


def margins_from_counts(schedule, counts):
    """Per-class margin vector for a vector of class sizes."""
    counts = np.asarray(counts)
    if counts.size == 0:
        raise EmptyCounts("no class counts given")
    return np.array([margin_for(schedule, int(n)) for n in counts], dtype=np.float64)


def schedule_from_config(kind, counts=None, lam=0.25, lower=0.05, upper=0.5,
                         n_min=None, n_max=None):
    """Build a schedule from ``margin.*`` config values.

    ``n_min``/``n_max`` default to the extremes of ``counts``.
    """
    if counts is not None and len(counts) > 0:
        n_min = int(np.min(counts)) if n_min is None else int(n_min)
        n_max = int(np.max(counts)) if n_max is None else int(n_max)
    n_min = 1 if n_min is None else int(n_min)
    n_max = n_min if n_max is None else int(n_max)
    if kind == "constant":
        if lower != upper:
            raise InvalidBounds(f"constant margin needs lower == upper, got {lower}, {upper}")
        return calibrate(1.0, lower, upper, n_min, max(n_min, n_max))
    if kind == "dynamic":
        return calibrate(lam, lower, upper, n_min, n_max)
    raise InvalidParams(f"unknown margin kind {kind!r}")
