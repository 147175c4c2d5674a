"""
Dynamic margins as a function of class size
===========================================

Rare classes get large margins and frequent classes small ones. Each schedule
is pinned by its bounds: the smallest class size gets the upper bound and the
largest class size gets the lower bound.
"""

import numpy as np

from dynarc.margins import calibrate, margins_from_counts

# class sizes spanning the long tail of a landmark dataset
sizes = np.array([1, 2, 5, 16, 50, 200, 1000, 10000])

schedules = {
    "constant 0.25": calibrate(1.0, 0.25, 0.25, 1, 10000),
    "1/n, 0.2-0.55": calibrate(1.0, 0.2, 0.55, 1, 10000),
    "n^-1/8, 0-0.4": calibrate(1 / 8, 0.0, 0.4, 1, 10000),
    "n^-1/4, 0.05-0.5": calibrate(1 / 4, 0.05, 0.5, 1, 10000),
}

print(f"{'schedule':>18} | a        b        | " + " ".join(f"{n:>6}" for n in sizes))
for name, s in schedules.items():
    m = margins_from_counts(s, sizes)
    print(f"{name:>18} | {s.a:8.4f} {s.b:8.4f} | " + " ".join(f"{x:6.3f}" for x in m))

# with n in [1, 10^4] the n^-1/4 schedule comes out as exactly 0.5 * n^-1/4
s = schedules["n^-1/4, 0.05-0.5"]
print("\nn^-1/4 coefficients:", round(s.a, 12), round(s.b, 12), "-> f(16) =", s(16))
