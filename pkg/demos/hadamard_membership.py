"""The Hadamard coefficients lie in L2 but not in the half-order trace space.

Run: python3 demos/hadamard_membership.py
"""

import numpy as np

from steklov_trace import (WeightScheme, classify_membership, extend, hadamard_coefficients,
                           laplace_steklov_disk)

N = 10_000
c = hadamard_coefficients(N)
for name, w in (("L2", WeightScheme.L2()), ("H^1/2_A", WeightScheme.HsA(0.5))):
    v = classify_membership(c, w, N)
    fit = v.growth_exponent_fit
    print(f"{name:8s}: {v.verdict:3s}  rate exponent {fit.get('exponent', float('nan')):+.3f}"
          f"  ({v.reason})")

# the extensions of the truncations have energy growing like N^(1/4)
s = laplace_steklov_disk(1.0, 2048)
for n in (256, 1024, 4096):
    u = extend(hadamard_coefficients(n, s), s)
    print(f"N={n:5d}: ||E g_N|| = {np.sqrt(s.inner(u, u)):.4f}")
