"""Dirichlet/Neumann pairs: spectral test on the disk, corner and gradient tests on a square.

Run: python3 demos/compatibility_checks.py
"""

import numpy as np

from steklov_trace import (BoundarySamples, DiskDomain, SteklovProblemSpec, TracePair,
                           biharmonic_steklov_disk, check_pair, disk_auxiliary, geymonat_check,
                           polygon_param, vertex_compat_p2)
from steklov_trace.geometry import node_angles

n = 64
disk = DiskDomain(1.0)
spectra = {ell: biharmonic_steklov_disk(SteklovProblemSpec(2, ell, (), disk), n) for ell in (0, 1)}
aux = {(0, 1): disk_auxiliary(1.0, 0, 1, n), (1, 0): disk_auxiliary(1.0, 1, 0, n)}
p = spectra[0].param
th = node_angles(p)

genuine = TracePair.of_field(spectra[0].vector(3), spectra[0])
rough = TracePair(BoundarySamples(p, 0 * th),
                  BoundarySamples(p, sum(k**-0.6 * np.cos(k * th) for k in range(1, n + 1))))
for name, pair in (("zero", TracePair.zero(p)), ("eigenfunction", genuine), ("rough", rough)):
    print(f"{name:14s}: {check_pair(pair, spectra, aux).verdicts}")

square = polygon_param([[0, 0], [1, 0], [1, 1], [0, 1]], 2048)
x, y = square.points.T
jump = BoundarySamples(square, x + (square.node_side == 1))
print("corner verdicts:", [r.verdict for r in vertex_compat_p2(jump, square)])

sq = polygon_param([[0, 0], [1, 0], [1, 1], [0, 1]], 512)
x, _ = sq.points.T
print("u = x        :", geymonat_check(TracePair(BoundarySamples(sq, x),
                                                 BoundarySamples(sq, sq.normals[:, 0])), sq).verdict)
print("g0 = x, g1=0 :", geymonat_check(TracePair(BoundarySamples(sq, x),
                                                 BoundarySamples(sq, 0 * x)), sq).verdict)
