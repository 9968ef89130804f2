"""Harmonic and biharmonic Steklov spectra on the unit disk and the unit square.

Run: python3 demos/disk_and_square_spectra.py
"""

import numpy as np

from steklov_trace import (DiskDomain, SteklovProblemSpec, biharmonic_steklov_disk,
                           build_polygon_disk_mesh, build_rect_mesh, laplace_steklov_disk, solve,
                           weyl_fit)

disk = DiskDomain(1.0)

# k = 1: exact values n/R, each n >= 1 twice
lap = laplace_steklov_disk(1.0, 4)
print("k=1 disk      :", np.round(lap.eigenvalues, 6))

# the same problem by P1 elements on an inscribed polygon
mesh, _ = build_polygon_disk_mesh(1.0, 4)
fem = solve(SteklovProblemSpec(1, 0, (), mesh), mesh, 7)
print("k=1 polydisk  :", np.round(fem.eigenvalues, 4))

# k = 2: constants span the kernel for ell = 0; ell = 1 starts away from zero
for ell in (0, 1):
    s = biharmonic_steklov_disk(SteklovProblemSpec(2, ell, (), disk), 6)
    print(f"k=2 ell={ell} disk:", np.round(s.eigenvalues[:7], 4))

# bicubic Hermite elements on the square
sq, _ = build_rect_mesh(1.0, 1.0, 8, 8, "c1rect")
s = solve(SteklovProblemSpec(2, 1, (), sq), sq, 6)
print("k=2 ell=1 sq. :", np.round(s.eigenvalues, 4))

# Weyl exponents: 1 for k=1, 3 for (k=2, ell=0), 1 for (k=2, ell=1)
for name, spec in (("k=1", laplace_steklov_disk(1.0, 100)),
                   ("k=2 ell=0", biharmonic_steklov_disk(SteklovProblemSpec(2, 0, (), disk), 100)),
                   ("k=2 ell=1", biharmonic_steklov_disk(SteklovProblemSpec(2, 1, (), disk), 100))):
    f = weyl_fit(spec, 10, 200)
    print(f"Weyl {name:9s}: exponent {f.exponent:.3f}, constant {f.constant:.3f}")
