"""The harmonic Dirichlet path: infinite length, discrete spectrum, modified Weyl law.

Cells of length pi/m with Dirichlet junctions decouple, so the spectrum is
{(m j)^2} and N(lambda) counts lattice points under a hyperbola:
N(lambda) ~ (sqrt(lambda)/2) ln(lambda). The usual local mean (1/N) sum |f_n|^2
goes to zero; normalized by sqrt(lambda(N)) instead it tends to 1/pi away from
the junctions.

    python demos/harmonic_path_modified_weyl.py
"""

import math

from qglab._counting import harmonic_dirichlet_count
from qglab.experiments import _harmonic_cells_for
from qglab.solver import exact_harmonic_spectrum
from qglab.spectral_stats import harmonic_normalizer, local_weyl_mean, modified_local_weyl

print("counting function")
for lam in (1e2, 1e4, 1e6, 1e8, 1e10):
    n = harmonic_dirichlet_count(lam)
    print(f"  lambda={lam:8.0e}  N={n:10d}  N / ((sqrt(l)/2) ln l) = {n / harmonic_normalizer(lam):.4f}")

print("local means at x = pi/2 (inside the first cell)")
for N in (100, 1000, 10_000, 30_000):
    cells = _harmonic_cells_for(N)
    spec = exact_harmonic_spectrum(cells, N)
    std = local_weyl_mean(spec, math.pi / 2, N)
    mod = modified_local_weyl(spec, math.pi / 2, N)
    print(f"  N={N:6d} ({cells:5d} cells)  standard {std:.4f}  modified {mod:.4f}  1/pi = {1 / math.pi:.4f}")
