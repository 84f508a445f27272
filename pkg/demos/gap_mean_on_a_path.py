"""Couplings on a finite path shift the spectrum by a computable mean.

A path of length pi with a single delta of strength 1 at the left end, then
with geometrically placed deltas summing to 1. The Cesaro mean of
lambda_n(sigma) - lambda_n(0) settles at 2 sigma_1 / L + (sum of the rest) / L:
an end coupling counts twice, interior ones once.

    python demos/gap_mean_on_a_path.py
"""

import math

from qglab.graph import LengthRule, PathFamily, SigmaSequence, truncate_family
from qglab.solver import SolverOptions, solve
from qglab.spectral_stats import Baseline, baseline_graph, cesaro_gap_mean, cesaro_smoothed, predicted_gap_mean_path

L = math.pi
family = PathFamily("finite_length", L, LengthRule("geometric", 0.5))
opts = SolverOptions(n_target=4000, eigenfunctions=False)

cases = {
    "end delta, sigma = (1, 0, ...)": SigmaSequence("explicit", (1.0,)),
    "geometric, sigma_n = 2^-n": SigmaSequence("geometric", scale=1.0, ratio=0.5),
}
for label, sigma in cases.items():
    g = truncate_family(family, sigma, 12)
    spec = solve(g, opts)
    free = solve(baseline_graph(g, Baseline.ZERO), opts)
    pred = predicted_gap_mean_path(sigma, L)
    print(label)
    for N in (250, 1000, 4000):
        raw = cesaro_gap_mean(spec, free, N)
        sm = cesaro_smoothed(spec, free, N)
        print(f"  N={N:5d}  raw {raw:.6f}  smoothed {sm:.6f}  predicted {pred:.6f}")
