"""A star with a coupled center and deltas accumulating along one arm.

Three unit arms, gamma = 1 at the center, attached strengths 1/2, 1/4, ...
summing to 1. Against the bare Laplacian the Cesaro gap mean tends to
(2 gamma / deg + sum sigma) / total length = 5/9. A constant potential q on
every arm adds its integral over the length, which the (0, gamma, 0)
comparison isolates.

    python demos/star_with_attached_deltas.py
"""

from qglab.graph import Delta, PiecewisePotential, attach_delta_vertices, geometric_positions, star_graph
from qglab.solver import SolverOptions, solve
from qglab.spectral_stats import Baseline, baseline_graph, cesaro_smoothed, predicted_gap_mean_graph

sigma = [0.5, 0.25, 0.125, 0.0625, 0.03125, 0.03125]
opts = SolverOptions(n_target=1500, eigenfunctions=False)

for q, baseline in ((0.0, Baseline.ZERO), (0.7, Baseline.GAMMA)):
    g0 = star_graph([1.0, 1.0, 1.0], Delta(1.0), potentials=[PiecewisePotential.constant(q)] * 3)
    g = attach_delta_vertices(g0, [(0, geometric_positions(1.0, len(sigma)), sigma)])
    spec = solve(g, opts)
    base = solve(baseline_graph(g, baseline), opts)
    pred = predicted_gap_mean_graph(g, baseline)
    print(f"q = {q}, baseline {baseline.value}: predicted {pred:.6f}")
    for N in (200, 500, 1500):
        print(f"  N={N:5d}  smoothed mean {cesaro_smoothed(spec, base, N):.6f}")
