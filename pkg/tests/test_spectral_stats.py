import math

import numpy as np
import pytest

from _helpers import quadrature_norms
from qglab._counting import dirichlet_count_exact, harmonic_dirichlet_count, neumann_interval_count
from qglab.experiments import _harmonic_cells_for
from qglab.graph import Delta, Dirichlet, PathFamily, SigmaSequence, build_path_graph, star_graph, truncate_family
from qglab.solver import SolverOptions, Spectrum, exact_harmonic_spectrum, solve
from qglab.spectral_stats import (
    Baseline,
    CountingFunction,
    InsufficientSpectrumError,
    ModifiedNormalizer,
    baseline_graph,
    cesaro_gap_mean,
    cesaro_smoothed,
    gap_mean_report,
    harmonic_normalizer,
    heat_bracket_graphs,
    heat_bracketing_check,
    heat_diag,
    karamata_deviation,
    local_weyl_mean,
    local_weyl_prediction,
    modified_local_weyl,
    modified_normalizer,
    predicted_gap_mean_general,
    predicted_gap_mean_graph,
    predicted_gap_mean_path,
    richardson_inverse_n,
    smoothed_mean,
    uniform_bound_check,
    weyl_ratio,
)

PI = math.pi


@pytest.fixture(scope="module")
def neumann_pi():
    return solve(build_path_graph([PI], [0.0]), SolverOptions(n_target=3000))


class TestCounts:
    def test_dirichlet_examples(self):
        assert dirichlet_count_exact([PI], 9.5) == 3
        assert dirichlet_count_exact([1.0, 1.0], PI**2) == 2
        assert dirichlet_count_exact([PI / m for m in range(1, 11)], 100.0) == 27

    def test_dirichlet_broadcasts(self):
        np.testing.assert_array_equal(dirichlet_count_exact([PI], np.array([0.5, 1.0, 3.9, 4.0])), [0, 1, 1, 2])
        with pytest.raises(ValueError):
            dirichlet_count_exact([1.0], -1.0)

    def test_neumann(self):
        assert neumann_interval_count(PI, 0.0) == 1
        assert neumann_interval_count(PI, 9.0) == 4
        assert neumann_interval_count(PI, -1.0) == 0

    def test_harmonic_divisor_sum(self):
        lengths = [PI / m for m in range(1, 10_001)]
        assert harmonic_dirichlet_count(1e8) == dirichlet_count_exact(lengths, 1e8)
        assert harmonic_dirichlet_count(100, M=3) == 10 + 5 + 3

    def test_counting_function_shape(self):
        c = CountingFunction.neumann_interval(PI)
        vals = [c(x) for x in np.linspace(0, 50, 400)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        # right-continuous: the level itself is counted
        assert c(4.0) == 3 and c(4.0 - 1e-9) == 2

    def test_from_spectrum_refuses_beyond_range(self):
        spec = solve(build_path_graph([PI], [0.0]), SolverOptions(n_target=5))
        c = CountingFunction.from_spectrum(spec)
        assert c(16.0) == 5
        with pytest.raises(InsufficientSpectrumError):
            c(17.0)
        full = CountingFunction.from_spectrum(solve(build_path_graph([PI], [0.0]), SolverOptions(lam_max=20.0)))
        assert full(20.0) == 5


class TestWeyl:
    def test_interval_ratios(self):
        assert weyl_ratio(CountingFunction.neumann_interval(PI), 1e6) == pytest.approx(1.001)
        assert weyl_ratio(CountingFunction.dirichlet([PI]), 1e6) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            weyl_ratio(CountingFunction.dirichlet([PI]), 0.0)

    def test_harmonic_count_growth(self):
        r = harmonic_dirichlet_count(1e8) / math.sqrt(1e8) / (math.log(1e8) / 2)
        assert abs(r - 1) <= 0.05
        assert harmonic_normalizer(1e8) == pytest.approx(0.5 * 1e4 * math.log(1e8))

    def test_solved_ratio_between_brackets(self):
        g = truncate_family(PathFamily(), SigmaSequence("explicit", (3.0, 1.0, 0.0, 5.0)), 4)
        c = CountingFunction.from_spectrum(solve(g, SolverOptions(lam_max=1e5, eigenfunctions=False)))
        for lam in np.geomspace(1, 1e5, 30):
            r = weyl_ratio(c, lam)
            assert weyl_ratio(CountingFunction.dirichlet(g.lengths), lam) <= r
            assert r <= weyl_ratio(CountingFunction.neumann_interval(PI), lam)


class TestGapMeans:
    def test_identical_spectra(self, neumann_pi):
        assert cesaro_gap_mean(neumann_pi, neumann_pi, 100) == 0.0
        assert cesaro_smoothed(neumann_pi, neumann_pi, 100) == 0.0

    def test_nonnegative_for_nonnegative_sigma(self, neumann_pi):
        g = build_path_graph([1.0, PI - 1.0], [0.0, 0.3, 0.0])
        a = solve(g, SolverOptions(n_target=200, eigenfunctions=False))
        for N in (1, 10, 100, 200):
            assert cesaro_gap_mean(a, neumann_pi, N) >= 0

    def test_insufficient(self, neumann_pi):
        short = solve(build_path_graph([PI], [0.0]), SolverOptions(n_target=5))
        with pytest.raises(InsufficientSpectrumError):
            cesaro_gap_mean(short, neumann_pi, 10)

    def test_smoothed_mean_window(self):
        terms = np.arange(1, 9, dtype=float)
        partial = np.cumsum(terms) / np.arange(1, 9)
        assert smoothed_mean(terms, 8) == pytest.approx(partial[3:].mean())

    def test_richardson(self):
        a, b = 2.0, 3.0
        assert richardson_inverse_n(100, a + b / 100, 200, a + b / 200) == pytest.approx(a)
        with pytest.raises(ValueError):
            richardson_inverse_n(5, 1.0, 5, 1.0)

    def test_report(self):
        g = build_path_graph([PI], [1.0])
        a = solve(g, SolverOptions(n_target=400, eigenfunctions=False))
        b = solve(build_path_graph([PI], [0.0]), SolverOptions(n_target=400, eigenfunctions=False))
        rep = gap_mean_report(a, b, [100, 200, 400], 2 / PI)
        assert len(rep.raw) == 3
        assert abs(rep.extrapolated - 2 / PI) < abs(rep.raw[0] - 2 / PI)
        with pytest.raises(ValueError):
            gap_mean_report(a, b, [200, 100], 2 / PI)

    def test_appending_sigma_never_lowers_eigenvalues(self):
        fam = PathFamily()
        sig = SigmaSequence("geometric", scale=1.0, ratio=0.5)
        prev = None
        for M in (1, 2, 3, 5):
            g = truncate_family(fam, sig, M)
            lam = solve(g, SolverOptions(n_target=200, eigenfunctions=False)).eigenvalues
            if prev is not None:
                assert np.all(lam >= prev * (1 - 1e-12))
            prev = lam


class TestPredictions:
    def test_path(self):
        assert predicted_gap_mean_path(SigmaSequence("explicit", (1.0,)), PI) == pytest.approx(0.63662, abs=1e-5)
        assert predicted_gap_mean_path(SigmaSequence("explicit", ()), PI) == 0.0
        assert predicted_gap_mean_path(SigmaSequence("harmonic"), PI) == math.inf
        assert predicted_gap_mean_path(SigmaSequence("geometric", scale=1.0, ratio=0.5), PI) == pytest.approx(1.5 / PI)

    def test_general(self):
        assert predicted_gap_mean_general(0.0, [(1.0, 3)], 1.0, 3.0, Baseline.ZERO) == pytest.approx(5 / 9)
        assert predicted_gap_mean_general(0.0, [(0.0, 3)], 0.0, 3.0, Baseline.ZERO) == 0.0
        c = 0.4
        assert predicted_gap_mean_general(c * 3.0, [(1.0, 3)], 0.0, 3.0, Baseline.GAMMA) == pytest.approx(c)
        assert predicted_gap_mean_general(1.0, [(1.0, 3)], 0.5, 3.0, Baseline.Q_GAMMA) == pytest.approx(0.5 / 3)
        assert predicted_gap_mean_general(1.0, [(1.0, 3)], 0.5, 3.0, Baseline.Q) == pytest.approx((2 / 3 + 0.5) / 3)
        assert predicted_gap_mean_general(0.0, [], SigmaSequence("harmonic"), 3.0, Baseline.ZERO) == math.inf

    def test_baseline_graph(self):
        from qglab.graph import PiecewisePotential, attach_delta_vertices

        g0 = star_graph([1.0] * 3, Delta(1.0), potentials=[PiecewisePotential.constant(0.5)] * 3)
        g = attach_delta_vertices(g0, [(0, [0.5], [2.0])])
        b = baseline_graph(g, Baseline.Q_GAMMA)
        assert b.conditions[0] == Delta(1.0) and b.conditions[-1] == Delta(0.0)
        assert b.potential_integral == pytest.approx(1.5)
        z = baseline_graph(g, Baseline.ZERO)
        assert all(c == Delta(0.0) for c in z.conditions) and z.potential_integral == 0
        assert predicted_gap_mean_graph(g, Baseline.ZERO) == pytest.approx((1.5 + 2 / 3 + 2.0) / 3)

    def test_constant_shift_is_exact(self):
        from qglab.graph import PiecewisePotential

        g0 = star_graph([1.0, 1.0, 1.0], Delta(1.0))
        g = g0.with_potential([PiecewisePotential.constant(0.3)] * 3)
        a = solve(g, SolverOptions(n_target=50, eigenfunctions=False))
        b = solve(g0, SolverOptions(n_target=50, eigenfunctions=False))
        assert cesaro_gap_mean(a, b, 50) == pytest.approx(0.3, rel=1e-10)


class TestLocalWeyl:
    def test_neumann_interval(self, neumann_pi):
        assert local_weyl_mean(neumann_pi, 1.0, 3000) == pytest.approx(1 / PI, rel=2e-3)
        # (1/N)(1/pi + (N - 1) 2/pi) at the end point
        assert local_weyl_mean(neumann_pi, 0.0, 3000) == pytest.approx((2 - 1 / 3000) / PI, rel=1e-10)
        assert local_weyl_mean(neumann_pi, 1.0, 1) == pytest.approx(1 / PI, rel=1e-12)

    def test_prediction_degrees(self):
        g = build_path_graph([1.0, 1.0], [0.0, 1.0, 0.0])
        assert local_weyl_prediction(g, 0.0) == pytest.approx(1.0)
        assert local_weyl_prediction(g, 1.0) == pytest.approx(0.5)
        assert local_weyl_prediction(g, 2.0) == pytest.approx(1.0)
        s = star_graph([1.0, 1.0, 1.0])
        from qglab.graph import GraphPoint

        assert local_weyl_prediction(s, GraphPoint(0, 0.0)) == pytest.approx(2 / 9)

    def test_uniform_bound(self, neumann_pi):
        rep = uniform_bound_check(neumann_pi, [0.0, 1.0, 2.0], [1, 10, 100, 1000])
        assert rep.max_value == pytest.approx((2 - 1 / 1000) / PI, rel=1e-10)
        assert rep.argmax_x == 0.0 and rep.passed
        rng = np.random.default_rng(5)
        g = build_path_graph(rng.uniform(0.3, 1.0, 4), rng.uniform(0, 3, 5))
        spec = solve(g, SolverOptions(n_target=50))
        xs = np.linspace(0, g.total_length, 100)
        rep = uniform_bound_check(spec, xs, range(1, 51))
        assert math.isfinite(rep.max_value) and rep.passed

    def test_dirichlet_vertex_summand(self):
        g = build_path_graph([1.0, 1.0], [0.0, math.inf, 0.0])
        spec = solve(g, SolverOptions(n_target=20))
        assert local_weyl_mean(spec, 1.0, 20) == 0.0

    def test_karamata(self):
        g = truncate_family(PathFamily(), SigmaSequence("geometric", scale=1.0, ratio=0.5), 6)
        spec = solve(g, SolverOptions(n_target=2000, eigenfunctions=False))
        assert karamata_deviation(spec, 2000) <= 0.1


class TestHeat:
    def test_large_time_ground_state(self, neumann_pi):
        assert heat_diag(neumann_pi, 50.0, 1.3).value == pytest.approx(1 / PI, rel=1e-12)

    def test_reflection_symmetry(self, neumann_pi):
        for x in (0.2, 1.0, 1.5):
            for t in (1e-3, 1e-2, 0.3):
                a = heat_diag(neumann_pi, t, x).value * PI
                b = heat_diag(neumann_pi, t, PI - x).value * PI
                assert abs(a - b) <= 1e-10

    def test_theta_function_value(self, neumann_pi):
        # free Neumann interval: p(t; x, x) by the method of images
        t, x = 0.01, 0.7
        n = np.arange(-20, 21)
        images = np.exp(-(2 * n * PI) ** 2 / (4 * t)) + np.exp(-(2 * x + 2 * n * PI) ** 2 / (4 * t))
        ref = images.sum() / math.sqrt(4 * PI * t)
        assert heat_diag(neumann_pi, t, x).value == pytest.approx(ref, rel=1e-10)

    def test_dirichlet_vertex_zero(self):
        g = build_path_graph([1.0, 1.0], [0.0, math.inf, 0.0])
        spec = solve(g, SolverOptions(n_target=200))
        assert heat_diag(spec, 0.01, 1.0).value == 0.0

    def test_needs_enough_terms(self):
        spec = solve(build_path_graph([PI], [0.0]), SolverOptions(n_target=20))
        with pytest.raises(InsufficientSpectrumError):
            heat_diag(spec, 1e-4, 1.0)
        with pytest.raises(ValueError):
            heat_diag(spec, 0.0, 1.0)

    def test_bracketing_trivial_cases(self):
        opts = SolverOptions(n_target=800)
        g = build_path_graph([1.0, 1.2, 0.9], [0.0, 0.0, 0.0, 0.0])
        lo, hi = heat_bracket_graphs(g, 1.5)
        s, s_lo, s_hi = solve(g, opts), solve(lo, opts), solve(hi, opts)
        assert heat_diag(s, 0.01, 1.5).value == pytest.approx(heat_diag(s_hi, 0.01, 1.5).value, rel=1e-12)
        assert heat_bracketing_check(s, s_hi, s_lo, 0.01, 1.5)
        d = build_path_graph([1.0, 1.2, 0.9], [math.inf] * 4, right_condition=None)
        lo, hi = heat_bracket_graphs(d, 1.5)
        assert lo.conditions == d.conditions
        sd = solve(d, opts)
        assert heat_bracketing_check(sd, solve(hi, opts), solve(lo, opts), 0.01, 1.5)

    def test_bracket_graphs_keep_nearest_vertex(self):
        g = build_path_graph([1.0, 1.0, 1.0], [0.5, 1.0, 2.0, 3.0])
        lo, hi = heat_bracket_graphs(g, 1.2)
        assert lo.conditions == [Dirichlet(), Delta(1.0), Dirichlet(), Dirichlet()]
        assert all(c == Delta(0.0) for c in hi.conditions)


class TestModifiedNormalizer:
    def test_boundary(self):
        assert modified_normalizer(math.e) == pytest.approx(math.e**2, rel=1e-14)
        with pytest.raises(ValueError):
            modified_normalizer(2.0)

    @pytest.mark.parametrize("N", [10.0, 1e3, 1e6])
    def test_round_trip(self, N):
        lam = modified_normalizer(N)
        assert abs(0.5 * math.sqrt(lam) * math.log(lam) - N) <= 1e-10 * N

    def test_against_bisection(self):
        f = lambda lam: 0.5 * math.sqrt(lam) * math.log(lam) - 27
        lo, hi = math.e**2, 1e4
        while hi - lo > 1e-12 * hi:
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if f(mid) < 0 else (lo, mid)
        assert modified_normalizer(27) == pytest.approx(0.5 * (lo + hi), rel=1e-11)

    def test_increasing_on_log_grid(self):
        N = np.geomspace(10, 1e8, 200)
        tab = ModifiedNormalizer.tabulate(N)
        assert np.all(np.diff(tab.lam) > 0)
        assert np.all(tab.lam > math.e)
        assert tab(1e3) == pytest.approx(modified_normalizer(1e3))

    def test_modified_mean_on_exact_data(self):
        spec = exact_harmonic_spectrum(_harmonic_cells_for(2000), 2000)
        assert spec.meta["exact"]
        assert not exact_harmonic_spectrum(_harmonic_cells_for(2000) - 1, 2000).meta["exact"]
        m = modified_local_weyl(spec, PI / 2, 2000)
        assert abs(m - 1 / PI) <= 0.1 / PI
        assert modified_local_weyl(spec, PI, 2000) == 0.0

    def test_exact_harmonic_data(self):
        spec = exact_harmonic_spectrum(4)
        np.testing.assert_array_equal(spec.eigenvalues[:6], [1, 4, 4, 9, 9, 16])
        assert spec.meta["exact"]
        assert not exact_harmonic_spectrum(2, 50).meta["exact"]
        np.testing.assert_allclose(quadrature_norms(spec), 1.0, rtol=1e-12)
