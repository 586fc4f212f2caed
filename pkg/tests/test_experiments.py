import math

import numpy as np
import pytest

from hlgap import EnsembleParams, ParameterError
from hlgap.experiments import (
    DensityCurve,
    ExperimentConfig,
    Grid,
    default_grid,
    histogram,
    l1_distance,
    run_density_experiment,
    run_fermi_fluctuation_experiment,
    run_gap_experiment,
    run_number_variance_experiment,
    run_prediction,
)

# Same c and shift as (omega=1, omega_tilde=0.04, g=8) with negligible block noise
C_FIG = 0.04 / 1.04
W_STIFF = 1000.0
FIG_PARAMS = EnsembleParams(28, 14, W_STIFF, C_FIG * W_STIFF / (W_STIFF - C_FIG), 8 * W_STIFF**2)


class TestHistogram:
    def test_single_value(self):
        curve, of = histogram([0.5], Grid(0.0, 1.0, 1), 1.0)
        assert curve.values.tolist() == [1.0] and of == 0

    def test_uniform(self):
        u = np.random.default_rng(0).uniform(size=100_000)
        curve, _ = histogram(u, Grid(0.0, 1.0, 10), 1.0)
        assert np.all(np.abs(curve.values - 1.0) < 0.05)

    def test_overflow(self):
        vals = [-2.0, -0.5, 0.1, 0.2, 0.9, 1.0, 3.0]
        curve, of = histogram(vals, Grid(0.0, 1.0, 4), 2.0)
        # numpy includes the right edge in the last bin
        assert of == 3
        assert curve.values.sum() * 0.25 == pytest.approx(2.0)

    def test_empty_input(self):
        with pytest.raises(ParameterError):
            histogram([], Grid(0.0, 1.0, 4), 1.0)
        curve, of = histogram([], Grid(0.0, 1.0, 4), 0.0)
        assert of == 0 and not curve.values.any()

    def test_non_finite(self):
        with pytest.raises(ParameterError):
            histogram([np.nan], Grid(0.0, 1.0, 4), 1.0)


class TestL1:
    x = np.round(np.arange(-1, 5.0001, 0.01), 10)

    def test_identical(self):
        a = DensityCurve(self.x, np.exp(-self.x), 1.0)
        assert l1_distance(a, a) == 0.0

    def test_disjoint(self):
        a = DensityCurve(self.x, np.clip(1 - np.abs(self.x - 1), 0, None), 1.0)
        b = DensityCurve(self.x, np.clip(1 - np.abs(self.x - 3), 0, None), 1.0)
        assert a.integral() == pytest.approx(1.0) and b.integral() == pytest.approx(1.0)
        assert l1_distance(a, b) == pytest.approx(2.0, abs=1e-12)

    def test_half_overlap(self):
        box_a = ((self.x >= 0) & (self.x <= 1)).astype(float)
        box_b = ((self.x >= 0.5) & (self.x <= 1.5)).astype(float)
        a, b = DensityCurve(self.x, box_a, 1.0), DensityCurve(self.x, box_b, 1.0)
        assert l1_distance(a, b) == pytest.approx(1.0, abs=1e-9)

    def test_grid_mismatch(self):
        a = DensityCurve(self.x, np.ones_like(self.x), 4.0)
        b = DensityCurve(self.x + 0.001, np.ones_like(self.x), 4.0)
        with pytest.raises(ParameterError):
            l1_distance(a, b)


class TestConfig:
    def test_default_grid_covers(self):
        p = EnsembleParams(10, 5, 2.0, 1.0, 3.0)
        g = ExperimentConfig(p, 5).grid
        half = p.radius + 3 / math.sqrt(2.0) + p.shift
        assert g.xmin == pytest.approx(-half) and g.xmax == pytest.approx(half) and g.bins == 101

    @pytest.mark.parametrize(
        "kw",
        [
            {"n_samples": 0},
            {"n_samples": 5, "grid": Grid(-100, 100, 9)},
            {"n_samples": 5, "grid": Grid(-1, 1, 50)},
            {"n_samples": 5, "rho0": "bogus"},
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ParameterError):
            ExperimentConfig(EnsembleParams(10, 5, 2.0, 1.0), **kw)


class TestDensityExperiment:
    def test_small_run(self):
        p = EnsembleParams(8, 4, 2.0, 1.0)
        r1 = run_density_experiment(ExperimentConfig(p, 2000, seed=9))
        r2 = run_density_experiment(ExperimentConfig(p, 2000, seed=9))
        assert list(r1.curves) == ["rho_empirical", "rho_finite_n", "rho_semicircle"]
        emp = r1.curves["rho_empirical"]
        assert emp.values.sum() * ExperimentConfig(p, 1).grid.width == pytest.approx(8.0, abs=1e-12)
        for k in r1.curves:
            assert np.array_equal(r1.curves[k].values, r2.curves[k].values)
        assert {k: v for k, v in r1.scalars.items()} == r2.scalars
        assert r1.scalars["mean_trace_sq"] == pytest.approx(r1.scalars["mean_trace_sq_predicted"], rel=0.05)

    def test_sample_count_scaling(self):
        p = EnsembleParams(8, 4, 2.0, 1.0)

        def med(ns):
            return np.median(
                [run_density_experiment(ExperimentConfig(p, ns, seed=s)).scalars["l1_finite_n"] for s in range(5)]
            )

        assert med(500) / med(8000) >= 2.5


class TestGapExperiment:
    def test_masses_and_schema(self):
        p = EnsembleParams(12, 5, 1.0, 0.1, 8.0)
        r = run_gap_experiment(ExperimentConfig(p, 300, seed=1))
        assert list(r.curves) == ["filled_empirical", "filled_analytic", "empty_empirical", "empty_analytic"]
        assert r.scalars["filled_mass"] == pytest.approx(5.0, abs=1e-12)
        assert r.scalars["empty_mass"] == pytest.approx(7.0, abs=1e-12)
        assert r.scalars["filled_mass"] + r.scalars["empty_mass"] == pytest.approx(12.0, abs=1e-12)
        for key in ("l1_filled", "l1_empty", "gap_width_empirical", "gap_width_predicted", "mu_f", "omega_f"):
            assert key in r.scalars

    def test_regime_warnings_not_fatal(self):
        p = EnsembleParams(12, 6, 1.0, 2.0, 0.5)
        r = run_gap_experiment(ExperimentConfig(p, 50, seed=1))
        assert r.warnings and not r.scalars["regime_ok"]

    @pytest.mark.parametrize("nf", [0, 12])
    def test_needs_both_sectors(self, nf):
        with pytest.raises(ParameterError):
            run_gap_experiment(ExperimentConfig(EnsembleParams(12, nf, 1.0, 0.1, 8.0), 10))

    def test_zero_coupling_matches_density(self):
        p = EnsembleParams(28, 14, 1.0, 0.04, 0.0)
        cfg = ExperimentConfig(p, 10_000, seed=2)
        gap = run_gap_experiment(cfg)
        dens = run_density_experiment(cfg)
        both = DensityCurve(
            gap.x, gap.curves["filled_empirical"].values + gap.curves["empty_empirical"].values, p.n
        )
        assert l1_distance(both, dens.curves["rho_empirical"]) / p.n <= 0.05

    def test_edges_centred_on_fermi_level(self):
        r = run_gap_experiment(ExperimentConfig(FIG_PARAMS, 4000, seed=4))
        s = r.scalars
        assert abs(s["gap_midpoint_empirical"] - s["mu_f"]) <= 2 * s["bin_width"]


class TestFermiFluctuation:
    def test_symmetric_mean(self):
        r = run_fermi_fluctuation_experiment(ExperimentConfig(EnsembleParams(64, 32, 1.0, 1.0), 10_000, seed=5))
        s = r.scalars
        assert abs(s["mu_mean"]) <= 3 * s["mu_stderr"]
        assert abs(s["skewness"]) < 0.1

    def test_three_quarter_mean(self):
        r = run_fermi_fluctuation_experiment(ExperimentConfig(EnsembleParams(64, 48, 1.0, 1.0), 10_000, seed=6))
        s = r.scalars
        assert abs(s["mu_mean"] - s["mu_f_predicted"]) <= 3 * s["mu_stderr"]

    def test_combined_ensemble(self):
        p = EnsembleParams(16, 8, 1.0, 1.0)
        r = run_fermi_fluctuation_experiment(ExperimentConfig(p, 200, seed=1, ensemble="combined"))
        assert r.scalars["stiffness"] == p.c


class TestNumberVariance:
    def test_full_support(self):
        r = run_number_variance_experiment(16, 1.0, (-1e6, 1e6), n_samples=200, seed=1)
        assert r.scalars["var_count"] == 0.0 and r.scalars["mean_count"] == 16.0

    def test_non_negative_and_half_filled(self):
        r = run_number_variance_experiment(32, 2.0, n_samples=500, seed=2)
        assert r.scalars["var_count"] >= 0
        assert r.scalars["mean_count"] == pytest.approx(16, abs=0.5)
        assert r.curves["p_empirical"].values.sum() == pytest.approx(1.0)


def test_prediction_report():
    p = EnsembleParams(16, 8, 2.0, 2.0, 0.0)
    r = run_prediction(ExperimentConfig(p, 1))
    assert r.scalars["mu_f"] == 0.0 and r.manifest["prediction"]["mu_f"] == 0.0
    x = r.x
    assert np.array_equal(x, default_grid(p).centers)
