import json
import math

import numpy as np
import pytest

from prevratio import (ToyConfig, dgp_coefficients, replication_study,
                       simulate_toy, true_conditional_pr, true_marginal_pr)

LOGIT_02 = math.log(0.2 / 0.8)


class TestToyConfig:
    def test_defaults(self):
        cfg = ToyConfig()
        assert cfg.n == 1000
        assert cfg.baseline_prevalence == 0.2
        assert cfg.pr_at_z0 == 2.0

    def test_rejects_implied_prevalence_at_or_above_one(self):
        with pytest.raises(ValueError, match="implied"):
            ToyConfig(baseline_prevalence=0.6, pr_at_z0=2.0)

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            ToyConfig(n=0)
        with pytest.raises(ValueError):
            ToyConfig(p_exposure=1.0)


class TestCoefficients:
    def test_default_values(self):
        b0, b1, b2 = dgp_coefficients(ToyConfig())
        assert b0 == pytest.approx(LOGIT_02, abs=1e-15)
        # odds(0.4)/odds(0.2) = (2/3)/(1/4) = 8/3
        assert b1 == pytest.approx(math.log(8.0 / 3.0), abs=1e-14)
        assert b2 == 0.2

    def test_unit_ratio_gives_zero_slope(self):
        _, b1, _ = dgp_coefficients(ToyConfig(pr_at_z0=1.0))
        assert b1 == pytest.approx(0.0, abs=1e-15)


class TestTrueConditionalPr:
    def test_at_zero_recovers_design_ratio(self):
        coeffs = dgp_coefficients(ToyConfig())
        assert true_conditional_pr(coeffs, 0.0) == pytest.approx(2.0, abs=1e-12)

    def test_at_one(self):
        coeffs = dgp_coefficients(ToyConfig())
        assert round(true_conditional_pr(coeffs, 1.0), 4) == 1.9186

    def test_attenuates_toward_one(self):
        coeffs = dgp_coefficients(ToyConfig())
        grid = [true_conditional_pr(coeffs, z) for z in np.linspace(0.0, 60.0, 121)]
        assert all(a > b for a, b in zip(grid, grid[1:]))
        assert grid[-1] == pytest.approx(1.0, abs=1e-4)


class TestTrueMarginalPr:
    def test_zero_covariate_effect_collapses_to_conditional(self):
        coeffs = dgp_coefficients(ToyConfig(beta_z=0.0))
        assert true_marginal_pr(coeffs) == pytest.approx(2.0, abs=1e-12)

    def test_default_value_and_bracketing(self):
        coeffs = dgp_coefficients(ToyConfig())
        mpr = true_marginal_pr(coeffs)
        assert 1.75 < mpr < 2.22
        assert true_conditional_pr(coeffs, 3.0) < mpr < true_conditional_pr(coeffs, -3.0)

    def test_node_count_converged(self):
        coeffs = dgp_coefficients(ToyConfig())
        assert abs(true_marginal_pr(coeffs, nodes=80)
                   - true_marginal_pr(coeffs, nodes=160)) < 1e-10

    def test_against_trapezoid_oracle(self):
        b0, b1, b2 = dgp_coefficients(ToyConfig())
        z = np.linspace(-10.0, 10.0, 200001)
        phi = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        p1 = 1.0 / (1.0 + np.exp(-(b0 + b1 + b2 * z)))
        p0 = 1.0 / (1.0 + np.exp(-(b0 + b2 * z)))
        oracle = np.trapezoid(p1 * phi, z) / np.trapezoid(p0 * phi, z)
        assert true_marginal_pr((b0, b1, b2)) == pytest.approx(oracle, abs=1e-8)

    def test_rejects_coarse_grids(self):
        with pytest.raises(ValueError):
            true_marginal_pr(dgp_coefficients(ToyConfig()), nodes=39)


class TestSimulateToy:
    def test_same_seed_identical(self):
        a = simulate_toy(ToyConfig(n=500, seed=7))
        b = simulate_toy(ToyConfig(n=500, seed=7))
        assert np.array_equal(a.y, b.y)
        assert np.array_equal(a.X, b.X)

    def test_replicates_differ(self):
        a = simulate_toy(ToyConfig(n=500, seed=7), replicate=0)
        b = simulate_toy(ToyConfig(n=500, seed=7), replicate=1)
        assert not np.array_equal(a.y, b.y)

    def test_shape_and_names(self):
        ds = simulate_toy(ToyConfig(n=200, seed=3))
        assert ds.n == 200
        assert ds.column_names[1:] == ("x", "z")
        assert set(np.unique(ds.X[:, 1])) <= {0.0, 1.0}

    def test_exposure_rate_near_half(self):
        ds = simulate_toy(ToyConfig(n=4000, seed=11))
        assert abs(ds.X[:, 1].mean() - 0.5) < 3.0 * math.sqrt(0.25 / 4000)

    def test_baseline_prevalence_matches_design(self):
        ds = simulate_toy(ToyConfig(n=100000, seed=2))
        mask = (ds.X[:, 1] == 0.0) & (np.abs(ds.X[:, 2]) < 0.05)
        assert abs(ds.y[mask].mean() - 0.2) < 0.02


@pytest.fixture(scope="module")
def small_study():
    return replication_study(ToyConfig(n=400, seed=9), reps=100,
                             methods=("CPR", "MPR", "POR"))


class TestReplicationStudy:
    def test_rejects_small_runs(self):
        with pytest.raises(ValueError, match="100"):
            replication_study(ToyConfig(n=200), reps=50)

    def test_rejects_stratified_method(self):
        with pytest.raises(ValueError, match="MantelHaenszel"):
            replication_study(ToyConfig(n=200), reps=100,
                              methods=("MantelHaenszel",))

    def test_counts_add_up(self, small_study):
        for s in small_study.summaries:
            assert s.n_ok + s.n_failed == 100
            assert 0.0 <= s.coverage <= 1.0

    def test_truth_block_consistent(self, small_study):
        coeffs = dgp_coefficients(ToyConfig(n=400, seed=9))
        truth = small_study.truth
        assert truth["true_mpr"] == pytest.approx(true_marginal_pr(coeffs))
        assert truth["por_target"] == pytest.approx(math.exp(coeffs[1]))
        assert truth["true_cpr_at_z0"] == pytest.approx(
            true_conditional_pr(coeffs, 0.0))
        assert len(small_study.replicate_true_cpr) == 100

    def test_bit_reproducible(self, small_study):
        again = replication_study(ToyConfig(n=400, seed=9), reps=100,
                                  methods=("CPR", "MPR", "POR"))
        assert again.to_json() == small_study.to_json()

    def test_json_round_trip(self, small_study):
        blob = json.loads(small_study.to_json())
        assert blob["study"]["replicates"] == 100
        assert {m["method"] for m in blob["methods"]} == {"CPR", "MPR", "POR"}

    def test_text_table_lists_methods(self, small_study):
        text = small_study.to_text()
        for m in ("CPR", "MPR", "POR"):
            assert m in text
        assert text == small_study.to_text()

    def test_unknown_summary_is_keyerror(self, small_study):
        with pytest.raises(KeyError):
            small_study.summary("LogBinomial")

    def test_crude_method_supported(self):
        rep = replication_study(ToyConfig(n=300, seed=4), reps=100,
                                methods=("Crude",))
        s = rep.summary("Crude")
        assert s.n_ok > 90
        assert s.mean_estimate == pytest.approx(rep.truth["true_mpr"], abs=0.2)
