import math

import numpy as np
import pytest
from scipy.special import expit

from prevratio import (Dataset, DegenerateDenominatorError, FitResult,
                       INTERCEPT_NAME, NonConvergenceError, StratifiedTable,
                       ToyConfig, bootstrap_pr, conditional_pr, crude_pr,
                       fit_glm, log_binomial_pr, marginal_pr,
                       prevalence_odds_ratio, robust_poisson_pr, simulate_toy)
from prevratio.ratios import _percentile_interval
from conftest import table_dataset, random_logistic_dataset


def fake_logistic_fit(beta, vcov=None, names=None):
    beta = np.asarray(beta, dtype=float)
    p = len(beta)
    names = names or (INTERCEPT_NAME, "x") + tuple(f"z{j}" for j in range(p - 2))
    return FitResult(
        family_link="binomial-logit", beta=beta,
        vcov=np.eye(p) if vcov is None else vcov,
        converged=True, iterations=1, deviance=0.0, n_used=1,
        column_names=names, fitted=np.array([]), deviance_path=(0.0,),
    )


class TestExposureOnlyModel:
    """With no covariates every logistic-based ratio collapses to the crude PR."""

    def setup_method(self):
        self.ds = table_dataset(40, 60, 20, 80)
        self.fit = fit_glm(self.ds, "binomial-logit")

    def test_cpr_equals_crude(self):
        assert conditional_pr(self.fit, self.ds).point == pytest.approx(2.0, abs=1e-10)

    def test_mpr_equals_crude(self):
        assert marginal_pr(self.fit, self.ds).point == pytest.approx(2.0, abs=1e-10)

    def test_cpr_equals_mpr_tightly(self):
        c = conditional_pr(self.fit, self.ds).point
        m = marginal_pr(self.fit, self.ds).point
        assert abs(c - m) < 1e-10

    def test_por_is_cross_product_ratio(self):
        por = prevalence_odds_ratio(self.fit)
        assert por.point == pytest.approx(8.0 / 3.0, abs=1e-8)

    def test_zero_effect_gives_unit_por(self):
        ds = table_dataset(30, 70, 30, 70)
        fit = fit_glm(ds, "binomial-logit")
        por = prevalence_odds_ratio(fit)
        assert por.point == pytest.approx(1.0, abs=1e-10)
        assert por.interval.lower * por.interval.upper == pytest.approx(1.0, abs=1e-8)


class TestConditionalPr:
    def test_matches_scalar_formula_at_weighted_means(self, toy_ds):
        fit = fit_glm(toy_ds, "binomial-logit")
        est = conditional_pr(fit, toy_ds)
        zbar = float(toy_ds.X[:, 2].mean())
        b0, b1, b2 = fit.beta
        expected = expit(b0 + b1 + b2 * zbar) / expit(b0 + b2 * zbar)
        assert est.point == pytest.approx(expected, rel=1e-12)
        assert est.metadata["conditioning"] == {"z": pytest.approx(zbar)}

    def test_at_override_moves_conditioning_point(self, toy_ds):
        fit = fit_glm(toy_ds, "binomial-logit")
        est = conditional_pr(fit, toy_ds, at={"z": 1.5})
        b0, b1, b2 = fit.beta
        expected = expit(b0 + b1 + b2 * 1.5) / expit(b0 + b2 * 1.5)
        assert est.point == pytest.approx(expected, rel=1e-12)

    def test_at_rejects_intercept_and_exposure(self, toy_ds):
        fit = fit_glm(toy_ds, "binomial-logit")
        with pytest.raises(ValueError):
            conditional_pr(fit, toy_ds, at={INTERCEPT_NAME: 1.0})
        with pytest.raises(ValueError):
            conditional_pr(fit, toy_ds, at={"x": 1.0})

    def test_requires_logistic_fit(self, toy_ds):
        pois = fit_glm(toy_ds, "poisson-log")
        with pytest.raises(ValueError):
            conditional_pr(pois, toy_ds)

    def test_requires_converged_fit(self, toy_ds):
        fit = fit_glm(toy_ds, "binomial-logit")
        stale = type(fit)(**{**fit.__dict__, "converged": False})
        with pytest.raises(ValueError):
            conditional_pr(stale, toy_ds)

    def test_degenerate_denominator(self):
        ds = table_dataset(3, 3, 3, 3)
        fit = fake_logistic_fit([-40.0, 1.0])
        with pytest.raises(DegenerateDenominatorError):
            conditional_pr(fit, ds)

    def test_por_cpr_identity(self, toy_ds):
        # POR = CPR * (1 - P0) / (1 - P1) at the conditioning point
        fit = fit_glm(toy_ds, "binomial-logit")
        cpr = conditional_pr(fit, toy_ds)
        por = prevalence_odds_ratio(fit)
        p1, p0 = cpr.metadata["p_exposed"], cpr.metadata["p_unexposed"]
        assert por.point == pytest.approx(cpr.point * (1 - p0) / (1 - p1), rel=1e-10)
        assert por.point > cpr.point


class TestMarginalPr:
    def test_matches_brute_force_averaging(self, toy_ds):
        fit = fit_glm(toy_ds, "binomial-logit")
        est = marginal_pr(fit, toy_ds)
        b = fit.beta
        p1 = np.mean([float(expit(b[0] + b[1] * 1.0 + b[2] * z))
                      for z in toy_ds.X[:, 2]])
        p0 = np.mean([float(expit(b[0] + b[2] * z)) for z in toy_ds.X[:, 2]])
        assert est.point == pytest.approx(p1 / p0, rel=1e-12)

    def test_weighted_averaging(self):
        # two covariate patterns with weights standing in for copies
        y = np.array([1.0, 0.0, 1.0, 0.0])
        x = np.array([1.0, 1.0, 0.0, 0.0])
        z = np.array([0.0, 2.0, 0.0, 2.0])
        w = np.array([3.0, 1.0, 1.0, 3.0])
        ds_w = Dataset(y=y, X=np.column_stack([np.ones(4), x, z]),
                       column_names=(INTERCEPT_NAME, "x", "z"), weights=w)
        idx = np.repeat(np.arange(4), w.astype(int))
        ds_e = Dataset(y=y[idx], X=np.column_stack([np.ones(8), x[idx], z[idx]]),
                       column_names=(INTERCEPT_NAME, "x", "z"))
        fit = fake_logistic_fit([-1.0, 0.8, 0.3])
        mw = marginal_pr(fit, ds_w)
        me = marginal_pr(fit, ds_e)
        assert mw.point == pytest.approx(me.point, rel=1e-14)
        assert mw.interval.se == pytest.approx(me.interval.se, rel=1e-12)

    def test_cpr_equals_mpr_when_covariates_constant(self, toy_ds):
        fit = fit_glm(toy_ds, "binomial-logit")
        n = 8
        X = np.column_stack([np.ones(n),
                             np.array([1.0, 0.0] * 4),
                             np.full(n, 0.5)])
        ds_const = Dataset(y=np.array([1.0, 0.0] * 4), X=X,
                           column_names=(INTERCEPT_NAME, "x", "z"))
        c = conditional_pr(fit, ds_const).point
        m = marginal_pr(fit, ds_const).point
        assert c == m


class TestAffineRecodingInvariance:
    def test_recoding_covariate_leaves_ratios_unchanged(self, toy_ds):
        fit = fit_glm(toy_ds, "binomial-logit")
        X2 = np.array(toy_ds.X)
        X2[:, 2] = 2.0 * X2[:, 2] - 3.0
        ds2 = Dataset(y=toy_ds.y, X=X2, column_names=toy_ds.column_names)
        fit2 = fit_glm(ds2, "binomial-logit")
        for est in (conditional_pr, marginal_pr):
            a = est(fit, toy_ds)
            b = est(fit2, ds2)
            assert b.point == pytest.approx(a.point, abs=1e-8)
            assert b.interval.se == pytest.approx(a.interval.se, abs=1e-8)


class TestDeltaGradients:
    """Delta-method gradients agree with central finite differences."""

    def numeric_gradient(self, pr_of_beta, beta):
        grad = np.zeros(len(beta))
        for k in range(len(beta)):
            h = 1e-5 * (1.0 + abs(beta[k]))
            up = np.array(beta)
            up[k] += h
            dn = np.array(beta)
            dn[k] -= h
            grad[k] = (pr_of_beta(up) - pr_of_beta(dn)) / (2.0 * h)
        return grad

    def cpr_of_beta(self, ds):
        xbar = (ds.X * ds.weights[:, None]).sum(axis=0) / ds.weights.sum()

        def f(beta):
            x1 = np.array(xbar)
            x1[1] = 1.0
            x0 = np.array(xbar)
            x0[1] = 0.0
            return float(expit(x1 @ beta) / expit(x0 @ beta))

        return f

    def mpr_of_beta(self, ds):
        def f(beta):
            X1 = np.array(ds.X)
            X1[:, 1] = 1.0
            X0 = np.array(ds.X)
            X0[:, 1] = 0.0
            w = ds.weights
            p1 = float((w * expit(X1 @ beta)).sum() / w.sum())
            p0 = float((w * expit(X0 @ beta)).sum() / w.sum())
            return p1 / p0

        return f

    @pytest.mark.parametrize("seed", range(6))
    def test_gradients_match_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        ds = random_logistic_dataset(rng, 250, int(rng.integers(1, 4)))
        fit = fit_glm(ds, "binomial-logit")
        cpr = conditional_pr(fit, ds)
        mpr = marginal_pr(fit, ds)
        for est, oracle in ((cpr, self.cpr_of_beta(ds)), (mpr, self.mpr_of_beta(ds))):
            grad = np.asarray(est.metadata["gradient"])
            num = self.numeric_gradient(oracle, fit.beta)
            assert np.abs(grad - num).max() <= 1e-6 * (1.0 + np.abs(num).max())


class TestModelComparators:
    def test_log_binomial_on_saturated_table_is_crude(self):
        ds = table_dataset(40, 60, 20, 80)
        est = log_binomial_pr(ds)
        assert est.point == pytest.approx(2.0, abs=1e-10)
        assert est.metadata["se_scale"] == "log"

    def test_robust_poisson_on_saturated_table(self):
        a, b, c, d = 40, 60, 20, 80
        ds = table_dataset(a, b, c, d, weighted=False)
        est = robust_poisson_pr(ds)
        assert est.point == pytest.approx(2.0, abs=1e-10)
        closed = math.sqrt(1 / a - 1 / (a + b) + 1 / c - 1 / (c + d))
        assert est.interval.se == pytest.approx(closed, abs=1e-8)

    def test_comparators_cluster_near_logistic_ratios(self, toy_ds):
        fit = fit_glm(toy_ds, "binomial-logit")
        mpr = marginal_pr(fit, toy_ds).point
        assert log_binomial_pr(toy_ds).point == pytest.approx(mpr, abs=0.05)
        assert robust_poisson_pr(toy_ds).point == pytest.approx(mpr, abs=0.05)


class TestBootstrap:
    def test_point_is_full_data_estimate(self, toy_ds):
        fit = fit_glm(toy_ds, "binomial-logit")
        delta = marginal_pr(fit, toy_ds)
        boot = bootstrap_pr(toy_ds, "MPR", 120, seed=3)
        assert boot.point == delta.point
        assert boot.metadata["interval_type"] == "percentile bootstrap"

    def test_same_seed_bit_identical(self, toy_ds):
        a = bootstrap_pr(toy_ds, "CPR", 110, seed=9)
        b = bootstrap_pr(toy_ds, "CPR", 110, seed=9)
        assert a.interval == b.interval

    def test_overlaps_delta_interval_with_similar_width(self, toy_ds):
        fit = fit_glm(toy_ds, "binomial-logit")
        delta = conditional_pr(fit, toy_ds)
        boot = bootstrap_pr(toy_ds, "CPR", 200, seed=13)
        assert boot.interval.lower < delta.interval.upper
        assert delta.interval.lower < boot.interval.upper
        ratio = boot.interval.width / delta.interval.width
        assert 0.8 <= ratio <= 1.25

    def test_rejects_small_reps_and_bad_estimator(self, toy_ds):
        with pytest.raises(ValueError):
            bootstrap_pr(toy_ds, "MPR", 99, seed=1)
        with pytest.raises(ValueError):
            bootstrap_pr(toy_ds, "POR", 100, seed=1)

    def test_unstable_resampling_raises(self):
        y = np.array([1.0, 1.0, 0.0, 0.0])
        x = np.array([1.0, 0.0, 1.0, 0.0])
        ds = Dataset(y=y, X=np.column_stack([np.ones(4), x]),
                     column_names=(INTERCEPT_NAME, "x"))
        with pytest.raises(NonConvergenceError):
            bootstrap_pr(ds, "CPR", 100, seed=0)

    def test_degenerate_draws_collapse_interval(self):
        iv = _percentile_interval(2.0, np.full(150, 2.0), 0.95)
        assert (iv.lower, iv.point, iv.upper) == (2.0, 2.0, 2.0)
        assert iv.se == 0.0


class TestCrudeReference:
    def test_crude_matches_hand_formula(self):
        est = crude_pr(StratifiedTable(((40.0, 60.0, 20.0, 80.0),)))
        assert est.point == pytest.approx(2.0, abs=1e-14)
        assert est.interval.se == pytest.approx(math.sqrt(0.055), abs=1e-12)
