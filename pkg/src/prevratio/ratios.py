"""Prevalence ratios derived from a fitted logistic model.

Two adjusted estimators are provided. The conditional ratio (CPR) fixes
every covariate at its weighted mean and contrasts the predicted
prevalence at exposure 1 versus exposure 0. The marginal ratio (MPR)
toggles the exposure for every observed row, averages the predicted
prevalences, and takes the ratio of the averages. Both carry first-order
delta-method standard errors propagated through the model's coefficient
covariance, with Wald intervals built on the log scale. The prevalence
odds ratio (POR) and a case-resampling percentile bootstrap round out the
module.

The exposure contrast is always 1 versus 0; for a continuous exposure
that reads as a one-unit increase from zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from scipy.special import expit

from .data import Dataset, EXPOSURE_COL, INTERCEPT_NAME, covariate_means
from .errors import DegenerateDenominatorError, NonConvergenceError, PrevRatioError
from .glm import FitResult, fit_glm
from .variance import (IntervalEstimate, interval_from_log_scale,
                       normal_quantile, sandwich_vcov, wald_ci_log_scale)

METHOD_LABELS = (
    "POR", "CPR", "MPR", "LogBinomial", "RobustPoisson",
    "MantelHaenszel", "Schouten", "Crude",
)

_MIN_DENOMINATOR = 1e-12


@dataclass(frozen=True)
class PrEstimate:
    """A labeled ratio estimate with its interval and free-form notes."""

    method: str
    interval: IntervalEstimate
    exposure: str
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHOD_LABELS:
            raise ValueError(f"unknown method label {self.method!r}")

    @property
    def point(self) -> float:
        return self.interval.point


def _require_logistic(fit: FitResult) -> None:
    if fit.family_link != "binomial-logit":
        raise ValueError(
            f"this estimator needs a binomial-logit fit, got {fit.family_link!r}"
        )
    if not fit.converged:
        raise ValueError("fit did not converge")


def _predictor_index(ds: Dataset, predictor: str | None) -> int:
    if predictor is None:
        return EXPOSURE_COL
    k = ds.column_index(predictor)
    if k == 0:
        raise ValueError("the intercept is not a predictor")
    return k


def _conditioning_point(ds: Dataset, k: int,
                        at: Mapping[str, float] | None) -> np.ndarray:
    xbar = covariate_means(ds)
    if at:
        for name, value in at.items():
            j = ds.column_index(name)
            if j == 0:
                raise ValueError("cannot condition on the intercept")
            if j == k:
                raise ValueError(
                    f"{name!r} is the contrasted predictor; its value is set "
                    "by the 1-vs-0 contrast"
                )
            xbar[j] = float(value)
    return xbar


def _delta_interval(pr: float, grad: np.ndarray, vcov: np.ndarray,
                    level: float) -> tuple[IntervalEstimate, float]:
    var = float(grad @ vcov @ grad)
    se = math.sqrt(max(var, 0.0))
    # a near-separated fit can make se/pr so large that the log-scale
    # bounds leave the representable range; surface that as degeneracy
    z = normal_quantile((1.0 + level) / 2.0)
    if not math.isfinite(se) or z * se / pr + abs(math.log(pr)) > 700.0:
        raise DegenerateDenominatorError(
            f"delta-method standard error {se:g} overwhelms the estimate "
            f"{pr:g}; the fit looks separated"
        )
    return wald_ci_log_scale(pr, se, level), se


def conditional_pr(fit: FitResult, ds: Dataset, level: float = 0.95, *,
                   predictor: str | None = None,
                   at: Mapping[str, float] | None = None) -> PrEstimate:
    """Prevalence ratio at fixed covariate values (weighted means by default).

    ``at`` overrides individual conditioning values by column name, for
    higher- or lower-risk scenarios than the average profile.
    """
    _require_logistic(fit)
    k = _predictor_index(ds, predictor)
    beta = fit.beta
    xbar = _conditioning_point(ds, k, at)

    x1 = xbar.copy()
    x1[k] = 1.0
    x0 = xbar.copy()
    x0[k] = 0.0
    p1 = float(expit(x1 @ beta))
    p0 = float(expit(x0 @ beta))
    if p0 < _MIN_DENOMINATOR:
        raise DegenerateDenominatorError(
            f"unexposed prevalence at the conditioning point is {p0:g}"
        )
    pr = p1 / p0
    grad_p1 = x1 * (p1 * (1.0 - p1))
    grad_p0 = x0 * (p0 * (1.0 - p0))
    grad = (grad_p1 * p0 - grad_p0 * p1) / p0**2
    interval, se = _delta_interval(pr, grad, fit.vcov, level)
    conditioning = {name: float(v) for name, v in zip(ds.column_names, xbar)
                    if name != INTERCEPT_NAME}
    conditioning.pop(ds.column_names[k], None)
    return PrEstimate(
        method="CPR",
        interval=interval,
        exposure=ds.column_names[k],
        metadata={
            "se_scale": "ratio",
            "contrast": "1 vs 0",
            "conditioning": conditioning,
            "p_exposed": p1,
            "p_unexposed": p0,
            "gradient": grad,
        },
    )


def marginal_pr(fit: FitResult, ds: Dataset, level: float = 0.95, *,
                predictor: str | None = None) -> PrEstimate:
    """Ratio of average predicted prevalences with the exposure toggled.

    Averages over the observed covariate distribution use the prior
    weights when present.
    """
    _require_logistic(fit)
    k = _predictor_index(ds, predictor)
    beta = fit.beta
    w = ds.weights
    wsum = float(w.sum())

    def arm(value: float) -> tuple[float, np.ndarray]:
        X = np.array(ds.X)
        X[:, k] = value
        p = expit(X @ beta)
        avg = float((w * p).sum() / wsum)
        grad = (X * (w * p * (1.0 - p))[:, None]).sum(axis=0) / wsum
        return avg, grad

    p1, grad_p1 = arm(1.0)
    p0, grad_p0 = arm(0.0)
    if p0 < _MIN_DENOMINATOR:
        raise DegenerateDenominatorError(
            f"average unexposed prevalence is {p0:g}"
        )
    pr = p1 / p0
    grad = (grad_p1 * p0 - grad_p0 * p1) / p0**2
    interval, se = _delta_interval(pr, grad, fit.vcov, level)
    return PrEstimate(
        method="MPR",
        interval=interval,
        exposure=ds.column_names[k],
        metadata={
            "se_scale": "ratio",
            "contrast": "1 vs 0",
            "p_exposed": p1,
            "p_unexposed": p0,
            "gradient": grad,
        },
    )


def prevalence_odds_ratio(fit: FitResult, level: float = 0.95, *,
                          predictor: str | None = None) -> PrEstimate:
    """exp(beta) for the exposure, with a log-scale Wald interval."""
    _require_logistic(fit)
    if predictor is None:
        k = EXPOSURE_COL
    else:
        k = fit.column_names.index(predictor)
        if k == 0:
            raise ValueError("the intercept is not a predictor")
    b = float(fit.beta[k])
    se_log = math.sqrt(float(fit.vcov[k, k]))
    interval = interval_from_log_scale(b, se_log, level)
    return PrEstimate(
        method="POR",
        interval=interval,
        exposure=fit.column_names[k],
        metadata={"se_scale": "log"},
    )


def log_binomial_pr(ds: Dataset, level: float = 0.95) -> PrEstimate:
    """Prevalence ratio from a binomial GLM with a log link.

    The exposure coefficient is the log PR directly, with a model-based
    Wald interval. This is the estimator that can fail to converge when
    fitted prevalences are pushed toward 1; failures propagate.
    """
    fit = fit_glm(ds, "binomial-log")
    k = EXPOSURE_COL
    b = float(fit.beta[k])
    se_log = math.sqrt(float(fit.vcov[k, k]))
    interval = interval_from_log_scale(b, se_log, level)
    return PrEstimate(
        method="LogBinomial",
        interval=interval,
        exposure=ds.exposure_name,
        metadata={"se_scale": "log", "iterations": fit.iterations},
    )


def robust_poisson_pr(ds: Dataset, level: float = 0.95) -> PrEstimate:
    """Prevalence ratio from a Poisson GLM on binary data with sandwich SEs.

    The Poisson variance is misspecified for a 0/1 outcome, so the
    model-based covariance is replaced by the HC0 sandwich before the
    Wald interval is built.
    """
    fit = fit_glm(ds, "poisson-log")
    robust = sandwich_vcov(fit, ds)
    k = EXPOSURE_COL
    b = float(fit.beta[k])
    se_log = math.sqrt(float(robust[k, k]))
    interval = interval_from_log_scale(b, se_log, level)
    return PrEstimate(
        method="RobustPoisson",
        interval=interval,
        exposure=ds.exposure_name,
        metadata={"se_scale": "log", "variance": "HC0 sandwich"},
    )


def _percentile_interval(point: float, draws: np.ndarray,
                         level: float) -> IntervalEstimate:
    alpha = (1.0 - level) / 2.0
    lower, upper = np.quantile(draws, [alpha, 1.0 - alpha])
    se = float(np.std(draws, ddof=1)) if len(draws) > 1 else 0.0
    return IntervalEstimate(point=point, se=se, lower=float(lower),
                            upper=float(upper), level=level)


def bootstrap_pr(ds: Dataset, estimator: str, reps: int, *, seed: int,
                 level: float = 0.95,
                 at: Mapping[str, float] | None = None) -> PrEstimate:
    """Case-resampling percentile bootstrap for the CPR or MPR.

    The point estimate stays the full-data estimate; the interval comes
    from the percentiles of the replicate estimates. Replicate r draws its
    resample from an independent substream derived from (seed, r), so the
    result does not depend on execution order. Replicates whose refit
    fails are dropped and counted; more than 20% failures is an error.
    """
    if estimator not in ("CPR", "MPR"):
        raise ValueError(f"estimator must be 'CPR' or 'MPR', got {estimator!r}")
    if reps < 100:
        raise ValueError(f"need at least 100 bootstrap replicates, got {reps}")

    def estimate(data: Dataset) -> float:
        f = fit_glm(data, "binomial-logit")
        if estimator == "CPR":
            return conditional_pr(f, data, level, at=at).point
        return marginal_pr(f, data, level).point

    full = estimate(ds)
    n = ds.n
    draws = []
    failures = 0
    for r in range(reps):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,)))
        idx = rng.integers(0, n, size=n)
        try:
            draws.append(estimate(ds.take_rows(idx)))
        except PrevRatioError:
            failures += 1
    if failures > 0.2 * reps:
        raise NonConvergenceError(
            f"{failures} of {reps} bootstrap replicates failed to converge; "
            "resampling is unstable on this dataset"
        )
    interval = _percentile_interval(full, np.array(draws), level)
    return PrEstimate(
        method=estimator,
        interval=interval,
        exposure=ds.exposure_name,
        metadata={
            "se_scale": "ratio",
            "interval_type": "percentile bootstrap",
            "replicates": reps,
            "failed_replicates": failures,
            "seed": seed,
        },
    )
