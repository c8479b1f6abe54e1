"""Toy data-generating process, analytic truth values, and coverage studies.

The generator draws a binary exposure X, a standard-normal confounder Z,
and a binary outcome from a logistic model whose coefficients are pinned
down by three interpretable constraints: the unexposed prevalence at
Z = 0, the prevalence ratio at Z = 0, and the confounder coefficient.
Because the model is known, the conditional PR at any z and the marginal
PR over the Z distribution have analytic values, so replication studies
can measure bias and confidence-interval coverage exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.special import expit, logit, ndtri

from .classical import crude_pr, crude_table, schouten_pr
from .data import Dataset, INTERCEPT_NAME, ModelSpec
from .errors import PrevRatioError
from .glm import fit_glm
from .ratios import (conditional_pr, log_binomial_pr, marginal_pr,
                     prevalence_odds_ratio, robust_poisson_pr)

DEFAULT_STUDY_METHODS = ("CPR", "MPR", "POR", "LogBinomial",
                         "RobustPoisson", "Schouten")

_STUDY_METHODS = DEFAULT_STUDY_METHODS + ("Crude",)

_U_FLOOR = np.finfo(float).tiny


@dataclass(frozen=True)
class ToyConfig:
    """Parameters of the toy cross-sectional study."""

    n: int = 1000
    p_exposure: float = 0.5
    baseline_prevalence: float = 0.20
    pr_at_z0: float = 2.0
    beta_z: float = 0.20
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if not 0.0 < self.p_exposure < 1.0:
            raise ValueError("p_exposure must be in (0, 1)")
        if not 0.0 < self.baseline_prevalence < 1.0:
            raise ValueError("baseline_prevalence must be in (0, 1)")
        if self.pr_at_z0 <= 0.0:
            raise ValueError("pr_at_z0 must be positive")
        implied = self.baseline_prevalence * self.pr_at_z0
        if not 0.0 < implied < 1.0:
            raise ValueError(
                f"implied exposed prevalence at z=0 is {implied:g}, "
                "outside (0, 1)"
            )


def dgp_coefficients(cfg: ToyConfig) -> tuple[float, float, float]:
    """Logistic coefficients (b0, b1, b2) matching the config's constraints.

    b0 makes the unexposed prevalence at z = 0 equal baseline_prevalence;
    b1 makes the PR at z = 0 equal pr_at_z0; b2 is the confounder slope.
    """
    p0 = cfg.baseline_prevalence
    p1 = p0 * cfg.pr_at_z0
    b0 = float(logit(p0))
    b1 = float(logit(p1) - logit(p0))
    return b0, b1, cfg.beta_z


def true_conditional_pr(coeffs: Sequence[float], z: float) -> float:
    """Exact PR of exposure at a fixed confounder value z."""
    b0, b1, b2 = coeffs
    return float(expit(b0 + b1 + b2 * z) / expit(b0 + b2 * z))


def true_marginal_pr(coeffs: Sequence[float], nodes: int = 80) -> float:
    """Exact marginal PR over the standard-normal confounder.

    Both prevalence averages are Gauss-Hermite integrals of the logistic
    curve against the normal density; the shared normalizing constant
    cancels in the ratio. 80 nodes put the absolute error far below 1e-8.
    """
    if nodes < 40:
        raise ValueError(f"need at least 40 quadrature nodes, got {nodes}")
    b0, b1, b2 = coeffs
    x, w = np.polynomial.hermite.hermgauss(nodes)
    z = math.sqrt(2.0) * x
    num = float(w @ expit(b0 + b1 + b2 * z))
    den = float(w @ expit(b0 + b2 * z))
    return num / den


def simulate_toy(cfg: ToyConfig, replicate: int = 0) -> Dataset:
    """Draw one dataset from the toy process.

    Replicate r uses an independent substream derived from (seed, r), so
    any replicate can be regenerated on its own and parallel generation
    matches serial. Normals come from the inverse CDF of uniform draws,
    keeping the stream portable across BLAS/platform variation.
    """
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=cfg.seed, spawn_key=(replicate,))
    )
    b0, b1, b2 = dgp_coefficients(cfg)
    x = (rng.random(cfg.n) < cfg.p_exposure).astype(float)
    z = ndtri(np.maximum(rng.random(cfg.n), _U_FLOOR))
    prob = expit(b0 + b1 * x + b2 * z)
    y = (rng.random(cfg.n) < prob).astype(float)
    design = np.column_stack([np.ones(cfg.n), x, z])
    return Dataset(
        y=y,
        X=design,
        column_names=(INTERCEPT_NAME, "x", "z"),
        spec=ModelSpec(outcome="y", exposure="x", covariates=("z",)),
    )


@dataclass(frozen=True)
class MethodSummary:
    """Aggregate performance of one estimator across replicates."""

    method: str
    n_ok: int
    n_failed: int
    mean_estimate: float | None
    empirical_se: float | None
    mean_ci_width: float | None
    coverage: float | None

    def __post_init__(self):
        if self.coverage is not None and not 0.0 <= self.coverage <= 1.0:
            raise ValueError(f"coverage must be in [0, 1], got {self.coverage}")
        if self.n_ok < 0 or self.n_failed < 0:
            raise ValueError("replicate counts must be nonnegative")


@dataclass(frozen=True)
class StudyReport:
    """Results of a replication study, serializable to JSON and text."""

    config: ToyConfig
    reps: int
    level: float
    methods: tuple[str, ...]
    truth: Mapping[str, Any]
    summaries: tuple[MethodSummary, ...]
    replicate_estimates: Mapping[str, tuple] = field(repr=False)
    replicate_true_cpr: tuple = field(repr=False)

    def summary(self, method: str) -> MethodSummary:
        for s in self.summaries:
            if s.method == method:
                return s
        raise KeyError(f"no summary for method {method!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "study": {
                "replicates": self.reps,
                "n": self.config.n,
                "level": self.level,
                "seed": self.config.seed,
                "p_exposure": self.config.p_exposure,
                "baseline_prevalence": self.config.baseline_prevalence,
                "pr_at_z0": self.config.pr_at_z0,
                "beta_z": self.config.beta_z,
            },
            "truth": dict(self.truth),
            "methods": [
                {
                    "method": s.method,
                    "n_ok": s.n_ok,
                    "n_failed": s.n_failed,
                    "mean_estimate": s.mean_estimate,
                    "empirical_se": s.empirical_se,
                    "mean_ci_width": s.mean_ci_width,
                    "coverage": s.coverage,
                }
                for s in self.summaries
            ],
            "replicate_estimates": {m: list(v) for m, v in
                                    self.replicate_estimates.items()},
            "replicate_true_cpr": list(self.replicate_true_cpr),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        lines = [
            "Replication study",
            f"  replicates: {self.reps}   n: {self.config.n}   "
            f"level: {self.level:g}   seed: {self.config.seed}",
            "  truth: marginal PR {0:.5f}   mean conditional PR at z-bar "
            "{1:.5f}   odds-ratio target {2:.5f}".format(
                self.truth["true_mpr"],
                self.truth["mean_true_cpr_at_zbar"],
                self.truth["por_target"],
            ),
            "",
            "  {:<14} {:>5} {:>7} {:>9} {:>9} {:>9} {:>9}".format(
                "method", "ok", "failed", "mean", "emp SE", "width", "coverage"
            ),
        ]
        for s in self.summaries:

            def fmt(v):
                return f"{v:9.4f}" if v is not None else "        -"

            lines.append(
                "  {:<14} {:>5} {:>7} {} {} {} {}".format(
                    s.method, s.n_ok, s.n_failed, fmt(s.mean_estimate),
                    fmt(s.empirical_se), fmt(s.mean_ci_width), fmt(s.coverage)
                )
            )
        return "\n".join(lines) + "\n"


def _estimate_one(method: str, ds: Dataset, level: float, cache: dict):
    if method in ("CPR", "MPR", "POR"):
        if "logistic" not in cache:
            cache["logistic"] = fit_glm(ds, "binomial-logit")
        fit = cache["logistic"]
        if method == "CPR":
            return conditional_pr(fit, ds, level)
        if method == "MPR":
            return marginal_pr(fit, ds, level)
        return prevalence_odds_ratio(fit, level)
    if method == "LogBinomial":
        return log_binomial_pr(ds, level)
    if method == "RobustPoisson":
        return robust_poisson_pr(ds, level)
    if method == "Schouten":
        return schouten_pr(ds, level)
    if method == "Crude":
        return crude_pr(crude_table(ds), level)
    raise ValueError(f"method {method!r} is not part of the study")


def replication_study(cfg: ToyConfig, reps: int,
                      methods: Sequence[str] | None = None,
                      level: float = 0.95) -> StudyReport:
    """Simulate, estimate, and score every method over many replicates.

    Coverage is judged against each estimator's own target: the marginal
    PR for MPR, log-binomial, robust Poisson, Schouten, and the crude
    ratio (exposure and confounder are independent here); the conditional
    PR at the replicate's weighted mean confounder for CPR; exp(b1) for
    the POR. Per-method failures are counted, never raised.
    """
    if reps < 100:
        raise ValueError(f"need at least 100 replicates, got {reps}")
    methods = DEFAULT_STUDY_METHODS if methods is None else tuple(methods)
    if not methods:
        raise ValueError("methods must be non-empty")
    for m in methods:
        if m not in _STUDY_METHODS:
            raise ValueError(
                f"method {m!r} is not available in the replication study; "
                f"choose from {_STUDY_METHODS}"
            )

    coeffs = dgp_coefficients(cfg)
    mpr_truth = true_marginal_pr(coeffs)
    por_truth = math.exp(coeffs[1])

    points: dict[str, list] = {m: [] for m in methods}
    widths: dict[str, list] = {m: [] for m in methods}
    covered: dict[str, list] = {m: [] for m in methods}
    cpr_truths = []

    for r in range(reps):
        ds = simulate_toy(cfg, replicate=r)
        zbar = float((ds.weights * ds.X[:, 2]).sum() / ds.weights.sum())
        cpr_truth_r = true_conditional_pr(coeffs, zbar)
        cpr_truths.append(cpr_truth_r)
        cache: dict = {}
        for m in methods:
            try:
                est = _estimate_one(m, ds, level, cache)
            except PrevRatioError:
                points[m].append(None)
                continue
            target = {"CPR": cpr_truth_r, "POR": por_truth}.get(m, mpr_truth)
            points[m].append(est.point)
            widths[m].append(est.interval.width)
            covered[m].append(est.interval.lower <= target <= est.interval.upper)

    summaries = []
    for m in methods:
        ok = [p for p in points[m] if p is not None]
        n_ok = len(ok)
        summaries.append(MethodSummary(
            method=m,
            n_ok=n_ok,
            n_failed=reps - n_ok,
            mean_estimate=float(np.mean(ok)) if n_ok else None,
            empirical_se=float(np.std(ok, ddof=1)) if n_ok > 1 else None,
            mean_ci_width=float(np.mean(widths[m])) if n_ok else None,
            coverage=float(np.mean(covered[m])) if n_ok else None,
        ))

    truth = {
        "true_mpr": mpr_truth,
        "mean_true_cpr_at_zbar": float(np.mean(cpr_truths)),
        "por_target": por_truth,
        "true_cpr_at_z0": true_conditional_pr(coeffs, 0.0),
        "beta": list(coeffs),
    }
    return StudyReport(
        config=cfg,
        reps=reps,
        level=level,
        methods=methods,
        truth=truth,
        summaries=tuple(summaries),
        replicate_estimates={m: tuple(points[m]) for m in methods},
        replicate_true_cpr=tuple(cpr_truths),
    )
