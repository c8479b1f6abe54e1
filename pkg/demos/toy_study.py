"""
Estimating a prevalence ratio eight ways on one simulated study
===============================================================

Draws a single cross-sectional dataset from the built-in toy process
(binary exposure, standard-normal confounder, 20% baseline prevalence,
design PR of 2 at z = 0) and runs every estimator on it.
"""

import numpy as np

from prevratio import (ToyConfig, conditional_pr, crude_pr, crude_table,
                       dgp_coefficients, fit_glm, log_binomial_pr,
                       marginal_pr, prevalence_odds_ratio, robust_poisson_pr,
                       schouten_pr, simulate_toy, true_conditional_pr,
                       true_marginal_pr)

cfg = ToyConfig(n=2000, seed=14)
ds = simulate_toy(cfg)
coeffs = dgp_coefficients(cfg)

print(f"simulated n = {ds.n}, outcome prevalence {ds.y.mean():.3f}, "
      f"exposure rate {ds.X[:, 1].mean():.3f}")
print(f"true marginal PR {true_marginal_pr(coeffs):.4f}, "
      f"true conditional PR at z=0 {true_conditional_pr(coeffs, 0.0):.4f}")
print()

# One logistic fit feeds the POR and both model-based PRs.
logistic = fit_glm(ds, "binomial-logit")

estimates = [
    prevalence_odds_ratio(logistic),
    conditional_pr(logistic, ds),
    marginal_pr(logistic, ds),
    log_binomial_pr(ds),
    robust_poisson_pr(ds),
    schouten_pr(ds),
    crude_pr(crude_table(ds)),
]

# The CPR can also be asked for at a chosen covariate value instead of
# the weighted mean; z one standard deviation out attenuates it a bit.
estimates.append(conditional_pr(logistic, ds, at={"z": 1.0}))

print(f"{'method':<16} {'PR':>7} {'95% CI':>19}")
for est in estimates:
    iv = est.interval
    label = est.method
    if est.metadata.get("conditioning", {}).get("z") == 1.0:
        label += " @z=1"
    print(f"{label:<16} {iv.point:7.4f}   ({iv.lower:.4f}, {iv.upper:.4f})")

# The odds ratio sits well above every ratio of proportions; the five
# adjusted PR estimates land within a few hundredths of each other.
adjusted = [e.point for e in estimates[1:6]]
print()
print(f"adjusted PR spread: {max(adjusted) - min(adjusted):.4f}")
