"""
Confounding in 2x2 strata: crude versus Mantel-Haenszel
=======================================================

Two strata share a within-stratum prevalence ratio of exactly 2, but
exposure is rare in the low-risk stratum and nearly universal in the
high-risk one. Pooling first attributes the stratum effect to the
exposure; the Mantel-Haenszel estimator recovers the common PR.
"""

from prevratio import StratifiedTable, crude_pr, mantel_haenszel_pr

# Cells are (a, b, c, d) = (exposed cases, exposed non-cases,
# unexposed cases, unexposed non-cases).
strata = StratifiedTable(strata=(
    (4.0, 36.0, 18.0, 342.0),     # low risk: 10% vs 5%, 10% exposed
    (216.0, 144.0, 12.0, 28.0),   # high risk: 60% vs 30%, 90% exposed
))

for k, (a, b, c, d) in enumerate(strata.strata, start=1):
    print(f"stratum {k}: PR = {(a / (a + b)) / (c / (c + d)):.4f}, "
          f"exposed fraction {(a + b) / (a + b + c + d):.2f}")

pooled = strata.pooled()
a, b, c, d = pooled.strata[0]
print(f"pooled table: exposed {a:.0f}/{a + b:.0f}, "
      f"unexposed {c:.0f}/{c + d:.0f}")
print()

crude = crude_pr(pooled)
mh = mantel_haenszel_pr(strata)

print(f"crude PR            {crude.point:.4f}  "
      f"({crude.interval.lower:.4f}, {crude.interval.upper:.4f})")
print(f"Mantel-Haenszel PR  {mh.point:.4f}  "
      f"({mh.interval.lower:.4f}, {mh.interval.upper:.4f})")

# With a single stratum the MH estimator collapses to the crude ratio,
# interval included.
single = StratifiedTable(strata=(pooled.strata[0],))
same = mantel_haenszel_pr(single)
print()
print(f"single-stratum MH equals crude: {same.interval == crude.interval}")
