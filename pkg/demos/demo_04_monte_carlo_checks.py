"""
Monte Carlo against the exact answers
=====================================

A campaign simulates many independent graphs (one random stream per
replica) and gates sample means against the exact recurrences at 4 standard
errors.
"""

from bomodel import ModelParams, compute_f, compute_r2, run_campaign
from bomodel.montecarlo import check_theorem1, check_theorem2, check_theorem4, check_X

params = ModelParams(a=0.5, k=2)
t = 80
report = run_campaign(params, t, 20_000, ("R", "cov", "X"), seed=7, d_values=range(2, 16),
                      pairs=[(2, 3), (3, 4), (2, 6)], workers=2)
table = compute_f(params, t)
for name, v in [("R", check_theorem1(report, table)), ("cov", check_theorem2(report, compute_r2(params, t))),
                ("X", check_X(report, table))]:
    print(f"{name:4s} cells {v['cells']:4d}  failures {v['failures']}  budget {v['budget']}  passed {v['passed']}")

for row in report.comparisons["X"]["rows"]:
    print(f"X{row['d1'], row['d2']}: mean {row['mean']:.3f} +- {row['se']:.3f}, exact {row['oracle']:.3f}")

# tails of X are far inside the martingale bound
tail = check_theorem4(params, 3, 4, 500, 5000, [0.25, 0.5, 1, 2], seed=3)
for row in tail.tail:
    print(f"c={row['c']:5.2f}  frequency {row['frequency']:.4f}  bound {row['bound']:.4f}")
print(tail.notes)
