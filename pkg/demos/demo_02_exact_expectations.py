"""
Exact expectations without sampling
===================================

The recurrences give E R(d, t) exactly.  For tiny graphs we can list every
outcome and check them against brute force, and for large ``t`` watch them
approach ``c(d) t``.
"""

from fractions import Fraction

import numpy as np

from bomodel import ModelParams, compute_r
from bomodel.analytics import coeff_c
from bomodel.oracle import enumerate_exact, newnode_degree_dist

params = ModelParams(a=1.0, k=1)

# all outcomes of the 3-node graph, in exact rationals
for outcome, p in sorted(enumerate_exact(params, 3, exact=True).items()):
    print(outcome, p)

# r(d, 2) = 2/3 for d = 1, 2, 3
print(compute_r(params, 2).r_at(2)[1:4])

# the new node's degree: a loop has probability O(1/t)
print(newnode_degree_dist(ModelParams(0.5, 3), 10))

# |r(d,t) - c(d) t| shrinks like 1/d and does not grow with t
for t in (50, 200, 800):
    r = compute_r(params, t, history=False).r_final
    d = np.arange(1, t + 1)
    gap = np.abs(r[d] - coeff_c(d, params) * t)
    print(f"t={t:4d}  gap at d=1,5,25: {gap[0]:.4f} {gap[4]:.4f} {gap[24]:.5f}  max gap*d {np.max(gap * d):.3f}")
