"""
Edges between degree classes
============================

X(d1, d2, t) counts non-loop edges joining a degree-d1 node to a degree-d2
node, in both orders.  Its mean is close to ``c_X(d1, d2) t`` and ``c_X`` is
sandwiched between two Gamma-function expressions.
"""

import numpy as np

from bomodel import ModelParams, compute_f
from bomodel.analytics import coeff_cX, cX_asymptotic, cX_bounds

params = ModelParams(a=1.0, k=1)

print("c_X(2,1) =", coeff_cX(2, 1, params), "(2/15)")

# the sandwich along the diagonal
for d in (2, 5, 20, 100):
    lo, hi = cX_bounds(d, d, params)
    print(f"d={d:3d}  {lo:.3e} <= {coeff_cX(d, d, params):.3e} <= {hi:.3e}")

# far from the diagonal the asymptotic form takes over
for d in (4, 8, 16, 32):
    print(f"d1={d:2d} d2={d * d:4d}  c_X / asymptotic = {coeff_cX(d, d * d, params) / cX_asymptotic(d, d * d, params):.4f}")

# exact E X against c_X t
t = 120
f = compute_f(params, t, d_cap=8).f
for d1, d2 in [(1, 2), (1, 3), (2, 3), (3, 3)]:
    print(f"EX({d1},{d2},{t}) = {f[d1, d2]:8.4f}   c_X t = {coeff_cX(d1, d2, params) * t:8.4f}")
