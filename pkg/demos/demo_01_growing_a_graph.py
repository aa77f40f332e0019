"""
Growing a graph one node at a time
==================================

Each new node sends one edge to an earlier node with weight ``deg - 1 + a``
or makes a loop with weight ``a``.  Blocks of ``k`` such nodes are then
merged, giving ``t`` nodes with ``k`` edges each.
"""

import numpy as np

from bomodel import ModelParams, collapse, degree_counts, generate, generate_stage1, new_seed_graph
from bomodel.analytics import coeff_c

# the seed: one node with a loop
print(new_seed_graph().edges.tolist())

# a small stage-one graph and its 2-collapse
params = ModelParams(a=0.5, k=2, seed=1)
g1 = generate_stage1(params, 8)
print("stage one edges:", g1.edges.tolist())
g2 = collapse(g1, 2)
print("collapsed edges:", g2.edges.tolist(), "degrees:", g2.degrees.tolist())

# a large one; degree counts follow c(d) t
t = 200_000
g = generate(params, t)
counts = degree_counts(g)
print(" d   R(d,t)   c(d) t")
for d in range(2, 12):
    print(f"{d:2d} {counts.get(d, 0):8d} {coeff_c(d, params) * t:9.1f}")

print("max degree", int(g.degrees.max()))
