"""Preferential attachment graphs with tunable initial attractiveness.

Exact samplers, exact expectation recurrences, closed-form limits and
Monte Carlo checks that tie them together.
"""

from .analytics import coeff_c, coeff_cX, coefficients, cX_bounds, log_beta
from .graph_model import (ModelError, ModelParams, MultiGraph, collapse, count_X, degree_counts,
                          generate, generate_stage1, new_seed_graph, read_edge_list, stage1_step,
                          write_edge_list)
from .montecarlo import McReport, run_campaign
from .oracle import ResourceCapError, compute_f, compute_r, compute_r2

__version__ = "0.1.0"

__all__ = [
    "ModelError", "ModelParams", "MultiGraph", "ResourceCapError", "McReport",
    "new_seed_graph", "stage1_step", "generate_stage1", "collapse", "generate",
    "degree_counts", "count_X", "write_edge_list", "read_edge_list",
    "coefficients", "coeff_c", "coeff_cX", "cX_bounds", "log_beta",
    "compute_r", "compute_r2", "compute_f", "run_campaign",
]
