"""Bounds on causal effects over every DAG compatible with partial edge knowledge."""

from .estimation import CausalQuery, Dataset, estimate_query
from .knowledge import EdgeKnowledge, brute_force_bounds, enumerate_compatible
from .optimizer import SearchConfig, compute_bounds, run_bound_search

__all__ = [
    "CausalQuery", "Dataset", "EdgeKnowledge", "SearchConfig", "brute_force_bounds",
    "compute_bounds", "enumerate_compatible", "estimate_query", "run_bound_search",
]
__version__ = "0.1.0"
