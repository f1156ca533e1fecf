"""Exact Weingarten calculus for Haar-unitary moments."""

from .functions import (
    DEFAULT_MAX_DEGREE,
    StableRangeError,
    mobius,
    one_step_identity_check,
    wg_exact,
    wg_leading,
    wg_table,
    wg_table_json,
)
from .gamma import (
    PENALTY_CASES,
    PenaltyComparison,
    centered_product_moment,
    gamma,
    gamma_moment_exact,
    gamma_uncentered,
    rho_penalty,
    set_partitions,
)
from .graphs import (
    FIXTURE_GRAPHS,
    CircuitCovering,
    WeingartenGraph,
    brute_force_coverings,
    build_graph,
    covering_type_histogram,
    enumerate_coverings,
    graph_order_bound,
    haar_moment,
    modulus_squared,
)
from .permutations import Permutation, cycle_type, partitions

__all__ = [
    "FIXTURE_GRAPHS",
    "PENALTY_CASES",
    "DEFAULT_MAX_DEGREE",
    "StableRangeError",
    "mobius",
    "one_step_identity_check",
    "wg_exact",
    "wg_leading",
    "wg_table",
    "wg_table_json",
    "PenaltyComparison",
    "centered_product_moment",
    "gamma",
    "gamma_moment_exact",
    "gamma_uncentered",
    "rho_penalty",
    "set_partitions",
    "CircuitCovering",
    "WeingartenGraph",
    "brute_force_coverings",
    "build_graph",
    "covering_type_histogram",
    "enumerate_coverings",
    "graph_order_bound",
    "haar_moment",
    "modulus_squared",
    "Permutation",
    "cycle_type",
    "partitions",
]
