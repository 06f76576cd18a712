"""Solver for group-quadratic regularized optimal transport problems."""

from ._core import (
    Problem,
    barycentric_map,
    build_classical,
    build_martingale,
    build_partial,
    export_socp,
    gen_classical,
    gen_group_da,
    gen_martingale,
    kkt_eta,
    load_instance,
    lp_oracle,
    primal_objective,
    prox_group,
    prox_norm,
    save_instance,
    solve,
    warm_start,
)

__all__ = [
    "Problem",
    "barycentric_map",
    "build_classical",
    "build_martingale",
    "build_partial",
    "export_socp",
    "gen_classical",
    "gen_group_da",
    "gen_martingale",
    "kkt_eta",
    "load_instance",
    "lp_oracle",
    "primal_objective",
    "prox_group",
    "prox_norm",
    "save_instance",
    "solve",
    "warm_start",
]

__version__ = "0.1.0"
