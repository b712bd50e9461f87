"""低秩核心运算"""

from dlra.core.lowrank import (
    best_approximation_error,
    frob_norm,
    inner,
    lowrank_from_dense,
    make_state,
    new_directions,
    normal_component_norm,
    orth,
    orth_concat,
    random_lowrank,
    tangent_project,
    truncate,
    truncate_with_mass,
)

__all__ = [
    "best_approximation_error",
    "frob_norm",
    "inner",
    "lowrank_from_dense",
    "make_state",
    "new_directions",
    "normal_component_norm",
    "orth",
    "orth_concat",
    "random_lowrank",
    "tangent_project",
    "truncate",
    "truncate_with_mass",
]
