"""基准问题"""

from dlra.problems.lattice import (
    LatticeLayout,
    LatticeProblem,
    default_lattice_layout,
    lattice_build,
    lattice_scalar_flux,
    load_lattice_overrides,
)
from dlra.problems.loaders import load_problem_file, read_triplets
from dlra.problems.pn_moments import PnFluxMatrices, pn_flux_matrices, real_harmonics
from dlra.problems.registry import BenchmarkProblem, build_problem
from dlra.problems.schrodinger import (
    schrodinger_build,
    schrodinger_full_initial,
    schrodinger_initial,
)
from dlra.problems.synthetic import SyntheticProblem, synthetic_exact

__all__ = [
    "BenchmarkProblem",
    "LatticeLayout",
    "LatticeProblem",
    "PnFluxMatrices",
    "SyntheticProblem",
    "build_problem",
    "default_lattice_layout",
    "lattice_build",
    "lattice_scalar_flux",
    "load_lattice_overrides",
    "load_problem_file",
    "pn_flux_matrices",
    "read_triplets",
    "real_harmonics",
    "schrodinger_build",
    "schrodinger_full_initial",
    "schrodinger_initial",
    "synthetic_exact",
]
