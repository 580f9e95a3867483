"""Entropy-dissipative TPFA and DDFV schemes for linear Fokker-Planck equations."""

from .ddfv import Combiner, DdfvProblem
from .ddfv_mesh import DdfvMesh, build_ddfv, delta, discrete_gradient
from .kernels import EntropyGenerator, MeanKind, mean
from .mesh import (
    MeshError,
    PrimalMesh,
    generate_cartesian,
    generate_distorted_quad,
    generate_triangular,
    import_mesh,
    regularity_report,
)
from .newton import NewtonConfig, NewtonReport, march, solve_step
from .tpfa import TpfaProblem

__all__ = [
    "Combiner",
    "DdfvMesh",
    "DdfvProblem",
    "EntropyGenerator",
    "MeanKind",
    "MeshError",
    "NewtonConfig",
    "NewtonReport",
    "PrimalMesh",
    "TpfaProblem",
    "build_ddfv",
    "delta",
    "discrete_gradient",
    "generate_cartesian",
    "generate_distorted_quad",
    "generate_triangular",
    "import_mesh",
    "march",
    "mean",
    "regularity_report",
    "solve_step",
]
__version__ = "0.1.0"
