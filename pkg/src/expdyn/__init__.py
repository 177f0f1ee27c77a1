"""Finite-element elastodynamics with a Krylov-evaluated Magnus exponential propagator."""
from .assembly import Assembler
from .kernels import BACKEND
from .krylov import expm_dense, expmv
from .material import LinearElastic, StVenantKirchhoff, Yeoh, lame_from_young
from .mesh import Mesh, cantilever, generate_box_mesh
from .propagator import KrylovMode, PropagatorConfig, run, step_linear, step_magnus2
from .reference import DirectIntegratorConfig, run_direct, static_solve
from .system import MatrixSystem, MechanicalSystem

__version__ = "0.1.0"

__all__ = [
    "Assembler", "BACKEND", "DirectIntegratorConfig", "KrylovMode", "LinearElastic",
    "MatrixSystem", "MechanicalSystem", "Mesh", "PropagatorConfig", "StVenantKirchhoff", "Yeoh",
    "cantilever", "expm_dense", "expmv", "generate_box_mesh", "lame_from_young", "run",
    "run_direct", "static_solve", "step_linear", "step_magnus2",
]
