"""Finite element spectra of perturbed Lame forms with mixed Dirichlet/Robin boundary conditions."""
from .assembly import (
    DofMap,
    FormPencil,
    assemble_gram_plus,
    assemble_h1,
    assemble_mass,
    assemble_pencil,
    assemble_Q,
    assemble_sobolev,
    dual_norm,
)
from .config import list_builtins, load_config, parse_config
from .errors import (
    AdmissibilityError,
    CholeskyFail,
    ClusterAmbiguous,
    ConfigError,
    DegenerateFormError,
    LameSpectraError,
    MeshError,
    NoConvergence,
    ResolutionError,
)
from .mesh import Mesh, build_disc_mesh, build_half_disc_mesh, build_unit_square_mesh, refine, tag_boundary
from .problem import Kind, LameCoefficients, PerturbationSpec, ProblemSpec, Weight, validate
from .spectral import eigensolve, isometry_check, pencil_eigs, root_chains, sector_check, sector_check_pencil

__version__ = "0.1.0"
