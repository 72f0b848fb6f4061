"""Exception hierarchy. Every failure mode named by the module contracts maps to one class."""


class LameSpectraError(Exception):
    code = "ERROR"


class ConfigError(LameSpectraError):
    code = "CONFIG"


class MeshError(LameSpectraError):
    code = "MESH"


class AdmissibilityError(LameSpectraError):
    code = "ADMISSIBILITY"


class DegenerateFormError(LameSpectraError):
    code = "DEGENERATE"


class CholeskyFail(LameSpectraError):
    code = "CHOLESKY_FAIL"


class NoConvergence(LameSpectraError):
    code = "NO_CONVERGENCE"


class ClusterAmbiguous(LameSpectraError):
    code = "CLUSTER_AMBIGUOUS"


class ResolutionError(LameSpectraError):
    """Mesh too coarse for the requested experiment."""

    code = "RESOLUTION"
