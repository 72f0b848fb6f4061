"""Problem instances: Lame coefficients, weights, factorization choice and perturbations."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np

from .errors import AdmissibilityError, DegenerateFormError
from .mesh import Mesh

# A coefficient is either a constant array or a callable mapping points (n, 2) to values (n, ...).
Field = Union[float, np.ndarray, Callable[[np.ndarray], np.ndarray]]


class Kind(enum.Enum):
    D1 = "D1"  # strain rows + divergence
    D2 = "D2"  # full gradient rows + divergence
    D3 = "D3"  # vorticity rows + divergence

    def rows(self, m: int = 2) -> int:
        if self is Kind.D1:
            return (m * m + m) // 2 + 1
        if self is Kind.D2:
            return m * m + 1
        return (m * m - m) // 2 + 1


def evaluate(f: Optional[Field], pts: np.ndarray, shape: tuple = ()) -> np.ndarray:
    """Sample a field at points as an array of shape ``(n, *shape)``.

    Scalars given for a square matrix field mean multiples of the identity.
    """
    n = len(pts)
    if f is None:
        return np.zeros((n, *shape))
    vals = np.asarray(f(pts)) if callable(f) else np.asarray(f)
    square = len(shape) == 2 and shape[0] == shape[1]
    if square and vals.ndim == 0:
        vals = vals * np.eye(shape[0])
    elif square and callable(f) and vals.shape == (n,):
        vals = vals[:, None, None] * np.eye(shape[0])
    return np.broadcast_to(vals, (n, *shape))


@dataclass(frozen=True)
class LameCoefficients:
    mu: Field = 1.0
    lam: Field = 0.0
    kappa: float = 0.5

    def at(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return evaluate(self.mu, pts).astype(float), evaluate(self.lam, pts).astype(float)

    @property
    def constant(self) -> bool:
        return not callable(self.mu) and not callable(self.lam)


@dataclass(frozen=True)
class Weight:
    rho: Callable[[np.ndarray], np.ndarray]
    grad_rho: Callable[[np.ndarray], np.ndarray]
    gamma: float = 0.0
    y_points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    @property
    def trivial(self) -> bool:
        return len(self.y_points) == 0 or self.gamma == 0.0

    def power(self, pts: np.ndarray, exponent: float) -> np.ndarray:
        """rho**exponent at points; exactly 1 when the exponent vanishes."""
        if exponent == 0.0:
            return np.ones(len(pts))
        return self.rho(pts) ** exponent


def unit_weight(gamma: float = 0.0) -> Weight:
    return Weight(lambda x: np.ones(len(x)), lambda x: np.zeros((len(x), 2)), gamma)


def weight_distance(mesh: Mesh, partition=None, gamma: float = 0.0) -> Weight:
    """Distance to the singular set Y, normalised by the domain diameter and clipped at 1."""
    partition = mesh.partition if partition is None else partition
    if len(partition.y_vertices) == 0:
        return unit_weight(gamma)
    y = mesh.vertices[partition.y_vertices].copy()
    b = mesh.vertices[np.unique(mesh.boundary_edges)]
    diam = float(np.max(np.linalg.norm(b[:, None, :] - b[None, :, :], axis=2)))

    def _nearest(x):
        d = np.linalg.norm(x[:, None, :] - y[None, :, :], axis=2)
        k = np.argmin(d, axis=1)
        return d[np.arange(len(x)), k], x - y[k]

    def rho(x):
        d, _ = _nearest(np.atleast_2d(x))
        return np.minimum(1.0, d / diam)

    def grad_rho(x):
        d, diff = _nearest(np.atleast_2d(x))
        with np.errstate(invalid="ignore", divide="ignore"):
            g = diff / (d[:, None] * diam)
        g[(d >= diam) | (d == 0)] = 0.0
        return g

    return Weight(rho, grad_rho, gamma, y)


def weight_cylinder(phi: Callable[[np.ndarray], np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
    """rho = sqrt(phi(x')^2 + x_m^2) for the cylinder over {phi < 0}, clipped to [0, 1]."""

    def rho(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.minimum(1.0, np.sqrt(np.asarray(phi(x[:, :-1])) ** 2 + x[:, -1] ** 2))

    return rho


def weight_cube(m: int, normalize: bool = True) -> Callable[[np.ndarray], np.ndarray]:
    """Product weight of the cube (-1,1)^{m-1} x (0,1), vanishing on the edges of the base side.

    Each factor ((x_j-1)^2+x_m^2)((x_j+1)^2+x_m^2) is maximal at |x_j| = 1, x_m = 1 where it
    equals 5, so the supremum of the weight is 5**((m-1)/2).
    """
    if m < 2:
        raise ValueError("m >= 2 required")
    scale = 5.0 ** ((m - 1) / 2) if normalize else 1.0

    def rho(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xm = x[:, -1:]
        xs = x[:, : m - 1]
        prod = np.prod(((xs - 1) ** 2 + xm**2) * ((xs + 1) ** 2 + xm**2), axis=1)
        return np.sqrt(prod) / scale

    return rho


@dataclass(frozen=True)
class PerturbationSpec:
    """Coefficient fields of the operator and boundary condition beyond the D*D part.

    ``a1`` is the deviation from the weight-induced first-order coefficient
    2*gamma*rho^-1*(D rho)^*, which ``weight_part`` says is present (the unperturbed choice).
    For kind D3, ``a1`` is the 2 x 2 matrix multiplying D3 u; otherwise 2 x 4 multiplying
    (d1 u1, d1 u2, d2 u1, d2 u2).
    """

    a00: Optional[Field] = None
    da0_s: Optional[Field] = None
    da0_c: Optional[Field] = None
    a1: Optional[Field] = None
    b1: Optional[Field] = None
    b00: Optional[Field] = None
    db0_s: Optional[Field] = None
    db0_c: Optional[Field] = None
    d_tau: Optional[Field] = None
    weight_part: bool = True

    @property
    def empty(self) -> bool:
        """True when every perturbation term (but not the core a00/b00) vanishes."""
        return all(f is None for f in (self.da0_s, self.da0_c, self.a1, self.db0_s, self.db0_c, self.d_tau)) and self.weight_part

    def core(self) -> "PerturbationSpec":
        return PerturbationSpec(a00=self.a00, b1=self.b1, b00=self.b00)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    mesh: Mesh
    kind: Kind
    coefficients: LameCoefficients = field(default_factory=LameCoefficients)
    weight: Weight = field(default_factory=unit_weight)
    perturbation: PerturbationSpec = field(default_factory=PerturbationSpec)
    name: str = "problem"
    config_hash: str = ""

    @property
    def partition(self):
        return self.mesh.partition

    def with_perturbation(self, perturbation: PerturbationSpec) -> "ProblemSpec":
        return replace(self, perturbation=perturbation)

    def with_kind(self, kind: Kind) -> "ProblemSpec":
        return replace(self, kind=kind)


@dataclass(frozen=True)
class ValidationReport:
    conditions: dict
    admissible: dict
    magnitudes: dict

    @property
    def inner_product(self) -> bool:
        return any(self.conditions.values())


def _psd(mats: np.ndarray, tol: float = 1e-12) -> bool:
    if len(mats) == 0:
        return True
    herm = np.max(np.abs(mats - np.conj(np.swapaxes(mats, 1, 2)))) <= tol * max(1.0, np.max(np.abs(mats)))
    return bool(herm and np.min(np.linalg.eigvalsh(0.5 * (mats + np.conj(np.swapaxes(mats, 1, 2))))) >= -tol)


def _robin_points(problem: ProblemSpec) -> np.ndarray:
    mesh = problem.mesh
    return mesh.edge_midpoints()[problem.partition.robin_edges]


def validate(problem: ProblemSpec) -> ValidationReport:
    """Check coefficient invariants and which inner-product condition holds.

    Raises AdmissibilityError for violated hard constraints and DegenerateFormError when
    none of the three conditions makes the core form an inner product.
    """
    mesh = problem.mesh
    pert = problem.perturbation
    pts = np.concatenate([mesh.vertices, mesh.vertices[mesh.triangles].mean(axis=1)])
    mu, lam = problem.coefficients.at(pts)
    kappa = problem.coefficients.kappa
    tol = 1e-12
    if kappa <= 0:
        raise AdmissibilityError("kappa must be positive")
    if np.any(mu < kappa - tol) or np.any(2 * mu + lam < kappa - tol):
        raise AdmissibilityError("need mu >= kappa and 2 mu + lambda >= kappa")
    admissible = {
        Kind.D1.value: bool(np.all(lam >= -tol)),
        Kind.D2.value: bool(np.all(mu + lam >= -tol)),
        Kind.D3.value: bool(np.all(2 * mu + lam >= kappa - tol)),
    }
    if not admissible[problem.kind.value]:
        need = {"D1": "lambda >= 0", "D2": "mu + lambda >= 0", "D3": "2 mu + lambda >= kappa"}[problem.kind.value]
        raise AdmissibilityError(f"kind {problem.kind.value} requires {need}")

    rho = problem.weight.rho(pts)
    if np.any(rho < -tol) or np.any(rho > 1 + tol):
        raise AdmissibilityError("weight must take values in [0, 1]")

    centroids = mesh.vertices[mesh.triangles].mean(axis=1)
    a00 = evaluate(pert.a00, centroids, (2, 2))
    if not _psd(a00):
        raise AdmissibilityError("a00 must be Hermitian non-negative")
    rpts = _robin_points(problem)
    b1 = evaluate(pert.b1 if pert.b1 is not None else 1.0, rpts, (2, 2))
    if len(rpts) and np.min(np.abs(np.linalg.det(b1))) <= tol:
        raise AdmissibilityError("b1 must be invertible on Robin edges")
    b00 = evaluate(pert.b00, rpts, (2, 2))
    core_b = np.linalg.solve(b1, b00) if len(rpts) else np.zeros((0, 2, 2))
    if not _psd(core_b):
        raise AdmissibilityError("b1^-1 b00 must be Hermitian non-negative")
    a1_shape = (2, 2) if problem.kind is Kind.D3 else (2, 4)
    if pert.a1 is not None and not callable(pert.a1) and np.ndim(pert.a1) == 2 and np.shape(pert.a1) != a1_shape:
        raise AdmissibilityError(f"a1 must have shape {a1_shape} for kind {problem.kind.value}")

    def _min_eig(mats):
        if len(mats) == 0:
            return 0.0
        return float(np.max(np.linalg.eigvalsh(0.5 * (mats + np.conj(np.swapaxes(mats, 1, 2))))[:, 0]))

    conditions = {
        "S_nonempty": len(problem.partition.s_edges) > 0,
        "a00_positive": _min_eig(a00) > tol,
        "b00_positive": _min_eig(core_b) > tol,
    }
    rho_c = problem.weight.rho(centroids)
    magnitudes = {
        "rho2_a00": float(np.max(rho_c**2 * np.linalg.norm(a00, axis=(1, 2)))) if len(a00) else 0.0,
        "rho_a1": float(np.max(rho_c * np.linalg.norm(evaluate(pert.a1, centroids, a1_shape).reshape(len(centroids), -1), axis=1))),
        "da0_s": float(np.max(np.abs(evaluate(pert.da0_s, centroids, (2, 2))))),
        "da0_c": float(np.max(np.abs(evaluate(pert.da0_c, centroids, (2, 2))))),
        "d_tau": float(np.max(np.abs(evaluate(pert.d_tau, rpts, (2, 2))))) if len(rpts) else 0.0,
    }
    report = ValidationReport(conditions, admissible, magnitudes)
    if not report.inner_product:
        raise DegenerateFormError("none of: S nonempty, a00 >= c0 I somewhere, b1^-1 b00 >= c1 I somewhere")
    return report


def factor_threshold(kind: Kind, m: int = 2) -> float:
    """Perturbation size below which root vectors are complete: sin(pi/m) for D1/D2, sin(pi/2m) for D3.

    The D3 statement is read by analogy with the D1/D2 one; its source wording is truncated.
    """
    return math.sin(math.pi / m) if kind is not Kind.D3 else math.sin(math.pi / (2 * m))
