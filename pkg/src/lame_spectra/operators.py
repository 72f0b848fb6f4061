"""First-order factors of the Lame operator, conormal derivatives and the stress traction.

Gradients are flattened row-major: ``vec(G)[i*m + j] = d_j u_i``. A factor of kind D is
stored as the k x m^2 matrix F with ``D u = F @ vec(grad u)``; its symbol at a covector xi
is the k x m matrix ``sum_j D_j xi_j``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import AdmissibilityError, MeshError
from .mesh import Mesh
from .problem import Kind, LameCoefficients


def factor_matrix(kind: Kind, mu, lam, m: int = 2) -> np.ndarray:
    """Coefficient matrices of the factor, shape ``(n, k, m*m)`` for ``n`` coefficient samples.

    Row order: sqrt(2)-diagonal strain rows first then off-diagonal i<j (D1); d_j u_i with j
    major (D2); vorticity rows i<j (D3); the divergence row is always last.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    lam = np.broadcast_to(np.asarray(lam, dtype=float), mu.shape)
    n, k = len(mu), kind.rows(m)
    F = np.zeros((n, k, m * m))
    smu = np.sqrt(mu)
    row = 0
    if kind is Kind.D1:
        for i in range(m):
            F[:, row, i * m + i] = np.sqrt(2.0) * smu
            row += 1
        for i, j in combinations(range(m), 2):
            F[:, row, i * m + j] = smu
            F[:, row, j * m + i] = smu
            row += 1
        div_coef = lam
    elif kind is Kind.D2:
        for j in range(m):
            for i in range(m):
                F[:, row, i * m + j] = smu
                row += 1
        div_coef = mu + lam
    else:
        for i, j in combinations(range(m), 2):
            F[:, row, i * m + j] = smu
            F[:, row, j * m + i] = -smu
            row += 1
        div_coef = 2 * mu + lam
    if np.any(div_coef < -1e-14):
        raise AdmissibilityError(f"negative divergence coefficient for kind {kind.value}")
    for i in range(m):
        F[:, row, i * m + i] = np.sqrt(np.maximum(div_coef, 0.0))
    return F


def symbol(F: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """``sum_j D_j xi_j`` for factor matrices F (..., k, m*m) and covectors xi (..., m)."""
    m = xi.shape[-1]
    Fr = F.reshape(*F.shape[:-1], m, m)
    return np.einsum("...kij,...j->...ki", Fr, xi)


@dataclass(frozen=True)
class EdgeFrame:
    normal: np.ndarray
    tangents: np.ndarray  # rows t = e_j nu_i - e_i nu_j, i > j


def edge_frame(normal) -> EdgeFrame:
    nu = np.asarray(normal, dtype=float)
    m = len(nu)
    ts = []
    for j in range(m):
        for i in range(j + 1, m):
            t = np.zeros(m)
            t[j] += nu[i]
            t[i] -= nu[j]
            ts.append(t)
    return EdgeFrame(nu, np.array(ts))


def triangle_gradients(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """P1 basis gradients (nt, 3, 2) and triangle areas (nt,)."""
    p = mesh.vertices[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    inv = np.empty((len(p), 2, 2))
    inv[:, 0, 0] = d2[:, 1] / det
    inv[:, 0, 1] = -d2[:, 0] / det
    inv[:, 1, 0] = -d1[:, 1] / det
    inv[:, 1, 1] = d1[:, 0] / det
    ref = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    # grad phi_a = J^{-T} grad_ref phi_a, with J = [d1 d2]
    grads = np.einsum("ak,tkj->taj", ref, inv)
    return grads, 0.5 * det


def field_gradient(mesh: Mesh, u: np.ndarray, tri: int) -> np.ndarray:
    """Constant gradient G[i, j] = d_j u_i of a P1 field ``u`` of shape (nv, m) on one triangle."""
    p = mesh.vertices[mesh.triangles[tri]]
    J = np.stack([p[1] - p[0], p[2] - p[0]], axis=1)
    du = np.stack([u[mesh.triangles[tri][1]] - u[mesh.triangles[tri][0]],
                   u[mesh.triangles[tri][2]] - u[mesh.triangles[tri][0]]], axis=1)
    return du @ np.linalg.inv(J)


def _centroid(mesh: Mesh, tri: int) -> np.ndarray:
    return mesh.vertices[mesh.triangles[tri]].mean(axis=0)[None, :]


def apply_factor(kind: Kind, coeffs: LameCoefficients, u: np.ndarray, mesh: Mesh, tri: int) -> np.ndarray:
    mu, lam = coeffs.at(_centroid(mesh, tri))
    F = factor_matrix(kind, mu, lam)[0]
    return F @ field_gradient(mesh, u, tri).ravel()


def _boundary_data(mesh: Mesh, edge: int, coeffs: LameCoefficients):
    if not 0 <= edge < len(mesh.boundary_edges):
        raise MeshError("not a boundary edge")
    tri = int(mesh.edge_owner()[edge])
    mid = mesh.edge_midpoints()[edge][None, :]
    mu, lam = coeffs.at(mid)
    return tri, mesh.edge_normals()[edge], float(mu[0]), float(lam[0])


def traction_from_gradient(G: np.ndarray, nu: np.ndarray, mu: float, lam: float) -> np.ndarray:
    """Stress traction sum_j sigma_ij u_j for a constant gradient."""
    return mu * G @ nu + mu * G.T @ nu + lam * np.trace(G) * nu


def tau0_from_gradient(G: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """(d_tau0 u)_i = sum_j (nu_j d_i - nu_i d_j) u_j."""
    return G.T @ nu - nu * np.trace(G)


def conormal_from_gradient(kind: Kind, G: np.ndarray, nu: np.ndarray, mu: float, lam: float) -> np.ndarray:
    F = factor_matrix(kind, mu, lam, m=len(nu))[0]
    return symbol(F, nu).T @ (F @ G.ravel())


def stress_traction(coeffs: LameCoefficients, u: np.ndarray, mesh: Mesh, edge: int) -> np.ndarray:
    tri, nu, mu, lam = _boundary_data(mesh, edge, coeffs)
    return traction_from_gradient(field_gradient(mesh, u, tri), nu, mu, lam)


def conormal(kind: Kind, coeffs: LameCoefficients, u: np.ndarray, mesh: Mesh, edge: int) -> np.ndarray:
    tri, nu, mu, lam = _boundary_data(mesh, edge, coeffs)
    return conormal_from_gradient(kind, field_gradient(mesh, u, tri), nu, mu, lam)


def tangential_tau0(u: np.ndarray, mesh: Mesh, edge: int) -> np.ndarray:
    tri, nu, _, _ = _boundary_data(mesh, edge, LameCoefficients())
    return tau0_from_gradient(field_gradient(mesh, u, tri), nu)


def symbol_injectivity(kind: Kind, mu: float, lam: float, samples: int = 100, seed: int = 0, m: int = 2) -> bool:
    """True iff the symbol has full column rank m at every sampled unit covector."""
    if mu <= 0:
        raise AdmissibilityError("mu must be positive")
    F = factor_matrix(kind, mu, lam, m)[0]
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((samples, m))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    S = symbol(F[None], xi)
    return bool(np.all(np.linalg.matrix_rank(S) == m))
