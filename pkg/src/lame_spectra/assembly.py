"""P1 assembly of the weighted Gram form, the perturbed form and auxiliary norms.

Matrices are indexed ``K[test, trial]`` over vector DOFs ``2*v + c`` and returned restricted
to the free DOFs of a :class:`DofMap`. Volume terms with constant gradients use the centroid
rule, zero- and first-order terms the three mid-edge points, boundary terms two-point Gauss.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.special import beta as beta_fn

from . import _kernels
from .errors import CholeskyFail, ConfigError
from .mesh import Mesh
from .operators import factor_matrix, symbol, triangle_gradients
from .problem import Kind, LameCoefficients, ProblemSpec, Weight, evaluate, unit_weight

_MID_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
_GAUSS2 = np.array([0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)])


@dataclass(frozen=True)
class DofMap:
    n_vertices: int
    free_vertices: np.ndarray

    @classmethod
    def for_problem(cls, problem: ProblemSpec) -> "DofMap":
        mesh = problem.mesh
        part = problem.partition
        fixed = np.union1d(np.unique(mesh.boundary_edges[part.s_edges]), part.y_vertices)
        return cls(mesh.n_vertices, np.setdiff1d(np.arange(mesh.n_vertices), fixed))

    @classmethod
    def full(cls, mesh: Mesh) -> "DofMap":
        return cls(mesh.n_vertices, np.arange(mesh.n_vertices))

    @property
    def dofs(self) -> np.ndarray:
        return (2 * self.free_vertices[:, None] + np.arange(2)[None, :]).ravel()

    @property
    def N(self) -> int:
        return 2 * len(self.free_vertices)

    def restrict(self, K: sp.spmatrix) -> sp.csr_matrix:
        d = self.dofs
        return sp.csr_matrix(K.tocsr()[d][:, d])

    def extend(self, x: np.ndarray) -> np.ndarray:
        """Free-DOF vector to a (n_vertices, 2) nodal field, zero on constrained vertices."""
        u = np.zeros(2 * self.n_vertices, dtype=np.result_type(x, float))
        u[self.dofs] = x
        return u.reshape(-1, 2)


@dataclass(frozen=True, eq=False)
class FormPencil:
    B: sp.csr_matrix
    A: sp.csr_matrix
    P_small: sp.csr_matrix
    P_compact: sp.csr_matrix
    dofmap: DofMap
    problem_hash: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.B.shape[0]

    @property
    def P(self) -> sp.csr_matrix:
        return sp.csr_matrix(self.A - self.B)


# ---------------------------------------------------------------- local geometry

def _local_dofs(tris: np.ndarray) -> np.ndarray:
    return (2 * tris[:, :, None] + np.arange(2)[None, None, :]).reshape(len(tris), 6)


def _grad_operator(grads: np.ndarray) -> np.ndarray:
    """(nt, 4, 6): maps the 6 local DOFs (2a+c) to vec(grad u) (index 2i+j = d_j u_i)."""
    Bm = np.zeros((len(grads), 4, 6))
    for a in range(3):
        for c in range(2):
            for j in range(2):
                Bm[:, 2 * c + j, 2 * a + c] = grads[:, a, j]
    return Bm


def _scatter(mesh: Mesh, tri_idx: np.ndarray, local: np.ndarray) -> sp.coo_matrix:
    ld = _local_dofs(mesh.triangles[tri_idx])
    rows = np.repeat(ld, 6, axis=1).ravel()
    cols = np.tile(ld, (1, 6)).ravel()
    n = 2 * mesh.n_vertices
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def _edge_quadrature(mesh: Mesh, edges: np.ndarray):
    """Gauss points on boundary edges: owner triangles, barycentric coords (n,2,3), points, weights."""
    tri = mesh.edge_owner()[edges]
    be = mesh.boundary_edges[edges]
    T = mesh.triangles[tri]
    pos_i = np.argmax(T == be[:, :1], axis=1)
    pos_j = np.argmax(T == be[:, 1:], axis=1)
    bary = np.zeros((len(edges), 2, 3))
    rows = np.arange(len(edges))
    for q, xi in enumerate(_GAUSS2):
        bary[rows, q, pos_i] = 1.0 - xi
        bary[rows, q, pos_j] = xi
    pts = np.einsum("nqa,nak->nqk", bary, mesh.vertices[T])
    w = 0.5 * mesh.edge_lengths()[edges][:, None] * np.ones((1, 2))
    return tri, bary, pts, w


def _mid_quadrature(mesh: Mesh):
    _, area = triangle_gradients(mesh)
    n = mesh.n_triangles
    bary = np.broadcast_to(_MID_BARY, (n, 3, 3))
    pts = np.einsum("qa,nak->nqk", _MID_BARY, mesh.vertices[mesh.triangles])
    w = np.abs(area)[:, None] * np.full((1, 3), 1.0 / 3.0)
    return bary, pts, w


def _weighted(weight: Weight, pts: np.ndarray, w: np.ndarray, exponent: float) -> np.ndarray:
    return w * weight.power(pts.reshape(-1, 2), exponent).reshape(w.shape)


def _zero_order(bary, w, M) -> np.ndarray:
    """local[n, 2a+c, 2b+d] = sum_q w phi_a phi_b M[c, d]."""
    loc = np.einsum("nq,nqa,nqb,nqcd->nacbd", w, bary, bary, M)
    return loc.reshape(len(w), 6, 6)


def _first_order(bary, w, M, Gop) -> np.ndarray:
    """local[n, 2a+c, j] = sum_q w phi_a (M @ Gop)[c, j] with Gop mapping local DOFs to M's input."""
    loc = np.einsum("nq,nqa,nqcr,nqrj->nacj", w, bary, M, Gop)
    return loc.reshape(len(w), 6, 6)


def _field_at(f, pts: np.ndarray, shape) -> np.ndarray:
    flat = pts.reshape(-1, 2)
    return np.asarray(evaluate(f, flat, shape)).reshape(*pts.shape[:-1], *shape)


# ---------------------------------------------------------------- forms

def _factor_term(problem: ProblemSpec, kind: Optional[Kind] = None, gamma_exp: Optional[float] = None) -> sp.coo_matrix:
    mesh = problem.mesh
    kind = problem.kind if kind is None else kind
    grads, area = triangle_gradients(mesh)
    cent = mesh.vertices[mesh.triangles].mean(axis=1)
    mu, lam = problem.coefficients.at(cent)
    F = factor_matrix(kind, mu, lam)
    expo = -2.0 * problem.weight.gamma if gamma_exp is None else gamma_exp
    wt = np.abs(area) * problem.weight.power(cent, expo)
    FB = F @ _grad_operator(grads)
    local = wt[:, None, None] * np.einsum("nki,nkj->nij", FB, FB)
    return _scatter(mesh, np.arange(mesh.n_triangles), local)


def _volume_matrix(problem: ProblemSpec, f, expo: float) -> sp.coo_matrix:
    mesh = problem.mesh
    bary, pts, w = _mid_quadrature(mesh)
    M = _field_at(f, pts, (2, 2))
    return _scatter(mesh, np.arange(mesh.n_triangles), _zero_order(bary, _weighted(problem.weight, pts, w, expo), M))


def _robin_matrix(problem: ProblemSpec, f, expo: float, edges: Optional[np.ndarray] = None) -> sp.coo_matrix:
    """Boundary term (b1^-1 f u, v) over Robin edges (or the given edges)."""
    mesh = problem.mesh
    edges = problem.partition.robin_edges if edges is None else edges
    n = 2 * mesh.n_vertices
    if len(edges) == 0 or f is None:
        return sp.coo_matrix((n, n))
    tri, bary, pts, w = _edge_quadrature(mesh, edges)
    M = np.linalg.solve(_field_at(_b1(problem), pts, (2, 2)), _field_at(f, pts, (2, 2)))
    return _scatter(mesh, tri, _zero_order(bary, _weighted(problem.weight, pts, w, expo), M))


def _b1(problem: ProblemSpec):
    return problem.perturbation.b1 if problem.perturbation.b1 is not None else 1.0


def _zero(mesh: Mesh) -> sp.coo_matrix:
    n = 2 * mesh.n_vertices
    return sp.coo_matrix((n, n))


def _full_gram_plus(problem: ProblemSpec) -> sp.coo_matrix:
    pert = problem.perturbation
    expo = -2.0 * problem.weight.gamma
    K = _factor_term(problem).tocsr()
    if pert.a00 is not None:
        K = K + _volume_matrix(problem, pert.a00, expo)
    if pert.b00 is not None:
        K = K + _robin_matrix(problem, pert.b00, expo)
    return K


def assemble_gram_plus(problem: ProblemSpec, dofmap: Optional[DofMap] = None) -> sp.csr_matrix:
    """Gram matrix B of (u, v)_{+,gamma,D} on the free DOFs."""
    dofmap = DofMap.for_problem(problem) if dofmap is None else dofmap
    return dofmap.restrict(_full_gram_plus(problem))


def _first_order_volume(problem: ProblemSpec, coef, expo: float) -> sp.coo_matrix:
    """(coef * X u, v) with X = grad (D1/D2: d1u1, d1u2, d2u1, d2u2) or D3 u (D3)."""
    mesh = problem.mesh
    grads, _ = triangle_gradients(mesh)
    Gop = _grad_operator(grads)
    bary, pts, w = _mid_quadrature(mesh)
    if problem.kind is Kind.D3:
        mu, lam = problem.coefficients.at(pts.reshape(-1, 2))
        F = factor_matrix(Kind.D3, mu, lam).reshape(*pts.shape[:2], 2, 4)
        X = np.einsum("nqrk,nkj->nqrj", F, Gop)
        shape = (2, 2)
    else:
        perm = [0, 2, 1, 3]
        X = np.broadcast_to(Gop[:, None, perm, :], (len(Gop), 3, 4, 6))
        shape = (2, 4)
    M = _field_at(coef, pts, shape)
    return _scatter(mesh, np.arange(mesh.n_triangles), _first_order(bary, _weighted(problem.weight, pts, w, expo), M, X))


def assemble_weight_commutator(problem: ProblemSpec) -> sp.coo_matrix:
    """Full-space matrix of (-2 gamma rho^-1 (D rho)^* D u, v) in H^{0,gamma}."""
    mesh = problem.mesh
    g = problem.weight.gamma
    if g == 0.0 or problem.weight.trivial:
        return _zero(mesh)
    grads, _ = triangle_gradients(mesh)
    Gop = _grad_operator(grads)
    bary, pts, w = _mid_quadrature(mesh)
    flat = pts.reshape(-1, 2)
    mu, lam = problem.coefficients.at(flat)
    F = factor_matrix(problem.kind, mu, lam)
    Drho = symbol(F, problem.weight.grad_rho(flat))  # (nq, k, 2)
    rho = problem.weight.rho(flat)
    M = (-2.0 * g / rho)[:, None, None] * np.swapaxes(Drho, 1, 2)
    k = F.shape[1]
    M = M.reshape(*pts.shape[:2], 2, k)
    X = np.einsum("nqrk,nkj->nqrj", F.reshape(*pts.shape[:2], k, 4), Gop)
    ww = _weighted(problem.weight, pts, w, -2.0 * g)
    return _scatter(mesh, np.arange(mesh.n_triangles), _first_order(bary, ww, M, X))


def _tangential(problem: ProblemSpec, d_tau) -> sp.coo_matrix:
    """(b1^-1 d d_t u, v) on Robin edges, t = (nu2, -nu1)."""
    mesh = problem.mesh
    edges = problem.partition.robin_edges
    if len(edges) == 0 or d_tau is None:
        return _zero(mesh)
    tri, bary, pts, w = _edge_quadrature(mesh, edges)
    grads, _ = triangle_gradients(mesh)
    Gop = _grad_operator(grads)[tri]
    nu = mesh.edge_normals()[edges]
    t = np.stack([nu[:, 1], -nu[:, 0]], axis=1)
    Tm = np.zeros((len(edges), 2, 4))
    for i in range(2):
        for j in range(2):
            Tm[:, i, 2 * i + j] = t[:, j]
    X = np.broadcast_to((Tm @ Gop)[:, None], (len(edges), 2, 2, 6))
    M = np.linalg.solve(_field_at(_b1(problem), pts, (2, 2)), _field_at(d_tau, pts, (2, 2)))
    ww = _weighted(problem.weight, pts, w, -2.0 * problem.weight.gamma)
    return _scatter(mesh, tri, _first_order(bary, ww, M, X))


def assemble_perturbation(problem: ProblemSpec) -> tuple[sp.coo_matrix, sp.coo_matrix]:
    """Full-space (small, compact) parts of P = A - B."""
    pert = problem.perturbation
    expo = -2.0 * problem.weight.gamma
    small = _zero(problem.mesh).tocsr()
    compact = _zero(problem.mesh).tocsr()
    if pert.da0_s is not None:
        small = small + _volume_matrix(problem, pert.da0_s, expo)
    if pert.db0_s is not None:
        small = small + _robin_matrix(problem, pert.db0_s, expo)
    if pert.d_tau is not None:
        small = small + _tangential(problem, pert.d_tau)
    if pert.a1 is not None:
        small = small + _first_order_volume(problem, pert.a1, expo)
    if not pert.weight_part:
        small = small + assemble_weight_commutator(problem)
    if pert.da0_c is not None:
        compact = compact + _volume_matrix(problem, pert.da0_c, expo)
    if pert.db0_c is not None:
        compact = compact + _robin_matrix(problem, pert.db0_c, expo)
    return small, compact


def assemble_Q(problem: ProblemSpec, dofmap: Optional[DofMap] = None) -> sp.csr_matrix:
    """Matrix A of the form Q = B + P on the free DOFs."""
    dofmap = DofMap.for_problem(problem) if dofmap is None else dofmap
    small, compact = assemble_perturbation(problem)
    return dofmap.restrict(_full_gram_plus(problem) + small + compact)


def assemble_pencil(problem: ProblemSpec) -> FormPencil:
    dofmap = DofMap.for_problem(problem)
    B = dofmap.restrict(_full_gram_plus(problem))
    small, compact = assemble_perturbation(problem)
    Ps = dofmap.restrict(small)
    Pc = dofmap.restrict(compact)
    A = sp.csr_matrix(B + Ps + Pc)
    return FormPencil(B, A, Ps, Pc, dofmap, problem.config_hash)


# ---------------------------------------------------------------- auxiliary norms

def assemble_mass(problem: ProblemSpec, exponent: Optional[float] = None, dofmap: Optional[DofMap] = None) -> sp.csr_matrix:
    """Weighted L2 Gram: int rho^exponent u.v (default exponent -2 gamma, the H^{0,gamma} product)."""
    dofmap = DofMap.for_problem(problem) if dofmap is None else dofmap
    expo = -2.0 * problem.weight.gamma if exponent is None else exponent
    return dofmap.restrict(_volume_matrix(problem, 1.0, expo))


def assemble_boundary_mass(problem: ProblemSpec, edges: Optional[np.ndarray] = None, dofmap: Optional[DofMap] = None) -> sp.csr_matrix:
    """Unweighted L2 Gram over the given boundary edges (default: Robin edges)."""
    dofmap = DofMap.for_problem(problem) if dofmap is None else dofmap
    plain = ProblemSpec(problem.mesh, problem.kind, problem.coefficients)
    edges = problem.partition.robin_edges if edges is None else edges
    return dofmap.restrict(_robin_matrix(plain, 1.0, 0.0, edges))


def assemble_h_norm(problem: ProblemSpec, dofmap: Optional[DofMap] = None) -> sp.csr_matrix:
    """Gram of ||D3 u||^2 + ||u||^2 on the boundary outside S, both unweighted."""
    dofmap = DofMap.for_problem(problem) if dofmap is None else dofmap
    plain = ProblemSpec(problem.mesh, Kind.D3, problem.coefficients)
    K = _factor_term(plain, Kind.D3, 0.0) + _robin_matrix(plain, 1.0, 0.0, problem.partition.robin_edges)
    return dofmap.restrict(K)


def assemble_tau0_boundary(mesh: Mesh, coeffs: LameCoefficients, edges: np.ndarray, dofmap: Optional[DofMap] = None) -> sp.csr_matrix:
    """Gram of (mu d_tau0 u, v) over the given boundary edges, built from ((nu div)^T - nu div)."""
    dofmap = DofMap.full(mesh) if dofmap is None else dofmap
    if len(edges) == 0:
        return dofmap.restrict(_zero(mesh))
    problem = ProblemSpec(mesh, Kind.D1, coeffs)
    tri, bary, pts, w = _edge_quadrature(mesh, edges)
    grads, _ = triangle_gradients(mesh)
    Gop = _grad_operator(grads)[tri]
    nu = mesh.edge_normals()[edges]
    Tau = np.zeros((len(edges), 2, 4))
    for i in range(2):
        for j in range(2):
            Tau[:, i, 2 * j + i] += nu[:, j]
            Tau[:, i, 2 * j + j] -= nu[:, i]
    mu, _ = coeffs.at(pts.reshape(-1, 2))
    M = (mu.reshape(len(edges), 2)[:, :, None, None] * np.eye(2))
    X = np.broadcast_to((Tau @ Gop)[:, None], (len(edges), 2, 2, 6))
    return dofmap.restrict(_scatter(problem.mesh, tri, _first_order(bary, w, M, X)))


def assemble_factor_gram(problem: ProblemSpec, kind: Optional[Kind] = None, dofmap: Optional[DofMap] = None) -> sp.csr_matrix:
    """Only the weighted (D u, D v) term."""
    dofmap = DofMap.for_problem(problem) if dofmap is None else dofmap
    return dofmap.restrict(_factor_term(problem, kind))


def _scalar_stiffness_mass(mesh: Mesh, weight: Weight, e_grad: float, e_mass: float):
    grads, area = triangle_gradients(mesh)
    cent = mesh.vertices[mesh.triangles].mean(axis=1)
    wt = np.abs(area) * weight.power(cent, e_grad)
    Kl = wt[:, None, None] * np.einsum("nak,nbk->nab", grads, grads)
    bary, pts, w = _mid_quadrature(mesh)
    ww = _weighted(weight, pts, w, e_mass)
    Ml = np.einsum("nq,nqa,nqb->nab", ww, bary, bary)
    T = mesh.triangles
    rows = np.repeat(T, 3, axis=1).ravel()
    cols = np.tile(T, (1, 3)).ravel()
    n = mesh.n_vertices
    K = sp.coo_matrix((Kl.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((Ml.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return K, M


def _vectorize(K: sp.spmatrix) -> sp.csr_matrix:
    return sp.kron(K, sp.identity(2), format="csr")


# 6-point degree-4 rule on the reference triangle (barycentric points, weights summing to 1)
_A6, _B6 = 0.445948490915965, 0.091576213509771
_W6A, _W6B = 0.223381589678011, 0.109951743655322
_RULE6 = (
    np.array([[_A6, _A6, 1 - 2 * _A6], [_A6, 1 - 2 * _A6, _A6], [1 - 2 * _A6, _A6, _A6],
              [_B6, _B6, 1 - 2 * _B6], [_B6, 1 - 2 * _B6, _B6], [1 - 2 * _B6, _B6, _B6]]),
    np.array([_W6A] * 3 + [_W6B] * 3),
)


def _composite_rule(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Base rule repeated on the 4**level children of uniform red refinement."""
    simplices = [np.eye(3)]
    for _ in range(level):
        nxt = []
        for V in simplices:
            m01, m12, m20 = 0.5 * (V[0] + V[1]), 0.5 * (V[1] + V[2]), 0.5 * (V[2] + V[0])
            nxt += [np.array([V[0], m01, m20]), np.array([m01, V[1], m12]),
                    np.array([m20, m12, V[2]]), np.array([m01, m12, m20])]
        simplices = nxt
    pts = np.concatenate([_RULE6[0] @ V for V in simplices])
    wts = np.concatenate([_RULE6[1] / len(simplices)] * len(simplices))
    return pts, wts


def self_pair_moment(P: np.ndarray, s: float, n_gauss: int = 32) -> np.ndarray:
    """I_T = int_T int_T (x-y)(x-y)^T |x-y|^(-2-2s) dx dy for the triangle with vertices P (3, 2).

    Uses the covariogram of a triangle, |T ∩ (T+z)| = |T| (1 - |z|_T)^2 with the gauge
    |z|_T = (1/2) sum_i |grad phi_i . z|, so the radial integral is a beta function and only a
    smooth angular integral remains, split at the six directions where the gauge has kinks.
    """
    d1, d2 = P[1] - P[0], P[2] - P[0]
    det = d1[0] * d2[1] - d1[1] * d2[0]
    area = 0.5 * abs(det)
    g1 = np.array([d2[1], -d2[0]]) / det
    g2 = np.array([-d1[1], d1[0]]) / det
    G = np.stack([-g1 - g2, g1, g2])
    kinks = np.sort(np.mod(np.concatenate([np.arctan2(G[:, 1], G[:, 0]) + 0.5 * np.pi,
                                           np.arctan2(G[:, 1], G[:, 0]) - 0.5 * np.pi]), 2 * np.pi))
    kinks = np.append(kinks, kinks[0] + 2 * np.pi)
    x, w = np.polynomial.legendre.leggauss(n_gauss)
    total = np.zeros((2, 2))
    for a, b in zip(kinks[:-1], kinks[1:]):
        if b - a < 1e-15:
            continue
        th = 0.5 * (b - a) * x + 0.5 * (a + b)
        e = np.stack([np.cos(th), np.sin(th)], axis=1)
        gauge = 0.5 * np.abs(e @ G.T).sum(axis=1)
        vals = gauge ** (-(2.0 - 2.0 * s))
        total += 0.5 * (b - a) * np.einsum("q,q,qi,qj->ij", w, vals, e, e)
    return area * beta_fn(2.0 - 2.0 * s, 3.0) * total


def gagliardo_gram(mesh: Mesh, s: float, touch_level: int = 2, near_level: int = 1, near_ratio: float = 2.0) -> np.ndarray:
    """Dense scalar Gram of the Gagliardo seminorm int int |u(x)-u(y)|^2 / |x-y|^(2+2s)."""
    if not 0.0 < s < 1.0:
        raise ConfigError("Gagliardo order must lie in (0, 1)")
    nv, nt = mesh.n_vertices, mesh.n_triangles
    out = np.zeros((nv, nv))
    grads, _ = triangle_gradients(mesh)
    P = mesh.vertices[mesh.triangles]
    for t in range(nt):
        I = self_pair_moment(P[t], s)
        local = grads[t] @ I @ grads[t].T
        out[np.ix_(mesh.triangles[t], mesh.triangles[t])] += local
    pi, pj = np.triu_indices(nt, k=1)
    if len(pi) == 0:
        return out
    T = mesh.triangles
    touch = np.zeros(len(pi), dtype=bool)
    for a in range(3):
        for b in range(3):
            touch |= T[pi, a] == T[pj, b]
    cent = P.mean(axis=1)
    diam = np.max(np.linalg.norm(P - np.roll(P, 1, axis=1), axis=2), axis=1)
    dist = np.linalg.norm(cent[pi] - cent[pj], axis=1)
    near = dist < near_ratio * np.maximum(diam[pi], diam[pj])
    rule_of_pair = np.where(touch, 2, np.where(near, 1, 0)).astype(np.int64)
    rules = [_composite_rule(0), _composite_rule(near_level), _composite_rule(touch_level)]
    L = max(len(r[1]) for r in rules)
    rule_pts = np.zeros((3, L, 3))
    rule_wts = np.zeros((3, L))
    rule_len = np.array([len(r[1]) for r in rules], dtype=np.int64)
    for k, (p, w) in enumerate(rules):
        rule_pts[k, :len(w)] = p
        rule_wts[k, :len(w)] = w
    _kernels.gagliardo_pairs(np.ascontiguousarray(mesh.vertices), np.ascontiguousarray(T), pi.astype(np.int64),
                             pj.astype(np.int64), rule_of_pair, rule_pts, rule_wts, rule_len, float(s), out)
    return out


def assemble_sobolev(problem: ProblemSpec, s: float, gamma: Optional[float] = None, dofmap: Optional[DofMap] = None) -> sp.csr_matrix:
    """Gram of the weighted H^{s,gamma} norm on vector fields, 0 < s <= 1."""
    if not 0.0 < s <= 1.0:
        raise ConfigError("Sobolev order must lie in (0, 1]")
    dofmap = DofMap.for_problem(problem) if dofmap is None else dofmap
    mesh = problem.mesh
    weight = problem.weight
    g = weight.gamma if gamma is None else gamma
    if s == 1.0:
        K, M = _scalar_stiffness_mass(mesh, weight, -2.0 * g, -2.0 * g - 2.0)
        return dofmap.restrict(_vectorize(K + M))
    _, M0 = _scalar_stiffness_mass(mesh, weight, 0.0, -2.0 * (g + s))
    _, M1 = _scalar_stiffness_mass(mesh, weight, 0.0, 0.0)
    Gs = gagliardo_gram(mesh, s)
    # nodal interpolation of rho^-gamma u; Y vertices are constrained, so their scale is moot
    rho_v = weight.rho(mesh.vertices)
    scale = np.ones(mesh.n_vertices)
    if g != 0.0:
        scale = np.where(rho_v > 0, np.where(rho_v > 0, rho_v, 1.0) ** (-g), 0.0)
    Sd = sp.diags(scale)
    K = M0 + Sd @ (M1 + sp.csr_matrix(Gs)) @ Sd
    return dofmap.restrict(_vectorize(sp.csr_matrix(K)))


def assemble_h1(problem: ProblemSpec, dofmap: Optional[DofMap] = None) -> sp.csr_matrix:
    """Unweighted H1 Gram (stiffness + mass) on vector fields."""
    dofmap = DofMap.for_problem(problem) if dofmap is None else dofmap
    K, M = _scalar_stiffness_mass(problem.mesh, unit_weight(), 0.0, 0.0)
    return dofmap.restrict(_vectorize(K + M))


# ---------------------------------------------------------------- dual norm and export

def cholesky(B) -> np.ndarray:
    """Lower Cholesky factor of a Hermitian positive definite matrix (dense)."""
    Bd = B.toarray() if sp.issparse(B) else np.asarray(B)
    if Bd.shape[0] == 0:
        return Bd.copy()
    try:
        return scipy.linalg.cholesky(0.5 * (Bd + Bd.conj().T), lower=True)
    except np.linalg.LinAlgError as exc:
        raise CholeskyFail("Gram matrix is not positive definite (the form is only a seminorm)") from exc


def dual_norm(B, f: np.ndarray) -> float:
    """sqrt(f^* B^-1 f), the discrete negative norm of the functional f."""
    L = cholesky(B)
    y = scipy.linalg.solve_triangular(L, np.asarray(f), lower=True)
    return float(np.sqrt(np.real(np.vdot(y, y))))


def export_coo(K, path, config_hash: str = "") -> None:
    """Write nonzeros as lines ``i j re im`` (0-based), floats in repr form."""
    C = sp.coo_matrix(K)
    order = np.lexsort((C.col, C.row))
    with open(Path(path), "w") as fh:
        fh.write(f"# shape {C.shape[0]} {C.shape[1]}\n")
        if config_hash:
            fh.write(f"# config_sha256 {config_hash}\n")
        for k in order:
            v = complex(C.data[k])
            fh.write(f"{C.row[k]} {C.col[k]} {v.real!r} {v.imag!r}\n")
