"""Generalized eigenproblems A x = lambda B x, root-vector structure and sector bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import _kernels
from .errors import ClusterAmbiguous, NoConvergence
from .assembly import FormPencil, cholesky


def _dense(M) -> np.ndarray:
    return M.toarray() if sp.issparse(M) else np.asarray(M)


def reduce_to_standard(A, B) -> np.ndarray:
    """C = L^-1 A L^-* with B = L L^*; C has the spectrum of the pencil (A, B)."""
    L = cholesky(B)
    if L.shape[0] == 0:
        return np.zeros((0, 0), dtype=complex)
    Ad = _dense(A)
    X = scipy.linalg.solve_triangular(L, Ad, lower=True)
    return scipy.linalg.solve_triangular(L, X.conj().T, lower=True).conj().T


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    converged: bool
    iterations: int = 0

    @property
    def N(self) -> int:
        return len(self.eigenvalues)


def _order(lam: np.ndarray) -> np.ndarray:
    return np.lexsort((np.round(lam.imag, 12), np.round(lam.real, 12), np.round(np.abs(lam), 12)))


def eigensolve(C, tol: float = 1e-10, max_iter: Optional[int] = None, per_eigenvalue: int = 200) -> Spectrum:
    """All eigenpairs of a dense matrix by Hessenberg reduction and shifted QR.

    Eigenvectors come from back-substitution on the Schur form. ``max_iter`` caps the total
    number of QR sweeps (default 200 N); ``per_eigenvalue`` caps sweeps spent on one deflation.
    """
    C = np.asarray(C, dtype=complex)
    n = C.shape[0]
    if n == 0:
        return Spectrum(np.zeros(0, complex), np.zeros((0, 0), complex), np.zeros(0), True, 0)
    if not np.all(np.isfinite(C)):
        raise NoConvergence("matrix has non-finite entries")
    max_iter = 200 * n if max_iter is None else max_iter
    H, Z = _kernels.hessenberg(np.ascontiguousarray(C))
    H = np.ascontiguousarray(H)
    Z = np.ascontiguousarray(Z)
    its = _kernels.schur_qr(H, Z, per_eigenvalue)
    if its < 0 or its > max_iter:
        raise NoConvergence(f"QR iteration did not converge within {max_iter} sweeps")
    T = np.triu(H)
    Y = _kernels.triangular_eigenvectors(T)
    X = Z @ Y
    X /= np.linalg.norm(X, axis=0, keepdims=True)
    lam = np.diag(T).copy()
    cn = np.linalg.norm(C, 2)
    scale = cn if cn > 0 else 1.0
    res = np.linalg.norm(C @ X - X * lam, axis=0) / scale
    idx = _order(lam)
    return Spectrum(lam[idx], X[:, idx], res[idx], bool(np.all(res <= tol)), int(its))


def pencil_eigs(A, B, tol: float = 1e-10) -> Spectrum:
    return eigensolve(reduce_to_standard(A, B), tol)


@dataclass(frozen=True)
class ChainInfo:
    center: complex
    members: tuple
    geometric: int
    algebraic: int
    chain_length: int
    block_sizes: tuple


@dataclass(frozen=True)
class RootChainReport:
    clusters: list
    cluster_of: np.ndarray
    total_algebraic: int

    def multiplicities(self) -> dict:
        return {c.center: (c.geometric, c.algebraic, c.chain_length) for c in self.clusters}


def cluster_eigenvalues(lam: np.ndarray, tol: float) -> np.ndarray:
    """Single-linkage cluster labels, numbered in order of first appearance."""
    n = len(lam)
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        close = np.flatnonzero(np.abs(lam[i + 1:] - lam[i]) <= tol) + i + 1
        for j in close:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(n)])
    _, labels = np.unique(roots, return_inverse=True)
    first = {}
    out = np.empty(n, dtype=np.int64)
    for i, lab in enumerate(labels):
        out[i] = first.setdefault(lab, len(first))
    return out


def root_chains(C, spectrum: Spectrum, cluster_tol: Optional[float] = None, rank_tol: float = 1e-8) -> RootChainReport:
    """Jordan structure per eigenvalue cluster from the nullities of (C - c I)^k."""
    C = np.asarray(C, dtype=complex)
    n = C.shape[0]
    if n == 0:
        return RootChainReport([], np.zeros(0, np.int64), 0)
    cnorm = np.linalg.norm(C, 2)
    tol = 1e-6 * max(cnorm, 1e-300) if cluster_tol is None else cluster_tol
    labels = cluster_eigenvalues(spectrum.eigenvalues, tol)
    clusters = []
    for lab in range(labels.max() + 1):
        members = np.flatnonzero(labels == lab)
        c = complex(np.mean(spectrum.eigenvalues[members]))
        # scale by ||C||, not ||C - cI||: when C - cI is rounding noise the nullity must be full
        S = (C - c * np.eye(n)) / max(cnorm, 1e-300)
        # ker S^k = ker (I - K K^*) S with K spanning ker S^(k-1); avoids ranking powers of S
        nullities = [0]
        K = np.zeros((n, 0), dtype=complex)
        for _ in range(len(members) + 1):
            _, sv, Vh = np.linalg.svd(S - K @ (K.conj().T @ S))
            null = int(np.sum(sv <= rank_tol))
            K = Vh[n - null:].conj().T
            nullities.append(null)
            if nullities[-1] == nullities[-2]:
                break
        k_star = next(k for k in range(1, len(nullities)) if k + 1 >= len(nullities) or nullities[k + 1] == nullities[k])
        alg = nullities[k_star]
        if alg != len(members):
            raise ClusterAmbiguous(
                f"cluster near {c:.6g} has {len(members)} eigenvalues but algebraic multiplicity {alg}; adjust cluster_tol"
            )
        ge = [nullities[j] - nullities[j - 1] for j in range(1, k_star + 1)] + [0]
        sizes = []
        for j in range(1, k_star + 1):
            sizes += [j] * (ge[j - 1] - ge[j])
        clusters.append(ChainInfo(c, tuple(int(m) for m in members), nullities[1], alg, k_star, tuple(sorted(sizes, reverse=True))))
    return RootChainReport(clusters, labels, sum(ci.algebraic for ci in clusters))


def relative_form_norm(P, B) -> float:
    """Smallest M with |v^* P u| <= M ||u||_B ||v||_B, i.e. ||L^-1 P L^-*||_2."""
    if _dense(B).shape[0] == 0:
        return 0.0
    return float(np.linalg.norm(reduce_to_standard(P, B), 2))


@dataclass(frozen=True)
class SectorReport:
    M: float
    M_compact: float
    bound: float
    max_angle: float
    max_disc: float
    violations: list
    fredholm_margin: float
    threshold_breach: bool
    completeness_threshold: float
    below_completeness_threshold: bool
    eigenvalues: np.ndarray = field(repr=False, default=None)

    @property
    def ok(self) -> bool:
        return not self.violations


def sector_check(A, B, P_small=None, P_compact=None, tol: float = 1e-10, completeness_threshold: float = 1.0) -> SectorReport:
    """Check every eigenvalue of (A, B) against |lambda - 1| <= M + tol and |arg lambda| <= arcsin(M) + tol.

    M is measured on the small part only (A - B when no split is given). With a compact part
    present, eigenvalues outside the bound are still listed but expected in finite number.
    """
    Bd = _dense(B)
    Ad = _dense(A)
    Ps = Ad - Bd if P_small is None else _dense(P_small)
    M = relative_form_norm(Ps, Bd)
    Mc = relative_form_norm(_dense(P_compact), Bd) if P_compact is not None else 0.0
    spec = eigensolve(reduce_to_standard(Ad, Bd))
    lam = spec.eigenvalues
    bound = math.asin(min(M, 1.0))
    ang = np.abs(np.angle(lam)) if len(lam) else np.zeros(0)
    disc = np.abs(lam - 1.0) if len(lam) else np.zeros(0)
    bad = (disc > M + tol) | (ang > bound + tol)
    return SectorReport(
        M, Mc, bound,
        float(ang.max()) if len(ang) else 0.0,
        float(disc.max()) if len(disc) else 0.0,
        [complex(v) for v in lam[bad]],
        1.0 - M, M >= 1.0,
        completeness_threshold, M < completeness_threshold, lam,
    )


def sector_check_pencil(pencil: FormPencil, tol: float = 1e-10, completeness_threshold: float = 1.0) -> SectorReport:
    comp = pencil.P_compact if pencil.P_compact.nnz else None
    return sector_check(pencil.A, pencil.B, pencil.P_small, comp, tol, completeness_threshold)


def isometry_check(B, n_samples: int = 16, seed: int = 0) -> dict:
    """Norm of u -> B u from the B-norm to the dual norm, and of its inverse; both equal 1."""
    from .assembly import dual_norm

    Bd = _dense(B)
    n = Bd.shape[0]
    if n == 0:
        return {"norm": 1.0, "inverse_norm": 1.0, "sampled_max_deviation": 0.0}
    L = cholesky(Bd)
    T = scipy.linalg.solve_triangular(L, Bd, lower=True)
    T = scipy.linalg.solve_triangular(L, T.conj().T, lower=True).conj().T
    sv = np.linalg.svd(T, compute_uv=False)
    rng = np.random.default_rng(seed)
    dev = 0.0
    for _ in range(n_samples):
        u = rng.standard_normal(n)
        nb = math.sqrt(float(np.real(u @ Bd @ u)))
        dev = max(dev, abs(dual_norm(Bd, Bd @ u) / nb - 1.0))
    return {"norm": float(sv.max()), "inverse_norm": float(1.0 / sv.min()), "sampled_max_deviation": dev}


def write_spectrum_csv(path, spectrum: Spectrum, chains: Optional[RootChainReport] = None, config_hash: str = "") -> None:
    lines = [f"# config_sha256 {config_hash}", "re,im,residual,cluster_id,alg_mult,chain_len"]
    for i, lam in enumerate(spectrum.eigenvalues):
        if chains is not None and chains.clusters:
            cid = int(chains.cluster_of[i])
            info = chains.clusters[cid]
            alg, cl = info.algebraic, info.chain_length
        else:
            cid, alg, cl = i, 1, 1
        lines.append(f"{float(lam.real)!r},{float(lam.imag)!r},{float(spectrum.residuals[i])!r},{cid},{alg},{cl}")
    Path(path).write_text("\n".join(lines) + "\n")
