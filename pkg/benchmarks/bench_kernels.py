"""Compiled kernels against their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 3]

The fallback is what runs under LAME_SPECTRA_NO_NUMBA=1. Both paths are checked for agreement
before timing; the first compiled call (JIT or cache load) is excluded.
"""
import argparse
import time

import numpy as np

from lame_spectra import _kernels
from lame_spectra._backend import HAVE_NUMBA
from lame_spectra.assembly import _composite_rule
from lame_spectra.mesh import build_disc_mesh


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def gagliardo_case():
    mesh = build_disc_mesh(16)
    nt = mesh.n_triangles
    pi, pj = np.triu_indices(nt, 1)
    pts, wts = _composite_rule(0)
    rule_pts = pts[None].copy()
    rule_wts = wts[None].copy()
    rule_len = np.array([len(wts)])
    rule_of = np.zeros(len(pi), dtype=np.int64)
    nv = mesh.n_vertices

    def run(kernel):
        return lambda: kernel(mesh.vertices, mesh.triangles, pi, pj, rule_of, rule_pts, rule_wts, rule_len, 0.5, np.zeros((nv, nv)))

    return run


def qr_case(n=120, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))

    def run(hess, schur):
        def go():
            H, Z = hess(A)
            H = np.ascontiguousarray(H)
            Z = np.ascontiguousarray(Z)
            schur(H, Z, 200)
            return np.sort_complex(np.diag(H))
        return go

    return run


def mode_case(n=64):
    delta = np.geomspace(1e-6, 1.0, 200)
    nodes, wts = np.polynomial.legendre.leggauss(8)
    brk = np.linspace(0.0, np.pi, 4 * n + 1)
    a, b = brk[:-1], brk[1:]
    x = ((b - a)[:, None] * (nodes + 1) / 2 + a[:, None]).ravel()
    w = ((b - a)[:, None] * wts / 2).ravel()
    X = np.tile(x, (len(delta), 1))
    W = np.tile(w, (len(delta), 1))

    def run(kernel):
        return lambda: kernel(float(n), delta, 1.5, False, X, W)

    return run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba unavailable (or LAME_SPECTRA_NO_NUMBA set); nothing to compare")
        return
    g = gagliardo_case()
    q = qr_case()
    m = mode_case()
    cases = [
        ("gagliardo_pairs", g(_kernels.gagliardo_pairs), g(_kernels._gagliardo_pairs_numpy)),
        ("hessenberg+schur_qr", q(_kernels.hessenberg, _kernels.schur_qr),
         q(_kernels.hessenberg.py_func, _kernels.schur_qr.py_func)),
        ("mode_angular", m(_kernels.mode_angular), m(_kernels._mode_angular_numpy)),
    ]
    print(f"{'kernel':<22}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max diff':>12}")
    for name, fast, slow in cases:
        fast()  # compile or load from cache
        tf, a = best_of(fast, args.repeat)
        ts, b = best_of(slow, 1)
        diff = float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))
        print(f"{name:<22}{tf:>12.4f}{ts:>12.4f}{ts / tf:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
