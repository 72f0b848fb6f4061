"""Hot loops. Each function is plain numpy-on-slices so the same source runs compiled or not."""
import numpy as np

from ._backend import HAVE_NUMBA, njit

_EPS = 2.220446049250313e-16


@njit
def hessenberg(A):
    """Householder reduction A = Q H Q^*; returns (H, Q) as complex arrays."""
    n = A.shape[0]
    H = A.astype(np.complex128)
    Q = np.eye(n, dtype=np.complex128)
    for k in range(n - 2):
        x = H[k + 1:, k].copy()
        alpha = np.sqrt(np.sum(np.abs(x) ** 2))
        if alpha == 0.0:
            continue
        ax0 = np.abs(x[0])
        phase = x[0] / ax0 if ax0 > 0.0 else 1.0 + 0.0j
        v = x
        v[0] = v[0] + phase * alpha
        v = v / np.sqrt(np.sum(np.abs(v) ** 2))
        vc = np.conj(v)
        blk = H[k + 1:, :].copy()
        H[k + 1:, :] = blk - 2.0 * np.outer(v, vc @ blk)
        blk = H[:, k + 1:].copy()
        H[:, k + 1:] = blk - 2.0 * np.outer(blk @ v, vc)
        blk = Q[:, k + 1:].copy()
        Q[:, k + 1:] = blk - 2.0 * np.outer(blk @ v, vc)
        H[k + 2:, k] = 0.0
    return H, Q


@njit
def _givens(x, y):
    ax = np.abs(x)
    r = np.sqrt(ax * ax + np.abs(y) ** 2)
    if r == 0.0:
        return 1.0, 0.0j
    if ax == 0.0:
        return 0.0, np.conj(y) / r
    return ax / r, (x / ax) * np.conj(y) / r


@njit
def schur_qr(H, Z, max_iter):
    """Single-shift implicit QR on Hessenberg H, in place; Z accumulates the unitary factor.

    Returns the total iteration count, or -1 if some eigenvalue needed more than max_iter sweeps.
    """
    n = H.shape[0]
    hi = n - 1
    its = 0
    total = 0
    hnorm = np.sqrt(np.sum(np.abs(H) ** 2))
    while hi > 0:
        l = hi
        while l > 0:
            s = np.abs(H[l - 1, l - 1]) + np.abs(H[l, l])
            if s == 0.0:
                s = hnorm
            if np.abs(H[l, l - 1]) <= _EPS * s:
                H[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            hi -= 1
            its = 0
            continue
        its += 1
        total += 1
        if its > max_iter:
            return -1
        if its % 10 == 0:
            # exceptional shift to break cycles
            shift = H[hi, hi] + np.abs(H[hi, hi - 1]) * (0.75 + 0.5j)
        else:
            a = H[hi - 1, hi - 1]
            b = H[hi - 1, hi]
            c = H[hi, hi - 1]
            d = H[hi, hi]
            tr = 0.5 * (a - d)
            disc = np.sqrt(tr * tr + b * c)
            m1 = d - (b * c) / (tr + disc) if np.abs(tr + disc) > 0.0 else d
            m2 = d - (b * c) / (tr - disc) if np.abs(tr - disc) > 0.0 else d
            shift = m1 if np.abs(m1 - d) <= np.abs(m2 - d) else m2
        x = H[l, l] - shift
        y = H[l + 1, l]
        for k in range(l, hi):
            if k > l:
                x = H[k, k - 1]
                y = H[k + 1, k - 1]
            c, s = _givens(x, y)
            c0 = max(k - 1, 0)
            rk = H[k, c0:].copy()
            rk1 = H[k + 1, c0:].copy()
            H[k, c0:] = c * rk + s * rk1
            H[k + 1, c0:] = -np.conj(s) * rk + c * rk1
            r1 = min(k + 2, hi) + 1
            ck = H[:r1, k].copy()
            ck1 = H[:r1, k + 1].copy()
            H[:r1, k] = c * ck + np.conj(s) * ck1
            H[:r1, k + 1] = -s * ck + c * ck1
            zk = Z[:, k].copy()
            zk1 = Z[:, k + 1].copy()
            Z[:, k] = c * zk + np.conj(s) * zk1
            Z[:, k + 1] = -s * zk + c * zk1
            if k > l:
                H[k + 1, k - 1] = 0.0
    return total


@njit
def triangular_eigenvectors(T):
    """Columns y_k with T y_k = T[k,k] y_k for upper triangular T, y_k[k] = 1, y_k[j>k] = 0."""
    n = T.shape[0]
    Y = np.zeros((n, n), dtype=np.complex128)
    tnorm = np.sqrt(np.sum(np.abs(T) ** 2))
    small = max(_EPS * tnorm, 1e-300)
    for k in range(n):
        lam = T[k, k]
        Y[k, k] = 1.0
        for i in range(k - 1, -1, -1):
            acc = np.sum(T[i, i + 1:k + 1] * Y[i + 1:k + 1, k])
            den = T[i, i] - lam
            if np.abs(den) < small:
                den = small
            Y[i, k] = -acc / den
    return Y


@njit
def gagliardo_pairs(vertices, tris, pi, pj, rule_of_pair, rule_pts, rule_wts, rule_len, s, out):
    """Accumulate 2 * int_T1 int_T2 |u(x)-u(y)|^2 |x-y|^(-2-2s) for listed pairs into out (nv x nv).

    Each rule is a barycentric point set on the reference triangle stored in rule_pts[r, :rule_len[r]].
    """
    expo = -(1.0 + s)
    for p in range(pi.shape[0]):
        t1 = tris[pi[p]]
        t2 = tris[pj[p]]
        r = rule_of_pair[p]
        nq = rule_len[r]
        bary = rule_pts[r, :nq]
        w = rule_wts[r, :nq]
        P1 = vertices[t1]
        P2 = vertices[t2]
        a1 = 0.5 * np.abs((P1[1, 0] - P1[0, 0]) * (P1[2, 1] - P1[0, 1]) - (P1[1, 1] - P1[0, 1]) * (P1[2, 0] - P1[0, 0]))
        a2 = 0.5 * np.abs((P2[1, 0] - P2[0, 0]) * (P2[2, 1] - P2[0, 1]) - (P2[1, 1] - P2[0, 1]) * (P2[2, 0] - P2[0, 0]))
        X = bary @ P1
        Yq = bary @ P2
        loc = np.zeros((6, 6))
        for a in range(nq):
            for b in range(nq):
                dx = X[a, 0] - Yq[b, 0]
                dy = X[a, 1] - Yq[b, 1]
                k = w[a] * w[b] * (dx * dx + dy * dy) ** expo
                for i in range(3):
                    for j in range(3):
                        loc[i, j] += k * bary[a, i] * bary[a, j]
                        loc[3 + i, 3 + j] += k * bary[b, i] * bary[b, j]
                        loc[i, 3 + j] -= k * bary[a, i] * bary[b, j]
        scale = 2.0 * a1 * a2
        for i in range(3):
            for j in range(3):
                out[t1[i], t1[j]] += scale * loc[i, j]
                out[t2[i], t2[j]] += scale * loc[3 + i, 3 + j]
                out[t1[i], t2[j]] += scale * loc[i, 3 + j]
                out[t2[j], t1[i]] += scale * loc[i, 3 + j]
    return out


@njit
def mode_angular(n, delta, alpha, plain, phi_nodes, phi_wts):
    """Angular averages at t = 1 - delta[i]: (1/2pi) int_0^2pi w(phi) (1 + t^2 - 2 t cos phi)^(-alpha) dphi.

    w = 1 - cos(n phi), or w = 1 when ``plain``. Row i of phi_nodes/phi_wts is a rule on [0, pi]
    (the integrand is even) graded toward phi = 0 by the caller.
    """
    out = np.zeros(delta.shape[0])
    for i in range(delta.shape[0]):
        d = delta[i]
        ti = 1.0 - d
        acc = 0.0
        for q in range(phi_nodes.shape[1]):
            ph = phi_nodes[i, q]
            # 1 + t^2 - 2 t cos(phi) without cancellation near t = 1, phi = 0
            base = d * d + 4.0 * ti * np.sin(0.5 * ph) ** 2
            wgt = 0.5 if plain else np.sin(0.5 * n * ph) ** 2
            acc += phi_wts[i, q] * 2.0 * wgt * base ** (-alpha)
        out[i] = acc / np.pi
    return out


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _gagliardo_pairs_numpy(vertices, tris, pi, pj, rule_of_pair, rule_pts, rule_wts, rule_len, s, out, chunk=2048):
    expo = -(1.0 + s)
    for r in np.unique(rule_of_pair):
        nq = rule_len[r]
        bary = rule_pts[r, :nq]
        w = rule_wts[r, :nq]
        ww = np.outer(w, w)
        sel = np.flatnonzero(rule_of_pair == r)
        for start in range(0, len(sel), chunk):
            idx = sel[start:start + chunk]
            T1 = tris[pi[idx]]
            T2 = tris[pj[idx]]
            P1 = vertices[T1]
            P2 = vertices[T2]
            d1 = _cross2(P1[:, 1] - P1[:, 0], P1[:, 2] - P1[:, 0])
            d2 = _cross2(P2[:, 1] - P2[:, 0], P2[:, 2] - P2[:, 0])
            scale = 0.5 * np.abs(d1) * np.abs(d2)  # 2 * a1 * a2
            X = np.einsum("qi,pik->pqk", bary, P1)
            Y = np.einsum("qi,pik->pqk", bary, P2)
            diff = X[:, :, None, :] - Y[:, None, :, :]
            K = ww * np.sum(diff * diff, axis=-1) ** expo
            kx = K.sum(axis=2)
            ky = K.sum(axis=1)
            Lxx = np.einsum("pa,ai,aj->pij", kx, bary, bary)
            Lyy = np.einsum("pb,bi,bj->pij", ky, bary, bary)
            Lxy = -np.einsum("pab,ai,bj->pij", K, bary, bary)
            for L, rows, cols in ((Lxx, T1, T1), (Lyy, T2, T2), (Lxy, T1, T2)):
                vals = scale[:, None, None] * L
                ri = np.broadcast_to(rows[:, :, None], vals.shape)
                ci = np.broadcast_to(cols[:, None, :], vals.shape)
                np.add.at(out, (ri.ravel(), ci.ravel()), vals.ravel())
                if L is Lxy:
                    np.add.at(out, (ci.ravel(), ri.ravel()), vals.ravel())
    return out


def _mode_angular_numpy(n, delta, alpha, plain, phi_nodes, phi_wts):
    d = delta[:, None]
    base = d * d + 4.0 * (1.0 - d) * np.sin(0.5 * phi_nodes) ** 2
    wgt = 0.5 if plain else np.sin(0.5 * n * phi_nodes) ** 2
    return np.sum(phi_wts * 2.0 * wgt * base ** (-alpha), axis=1) / np.pi


if not HAVE_NUMBA:
    gagliardo_pairs = _gagliardo_pairs_numpy  # noqa: F811
    mode_angular = _mode_angular_numpy  # noqa: F811
