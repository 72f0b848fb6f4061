import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linear_sum_assignment

import oracles
from lame_spectra.config import load_config
from lame_spectra.assembly import assemble_gram_plus
from lame_spectra.errors import ClusterAmbiguous, NoConvergence
from lame_spectra.spectral import (
    Spectrum,
    cluster_eigenvalues,
    eigensolve,
    isometry_check,
    reduce_to_standard,
    relative_form_norm,
    root_chains,
    sector_check,
    write_spectrum_csv,
)


def _match(a, b):
    D = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(D)
    return float(D[r, c].max())


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 25), st.integers(0, 2**31 - 1), st.booleans())
def test_eigenvalues_match_lapack(n, seed, complex_):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    if complex_:
        A = A + 1j * rng.standard_normal((n, n))
    spec = eigensolve(A)
    assert spec.converged
    assert _match(spec.eigenvalues, np.linalg.eigvals(A)) < 1e-9 * max(1.0, np.linalg.norm(A, 2))


def test_residuals_and_normalisation():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((30, 30))
    spec = eigensolve(A)
    assert np.allclose(np.linalg.norm(spec.eigenvectors, axis=0), 1.0)
    assert spec.residuals.max() < 1e-12


def test_ordering_by_modulus_then_real_then_imag():
    spec = eigensolve(np.diag([3.0, -1.0, 1.0, 2.0]))
    assert spec.eigenvalues.real.tolist() == [-1.0, 1.0, 2.0, 3.0]


def test_companion_of_x2_plus_1():
    spec = eigensolve(np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert np.allclose(sorted(spec.eigenvalues.imag), [-1.0, 1.0])


def test_empty_matrix():
    spec = eigensolve(np.zeros((0, 0)))
    assert spec.N == 0 and spec.converged
    assert root_chains(np.zeros((0, 0)), spec).total_algebraic == 0


def test_nonfinite_rejected():
    with pytest.raises(NoConvergence):
        eigensolve(np.array([[np.nan]]))


def test_sweep_cap():
    A = np.random.default_rng(0).standard_normal((12, 12))
    with pytest.raises(NoConvergence):
        eigensolve(A, max_iter=1)


def test_charpoly_oracle_small_integer_matrices():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(1, 7))
        A = rng.integers(-5, 6, size=(n, n))
        assert _match(eigensolve(A.astype(float)).eigenvalues, oracles.charpoly_roots(A)) < 1e-8


def _jordan(blocks, rng):
    n = sum(size for _, size in blocks)
    J = np.zeros((n, n))
    k = 0
    for lam, size in blocks:
        for i in range(size):
            J[k + i, k + i] = lam
            if i + 1 < size:
                J[k + i, k + i + 1] = 1.0
        k += size
    L = np.tril(rng.integers(-1, 2, (n, n)), -1) + np.eye(n)
    U = np.triu(rng.integers(-1, 2, (n, n)), 1) + np.eye(n)
    S = L @ U
    return S @ J @ np.linalg.inv(S)


def test_jordan_structure():
    rng = np.random.default_rng(0)
    C = _jordan([(3, 2), (3, 1), (5, 2), (7, 1)], rng)
    spec = eigensolve(C)
    rep = root_chains(C, spec, cluster_tol=0.1)
    got = {round(c.center.real): (c.geometric, c.algebraic, c.chain_length, c.block_sizes) for c in rep.clusters}
    assert got == {3: (2, 3, 2, (2, 1)), 5: (1, 2, 2, (2,)), 7: (1, 1, 1, (1,))}
    assert rep.total_algebraic == 6


def test_semisimple_repeated_eigenvalue():
    C = np.diag([1.0, 1.0, 2.0])
    rep = root_chains(C, eigensolve(C))
    assert rep.multiplicities() == {1.0: (2, 2, 1), 2.0: (1, 1, 1)}


def test_ambiguous_cluster_reported():
    C = np.diag([1.0, 1.001])
    with pytest.raises(ClusterAmbiguous):
        root_chains(C, eigensolve(C), cluster_tol=0.01)


def test_single_linkage_chains_clusters():
    lam = np.array([0.0, 0.4, 0.8, 5.0])
    assert cluster_eigenvalues(lam, 0.5).tolist() == [0, 0, 0, 1]


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 15), st.integers(0, 2**31 - 1))
def test_relative_norm_against_bruteforce(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n))
    B = X @ X.T + n * np.eye(n)
    P = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    assert relative_form_norm(P, B) == pytest.approx(oracles.relative_norm_bruteforce(P, B), rel=1e-9)


def test_reduction_preserves_pencil_spectrum():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((8, 8))
    B = X @ X.T + 8 * np.eye(8)
    A = rng.standard_normal((8, 8))
    import scipy.linalg

    ref = scipy.linalg.eigvals(A, B)
    assert _match(eigensolve(reduce_to_standard(A, B)).eigenvalues, ref) < 1e-10


@pytest.mark.parametrize("M", [0.1, 0.5, 0.95])
def test_sector_holds_for_random_perturbation(M):
    rng = np.random.default_rng(4)
    X = rng.standard_normal((20, 20))
    B = X @ X.T + 20 * np.eye(20)
    P = rng.standard_normal((20, 20)) + 1j * rng.standard_normal((20, 20))
    P *= M / relative_form_norm(P, B)
    rep = sector_check(B + P, B)
    assert rep.ok
    assert rep.M == pytest.approx(M)
    assert rep.max_disc <= M + 1e-10
    assert rep.bound == pytest.approx(math.asin(M))
    assert rep.fredholm_margin == pytest.approx(1 - M)
    assert not rep.threshold_breach


def test_sector_flags_breach():
    B = np.eye(3)
    rep = sector_check(B + 1.5 * np.eye(3), B)
    assert rep.threshold_breach
    assert rep.ok  # eigenvalue 2.5 has |lambda - 1| = 1.5 <= M and angle 0


def test_isometry_on_problem_gram():
    B = assemble_gram_plus(load_config("ex_d1")).toarray()
    info = isometry_check(B)
    assert info["norm"] == pytest.approx(1.0, abs=1e-10)
    assert info["inverse_norm"] == pytest.approx(1.0, abs=1e-10)
    assert info["sampled_max_deviation"] < 1e-10


def test_spectrum_csv(tmp_path):
    C = np.diag([2.0, 2.0, 1.0])
    spec = eigensolve(C)
    path = tmp_path / "s.csv"
    write_spectrum_csv(path, spec, root_chains(C, spec), "abc")
    lines = path.read_text().splitlines()
    assert lines[0] == "# config_sha256 abc"
    assert lines[1] == "re,im,residual,cluster_id,alg_mult,chain_len"
    assert lines[2].startswith("1.0,0.0,")
    assert lines[3].endswith(",1,2,1") and lines[4].endswith(",1,2,1")


def test_empty_spectrum_csv(tmp_path):
    path = tmp_path / "e.csv"
    write_spectrum_csv(path, Spectrum(np.zeros(0, complex), np.zeros((0, 0)), np.zeros(0), True), None, "h")
    assert path.read_text().splitlines() == ["# config_sha256 h", "re,im,residual,cluster_id,alg_mult,chain_len"]


def test_identity_up_to_rounding_is_one_semisimple_cluster():
    rng = np.random.default_rng(5)
    C = np.eye(40) + 1e-16 * rng.standard_normal((40, 40))
    rep = root_chains(C, eigensolve(C))
    assert len(rep.clusters) == 1
    assert (rep.clusters[0].geometric, rep.clusters[0].algebraic, rep.clusters[0].chain_length) == (40, 40, 1)
