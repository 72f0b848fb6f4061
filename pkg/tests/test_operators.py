import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from lame_spectra.errors import AdmissibilityError, MeshError
from lame_spectra.mesh import build_unit_square_mesh
from lame_spectra.operators import (
    conormal,
    conormal_from_gradient,
    edge_frame,
    factor_matrix,
    stress_traction,
    symbol_injectivity,
    tangential_tau0,
    tau0_from_gradient,
    traction_from_gradient,
)
from lame_spectra.problem import Kind, LameCoefficients

finite = st.floats(min_value=-3, max_value=3, allow_nan=False)
grads2 = arrays(np.float64, (2, 2), elements=finite)
grads3 = arrays(np.float64, (3, 3), elements=finite)
mus = st.floats(min_value=0.1, max_value=5)
lams = st.floats(min_value=0.0, max_value=5)


def _energy(kind, G, mu, lam):
    """Pointwise |D u|^2 written out by hand for a constant gradient G[i, j] = d_j u_i."""
    tr = np.trace(G)
    if kind is Kind.D1:
        eps = 0.5 * (G + G.T)
        return 2 * mu * np.sum(eps**2) + lam * tr**2
    if kind is Kind.D2:
        return mu * np.sum(G**2) + (mu + lam) * tr**2
    m = len(G)
    rot = sum((G[i, j] - G[j, i]) ** 2 for i in range(m) for j in range(i + 1, m))
    return mu * rot + (2 * mu + lam) * tr**2


@settings(max_examples=60, deadline=None)
@given(grads2, mus, lams, st.sampled_from(list(Kind)))
def test_factor_gram_matches_energy(G, mu, lam, kind):
    F = factor_matrix(kind, mu, lam)[0]
    v = F @ G.ravel()
    assert v @ v == pytest.approx(_energy(kind, G, mu, lam), rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(grads3, mus, lams, st.sampled_from(list(Kind)))
def test_factor_gram_matches_energy_3d(G, mu, lam, kind):
    F = factor_matrix(kind, mu, lam, m=3)[0]
    v = F @ G.ravel()
    assert v @ v == pytest.approx(_energy(kind, G, mu, lam), rel=1e-12, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(grads2, mus, lams, st.floats(min_value=0, max_value=2 * np.pi))
def test_conormals_differ_by_tau0(G, mu, lam, theta):
    nu = np.array([np.cos(theta), np.sin(theta)])
    sigma = traction_from_gradient(G, nu, mu, lam)
    tau = tau0_from_gradient(G, nu)
    assert np.allclose(conormal_from_gradient(Kind.D1, G, nu, mu, lam), sigma, atol=1e-12)
    assert np.allclose(conormal_from_gradient(Kind.D2, G, nu, mu, lam) + mu * tau, sigma, atol=1e-12)
    assert np.allclose(conormal_from_gradient(Kind.D3, G, nu, mu, lam) + 2 * mu * tau, sigma, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(grads2, st.floats(min_value=0, max_value=2 * np.pi))
def test_tau0_is_rotated_tangential_derivative(G, theta):
    nu = np.array([np.cos(theta), np.sin(theta)])
    t = edge_frame(nu).tangents[0]
    assert abs(t @ nu) < 1e-15
    J = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert np.allclose(tau0_from_gradient(G, nu), J @ (G @ t), atol=1e-12)


def test_shear_traction_example():
    # u = (x2, 0) on the top edge of the unit square, nu = (0, 1)
    m = build_unit_square_mesh(2)
    u = np.stack([m.vertices[:, 1], np.zeros(m.n_vertices)], axis=1)
    top = int(np.flatnonzero(np.isclose(m.edge_normals()[:, 1], 1.0))[0])
    coeffs = LameCoefficients(1.5, 0.7)
    assert np.allclose(stress_traction(coeffs, u, m, top), [1.5, 0.0])
    assert np.allclose(conormal(Kind.D1, coeffs, u, m, top), [1.5, 0.0])
    # u is constant along the top edge, so d_tau0 u = 0 and all conormals agree
    assert np.allclose(tangential_tau0(u, m, top), [0.0, 0.0])
    assert np.allclose(conormal(Kind.D3, coeffs, u, m, top), [1.5, 0.0])
    # on the left edge (nu = (-1, 0)) the tangential derivative does not vanish
    left = int(np.flatnonzero(np.isclose(m.edge_normals()[:, 0], -1.0))[0])
    tau = tangential_tau0(u, m, left)
    assert np.allclose(tau, [0.0, -1.0])
    sigma = stress_traction(coeffs, u, m, left)
    assert np.allclose(conormal(Kind.D2, coeffs, u, m, left), sigma - 1.5 * tau)


def test_interior_edge_rejected():
    m = build_unit_square_mesh(2)
    with pytest.raises(MeshError):
        conormal(Kind.D1, LameCoefficients(), np.zeros((m.n_vertices, 2)), m, len(m.boundary_edges))


@pytest.mark.parametrize("kind,lam", [(Kind.D1, 0.0), (Kind.D2, -1.0), (Kind.D3, -1.5)])
def test_symbol_injective_at_admissible_limits(kind, lam):
    assert symbol_injectivity(kind, 1.0, lam)


def test_symbol_loses_injectivity_when_divergence_vanishes():
    # 2 mu + lambda = 0: u parallel to xi is annihilated by both rows
    assert not symbol_injectivity(Kind.D3, 1.0, -2.0)


def test_nonpositive_mu_rejected():
    with pytest.raises(AdmissibilityError):
        symbol_injectivity(Kind.D2, 0.0, 1.0)
