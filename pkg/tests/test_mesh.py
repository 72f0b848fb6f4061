import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lame_spectra.errors import MeshError
from lame_spectra.mesh import (
    DIRICHLET_S,
    Mesh,
    build_disc_mesh,
    build_half_disc_mesh,
    build_unit_square_mesh,
    read_mesh,
    refine,
    tag_boundary,
    write_mesh,
)


def _regular_polygon_area(n, r=1.0):
    return 0.5 * n * r * r * math.sin(2 * math.pi / n)


def test_square_counts_and_area():
    m = build_unit_square_mesh(4)
    assert m.n_vertices == 25
    assert m.n_triangles == 32
    assert len(m.boundary_edges) == 16
    assert m.area == pytest.approx(1.0, abs=1e-14)
    assert np.all(m.signed_areas() > 0)


def test_disc_area_is_inscribed_polygon():
    m = build_disc_mesh(32)
    assert m.area == pytest.approx(_regular_polygon_area(32), rel=1e-12)
    assert np.all(m.signed_areas() > 0)


def test_half_disc_boundary_closes():
    m = build_half_disc_mesh(16)
    e = m.boundary_edges
    # each vertex appears once as a start and once as an end of the boundary loop
    assert sorted(e[:, 0].tolist()) == sorted(e[:, 1].tolist())
    assert np.all(m.signed_areas() > 0)


@pytest.mark.parametrize("mesh", [build_unit_square_mesh(3), build_disc_mesh(12), build_half_disc_mesh(8)])
def test_outward_normals(mesh):
    # sum over boundary of (x . nu) |e| = 2 area (divergence theorem for the position field)
    mid = mesh.edge_midpoints()
    flux = np.sum(np.einsum("ek,ek->e", mid, mesh.edge_normals()) * mesh.edge_lengths())
    assert flux == pytest.approx(2 * mesh.area, rel=1e-12)
    assert np.allclose(np.linalg.norm(mesh.edge_normals(), axis=1), 1.0)


def test_tagging_and_y_points():
    m = build_unit_square_mesh(4)
    part = tag_boundary(m, lambda p: p[:, 1] < 1e-12)
    assert len(part.s_edges) == 4
    assert len(part.robin_edges) == 12
    ys = sorted(map(tuple, np.round(m.vertices[part.y_vertices], 12).tolist()))
    assert ys == [(0.0, 0.0), (1.0, 0.0)]


def test_tagging_rule_must_be_boolean():
    m = build_unit_square_mesh(2)
    with pytest.raises(MeshError):
        tag_boundary(m, lambda p: p[:, 0])


def test_refine_preserves_area_and_tags():
    m = build_unit_square_mesh(2)
    m = m.with_partition(tag_boundary(m, lambda p: p[:, 0] < 1e-12))
    r = refine(m)
    assert r.n_triangles == 4 * m.n_triangles
    assert r.area == pytest.approx(m.area, rel=1e-14)
    s_len = lambda mm: mm.edge_lengths()[mm.boundary_tags == DIRICHLET_S].sum()
    assert s_len(r) == pytest.approx(s_len(m))
    assert r.h_max == pytest.approx(m.h_max / 2)


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=2))
def test_refinement_keeps_area_and_orientation(n, levels):
    m = build_unit_square_mesh(n)
    for _ in range(levels):
        m = refine(m)
    assert m.area == pytest.approx(1.0, abs=1e-12)
    assert np.all(m.signed_areas() > 0)
    # Euler characteristic of a disc-like triangulation
    n_edges = (3 * m.n_triangles + len(m.boundary_edges)) // 2
    assert m.n_vertices - n_edges + m.n_triangles == 1


def test_roundtrip(tmp_path):
    m = build_half_disc_mesh(8)
    path = tmp_path / "m.txt"
    write_mesh(m, path, header=["config_sha256 abc"])
    back = read_mesh(path)
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.triangles, m.triangles)
    assert np.array_equal(back.boundary_tags, m.boundary_tags)
    assert path.read_text().startswith("# config_sha256 abc")


def test_read_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("v 0 0\nq 1 2 3\n")
    with pytest.raises(MeshError):
        read_mesh(path)


def test_clockwise_triangle_rejected():
    with pytest.raises(MeshError):
        Mesh(np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]), np.array([[0, 1, 2]]),
             np.array([[0, 2], [2, 1], [1, 0]]), np.ones(3, dtype=np.int64)).check()
