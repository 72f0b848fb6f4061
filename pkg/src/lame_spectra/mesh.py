"""Triangular meshes of the reference geometries, boundary tagging and refinement.

Curved boundaries are replaced by inscribed polygons; the polygon is the exact
computational domain (areas, normals and boundary integrals all refer to it).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .errors import MeshError

DIRICHLET_S = 0
ROBIN = 1
TAG_NAMES = {DIRICHLET_S: "DIRICHLET_S", ROBIN: "ROBIN"}
TAG_CODES = {v: k for k, v in TAG_NAMES.items()}


@dataclass(frozen=True)
class BoundaryPartition:
    s_edges: np.ndarray
    robin_edges: np.ndarray
    y_vertices: np.ndarray


@dataclass(frozen=True, eq=False)
class Mesh:
    """Positively oriented triangulation with tagged, counter-clockwise boundary edges.

    ``boundary_edges[e] = (i, j)`` is traversed with the domain on the left, so the
    outward unit normal is ``(dy, -dx) / length``.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for name in ("vertices", "triangles", "boundary_edges", "boundary_tags"):
            getattr(self, name).setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def area(self) -> float:
        return float(self.signed_areas().sum())

    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted vertex pairs."""
        if "edges" not in self._cache:
            t = self.triangles
            e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
            self._cache["edges"] = np.unique(np.sort(e, axis=1), axis=0)
        return self._cache["edges"]

    @property
    def h_max(self) -> float:
        e = self.edges()
        return float(np.max(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)))

    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.boundary_edges[:, 1]] - self.vertices[self.boundary_edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def edge_normals(self) -> np.ndarray:
        d = self.vertices[self.boundary_edges[:, 1]] - self.vertices[self.boundary_edges[:, 0]]
        return np.stack([d[:, 1], -d[:, 0]], axis=1) / np.hypot(d[:, 0], d[:, 1])[:, None]

    def edge_midpoints(self) -> np.ndarray:
        return 0.5 * (self.vertices[self.boundary_edges[:, 0]] + self.vertices[self.boundary_edges[:, 1]])

    def edge_owner(self) -> np.ndarray:
        """Index of the triangle that owns each boundary edge."""
        if "owner" not in self._cache:
            lookup = {}
            for ti, (a, b, c) in enumerate(self.triangles.tolist()):
                lookup[(a, b)] = ti
                lookup[(b, c)] = ti
                lookup[(c, a)] = ti
            self._cache["owner"] = np.array(
                [lookup[(i, j)] for i, j in self.boundary_edges.tolist()], dtype=np.int64
            )
        return self._cache["owner"]

    @property
    def partition(self) -> BoundaryPartition:
        return _partition_from_tags(self.boundary_edges, self.boundary_tags)

    def with_tags(self, tags: np.ndarray) -> "Mesh":
        tags = np.asarray(tags, dtype=np.int64)
        if tags.shape != self.boundary_tags.shape:
            raise MeshError("tag array does not match boundary edge count")
        return Mesh(self.vertices, self.triangles, self.boundary_edges, tags.copy())

    def with_partition(self, partition: BoundaryPartition) -> "Mesh":
        tags = np.full(len(self.boundary_edges), ROBIN, dtype=np.int64)
        tags[partition.s_edges] = DIRICHLET_S
        return self.with_tags(tags)

    def check(self) -> None:
        """Raise MeshError unless the structural invariants hold."""
        if np.any(self.signed_areas() <= 0):
            raise MeshError("triangle with non-positive signed area")
        found = _boundary_edges(self.triangles)
        if {tuple(e) for e in found.tolist()} != {tuple(e) for e in self.boundary_edges.tolist()}:
            raise MeshError("boundary edge list does not match the triangulation")
        out_deg = np.bincount(self.boundary_edges[:, 0], minlength=self.n_vertices)
        in_deg = np.bincount(self.boundary_edges[:, 1], minlength=self.n_vertices)
        if np.any(out_deg != in_deg):
            raise MeshError("boundary edges do not form closed loops")
        if not np.all(np.isin(self.boundary_tags, list(TAG_NAMES))):
            raise MeshError("unknown boundary tag")

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges()) + self.n_triangles


def _partition_from_tags(edges: np.ndarray, tags: np.ndarray) -> BoundaryPartition:
    s = np.flatnonzero(tags == DIRICHLET_S)
    r = np.flatnonzero(tags == ROBIN)
    y = np.intersect1d(np.unique(edges[s]), np.unique(edges[r])) if len(s) and len(r) else np.empty(0, np.int64)
    return BoundaryPartition(s.astype(np.int64), r.astype(np.int64), y.astype(np.int64))


def _boundary_edges(triangles: np.ndarray) -> np.ndarray:
    t = triangles
    directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    key = np.sort(directed, axis=1)
    _, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    b = directed[counts[inverse.ravel()] == 1]
    return b[np.lexsort((b[:, 1], b[:, 0]))]


def _assemble(vertices, triangles, s_predicate=None) -> Mesh:
    vertices = np.ascontiguousarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    neg = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0
    triangles[neg] = triangles[neg][:, [0, 2, 1]]
    edges = _boundary_edges(triangles)
    tags = np.full(len(edges), ROBIN, dtype=np.int64)
    if s_predicate is not None:
        mid = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])
        tags[np.asarray(s_predicate(mid), dtype=bool)] = DIRICHLET_S
    mesh = Mesh(vertices, np.ascontiguousarray(triangles), edges, tags)
    mesh.check()
    return mesh


def build_unit_square_mesh(n: int) -> Mesh:
    """Structured mesh of [0,1]^2: 2n^2 triangles, every square cut along its (0,0)-(1,1) diagonal."""
    if n < 1:
        raise MeshError("need n >= 1 subdivisions")
    x = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(x, x, indexing="xy")
    verts = np.stack([X.ravel(), Y.ravel()], axis=1)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    v00 = (j * (n + 1) + i).ravel()
    v10, v01 = v00 + 1, v00 + n + 1
    v11 = v01 + 1
    tris = np.concatenate([np.stack([v00, v10, v11], 1), np.stack([v00, v11, v01], 1)])
    return _assemble(verts, tris)


def _zip_rings(inner: list[int], inner_ang, outer: list[int], outer_ang) -> list[tuple[int, int, int]]:
    # inner/outer are open chains with non-decreasing angles covering the same angular range
    tris = []
    i = j = 0
    na, nb = len(inner) - 1, len(outer) - 1
    while i < na or j < nb:
        if j < nb and (i == na or outer_ang[j + 1] <= inner_ang[i + 1]):
            tris.append((inner[i], outer[j], outer[j + 1]))
            j += 1
        else:
            tris.append((inner[i], outer[j], inner[i + 1]))
            i += 1
    return tris


def build_disc_mesh(n_boundary: int, radius: float = 1.0) -> Mesh:
    """Ring-structured quasi-uniform mesh of the regular n_boundary-gon inscribed in the circle."""
    if n_boundary < 4:
        raise MeshError("need n_boundary >= 4")
    if radius <= 0:
        raise MeshError("radius must be positive")
    n_rings = max(1, round(n_boundary / (2 * math.pi)))
    verts = [(0.0, 0.0)]
    rings = []
    for k in range(1, n_rings + 1):
        nk = n_boundary if k == n_rings else max(6, round(n_boundary * k / n_rings))
        shift = 0.0 if k == n_rings else 0.5 * (k % 2) / nk
        ang = 2 * math.pi * (np.arange(nk) / nk + shift)
        r = radius * k / n_rings
        start = len(verts)
        verts.extend(zip((r * np.cos(ang)).tolist(), (r * np.sin(ang)).tolist()))
        rings.append((list(range(start, start + nk)), ang))
    tris = []
    first, _ = rings[0]
    m = len(first)
    tris.extend((0, first[q], first[(q + 1) % m]) for q in range(m))
    for (ia, aa), (ib, ab) in zip(rings[:-1], rings[1:]):
        tris.extend(_zip_rings(ia + ia[:1], np.append(aa, aa[0] + 2 * math.pi),
                               ib + ib[:1], np.append(ab, ab[0] + 2 * math.pi)))
    return _assemble(np.array(verts), np.array(tris))


def build_half_disc_mesh(n_boundary: int, radius: float = 1.0) -> Mesh:
    """Mesh of the upper half of the inscribed polygon; the diameter is tagged DIRICHLET_S.

    ``n_boundary`` counts arc segments; the diameter gets a comparable spacing.
    """
    if n_boundary < 4:
        raise MeshError("need n_boundary >= 4")
    if radius <= 0:
        raise MeshError("radius must be positive")
    n_rings = max(1, round(n_boundary / math.pi))
    verts = [(0.0, 0.0)]
    rings = []
    for k in range(1, n_rings + 1):
        nk = n_boundary if k == n_rings else max(2, round(n_boundary * k / n_rings))
        ang = math.pi * np.arange(nk + 1) / nk
        r = radius * k / n_rings
        start = len(verts)
        xy = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)
        xy[0, 1] = xy[-1, 1] = 0.0
        verts.extend(map(tuple, xy.tolist()))
        rings.append((list(range(start, start + nk + 1)), ang))
    tris = []
    first, _ = rings[0]
    tris.extend((0, first[q], first[q + 1]) for q in range(len(first) - 1))
    for (ia, aa), (ib, ab) in zip(rings[:-1], rings[1:]):
        tris.extend(_zip_rings(ia, aa, ib, ab))
    tol = 1e-12 * radius
    return _assemble(np.array(verts), np.array(tris), s_predicate=lambda mid: np.abs(mid[:, 1]) <= tol)


def tag_boundary(mesh: Mesh, rule: Callable[[np.ndarray], np.ndarray]) -> BoundaryPartition:
    """Partition boundary edges: ``rule(midpoints)`` True marks an edge as part of S."""
    mid = mesh.edge_midpoints()
    raw = np.asarray(rule(mid))
    if raw.dtype != bool:
        raise MeshError("boundary rule must return booleans")
    flags = np.broadcast_to(raw, (len(mid),))
    tags = np.where(flags, DIRICHLET_S, ROBIN)
    return _partition_from_tags(mesh.boundary_edges, tags)


def refine(mesh: Mesh) -> Mesh:
    """Uniform red refinement; boundary sub-edges inherit their parent's tag."""
    edges = mesh.edges()
    nv = mesh.n_vertices
    mids = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    index = {(a, b): nv + k for k, (a, b) in enumerate(edges.tolist())}

    def mid(a, b):
        return index[(a, b) if a < b else (b, a)]

    tris = []
    for a, b, c in mesh.triangles.tolist():
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        tris.extend([(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)])
    bedges, btags = [], []
    for (i, j), tag in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags.tolist()):
        m = mid(i, j)
        bedges.extend([(i, m), (m, j)])
        btags.extend([tag, tag])
    bedges = np.array(bedges, dtype=np.int64)
    order = np.lexsort((bedges[:, 1], bedges[:, 0]))
    out = Mesh(np.concatenate([mesh.vertices, mids]), np.array(tris, dtype=np.int64),
               bedges[order], np.array(btags, dtype=np.int64)[order])
    out.check()
    return out


def write_mesh(mesh: Mesh, path, header: Iterable[str] = ()) -> None:
    lines = [f"# {h}" for h in header]
    lines += [f"v {x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines += [f"t {i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    lines += [f"b {i} {j} {TAG_NAMES[t]}" for (i, j), t in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    verts, tris, bedges, btags = [], [], [], []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if parts[0] == "v":
                verts.append((float(parts[1]), float(parts[2])))
            elif parts[0] == "t":
                tris.append(tuple(int(p) for p in parts[1:4]))
            elif parts[0] == "b":
                bedges.append((int(parts[1]), int(parts[2])))
                btags.append(TAG_CODES[parts[3]])
            else:
                raise MeshError(f"line {lineno}: unknown record {parts[0]!r}")
        except (IndexError, ValueError, KeyError) as exc:
            raise MeshError(f"line {lineno}: malformed record") from exc
    mesh = Mesh(np.array(verts, dtype=float).reshape(-1, 2), np.array(tris, dtype=np.int64).reshape(-1, 3),
                np.array(bedges, dtype=np.int64).reshape(-1, 2), np.array(btags, dtype=np.int64))
    mesh.check()
    return mesh
