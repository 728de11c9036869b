"""Structured simplex meshes: rectangles, stepped polygons, and extruded depth-graph cells/plates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import shapely
from shapely.geometry import Polygon

from ..errors import BudgetError, InvalidGeometryError
from ..geometry import CellGeometry, PlateGeometry

DEFAULT_NODE_BUDGET = 2_000_000
_SIDES = ("bottom", "right", "top", "left")


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _boundary_facets(cells, local_faces):
    """Facets (sorted vertex tuples) that belong to exactly one cell."""
    facets = np.concatenate([cells[:, f] for f in local_faces])
    facets = np.sort(facets, axis=1)
    uniq, counts = np.unique(facets, axis=0, return_counts=True)
    return uniq[counts == 1]


def _simplex_measure(points):
    """Signed measure of simplices given as (m, d+1, d) coordinates."""
    edges = points[:, 1:, :] - points[:, :1, :]
    d = points.shape[2]
    return np.linalg.det(edges) / math.factorial(d)


@dataclass(frozen=True)
class TriMesh:
    """Triangle mesh with tagged boundary edges."""

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: tuple
    grid_shape: tuple | None = None

    def __post_init__(self):
        v = _frozen(self.vertices, float)
        t = _frozen(self.triangles, np.int64)
        e = _frozen(np.sort(np.asarray(self.boundary_edges, dtype=np.int64).reshape(-1, 2), axis=1), np.int64)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "boundary_edges", e)
        object.__setattr__(self, "edge_tags", tuple(self.edge_tags))
        if v.ndim != 2 or v.shape[1] != 2:
            raise InvalidGeometryError("TriMesh vertices must be an (n, 2) array")
        if t.ndim != 2 or t.shape[1] != 3 or len(t) == 0:
            raise InvalidGeometryError("TriMesh needs a non-empty (m, 3) triangle array")
        if t.min() < 0 or t.max() >= len(v):
            raise InvalidGeometryError("triangle vertex index out of range")
        if np.any(self.areas() <= 0):
            raise InvalidGeometryError("triangles must be positively oriented with positive area")
        if len(self.edge_tags) != len(e):
            raise InvalidGeometryError("one tag per boundary edge is required")
        expected = _boundary_facets(t, ([0, 1], [1, 2], [2, 0]))
        if len(expected) != len(e) or not np.array_equal(np.unique(e, axis=0), expected):
            raise InvalidGeometryError("every boundary edge must carry exactly one tag")

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def cells(self):
        return self.triangles

    @property
    def facets(self):
        return self.boundary_edges

    @property
    def facet_tags(self):
        return self.edge_tags

    def areas(self):
        return _simplex_measure(self.vertices[self.triangles])

    def area(self):
        return float(self.areas().sum())

    @property
    def edge_tag_map(self):
        return {tuple(int(i) for i in e): tag for e, tag in zip(self.boundary_edges, self.edge_tags)}

    def edges_with_tag(self, tag):
        mask = np.array([t == tag for t in self.edge_tags], dtype=bool)
        return self.boundary_edges[mask] if len(mask) else self.boundary_edges[:0]

    def vertices_with_tag(self, *tags):
        sel = [self.edges_with_tag(t) for t in tags]
        return np.unique(np.concatenate(sel).ravel()) if sel else np.zeros(0, dtype=np.int64)

    def tags(self):
        return sorted(set(self.edge_tags))


@dataclass(frozen=True)
class TetMesh:
    """Tetrahedral mesh with tagged boundary faces and optional periodic vertex pairs.

    ``periodic_pairs`` holds ``(slave, master)`` rows; ``period`` is ``(a1, a2)``.
    Meshes built by extrusion also record ``grid_shape = (n1 + 1, n2 + 1)`` and
    ``layers``; vertex ``layer * ncol + col`` then lies in column ``col``.
    """

    vertices: np.ndarray
    tets: np.ndarray
    boundary_faces: np.ndarray
    face_tags: tuple
    periodic_pairs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    period: tuple | None = None
    grid_shape: tuple | None = None
    layers: int | None = None

    def __post_init__(self):
        v = _frozen(self.vertices, float)
        t = _frozen(self.tets, np.int64)
        f = _frozen(np.asarray(self.boundary_faces, dtype=np.int64).reshape(-1, 3), np.int64)
        p = _frozen(np.asarray(self.periodic_pairs, dtype=np.int64).reshape(-1, 2), np.int64)
        for name, val in (("vertices", v), ("tets", t), ("boundary_faces", f), ("periodic_pairs", p)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "face_tags", tuple(self.face_tags))
        if v.ndim != 2 or v.shape[1] != 3:
            raise InvalidGeometryError("TetMesh vertices must be an (n, 3) array")
        if t.ndim != 2 or t.shape[1] != 4 or len(t) == 0:
            raise InvalidGeometryError("TetMesh needs a non-empty (m, 4) tet array")
        if t.min() < 0 or t.max() >= len(v):
            raise InvalidGeometryError("tet vertex index out of range")
        if np.any(self.volumes() <= 0):
            raise InvalidGeometryError("tets must be positively oriented with positive volume")
        if len(self.face_tags) != len(f):
            raise InvalidGeometryError("one tag per boundary face is required")
        expected = _boundary_facets(t, ([0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]))
        if len(expected) != len(f) or not np.array_equal(np.unique(np.sort(f, axis=1), axis=0), expected):
            raise InvalidGeometryError("boundary tags must partition the boundary faces")
        if len(p):
            if self.period is None:
                raise InvalidGeometryError("periodic pairs need a period vector")
            check_periodic_pairs(v, p, self.period)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def cells(self):
        return self.tets

    @property
    def facets(self):
        return self.boundary_faces

    @property
    def facet_tags(self):
        return self.face_tags

    def volumes(self):
        return _simplex_measure(self.vertices[self.tets])

    def volume(self):
        return float(self.volumes().sum())

    def faces_with_tag(self, tag):
        mask = np.array([t == tag for t in self.face_tags], dtype=bool)
        return self.boundary_faces[mask]

    def vertices_with_tag(self, *tags):
        sel = [self.faces_with_tag(t) for t in tags]
        return np.unique(np.concatenate(sel).ravel()) if sel else np.zeros(0, dtype=np.int64)

    def tags(self):
        return sorted(set(self.face_tags))

    @property
    def n_columns(self):
        return self.grid_shape[0] * self.grid_shape[1]


def check_periodic_pairs(vertices, pairs, period, tol=1e-12):
    """Raise unless every slave equals its master up to a lattice translation."""
    diff = vertices[pairs[:, 0]] - vertices[pairs[:, 1]]
    a = np.asarray(period, dtype=float)
    k = np.round(diff[:, :2] / a)
    bad = (np.abs(diff[:, :2] - k * a).max(axis=1) > tol) | (np.abs(diff[:, 2]) > tol)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise InvalidGeometryError(
            f"periodic pair {tuple(pairs[i])} does not match up to a period translation")


def pair_periodic_vertices(vertices, period, lower, tol=1e-9):
    """Match vertices on the upper lateral faces to the lower ones by coordinates.

    ``lower = (eta1_min, eta2_min)``. Returns ``(slave, master)`` rows with masters
    resolved to the vertex of smallest translate. Raises if an opposite-face vertex
    has no partner, i.e. the opposite-face grids do not match.
    """
    v = np.asarray(vertices, dtype=float)
    a = np.asarray(period, dtype=float)
    lo = np.asarray(lower, dtype=float)
    key = v.copy()
    for d in range(2):
        on_hi = np.abs(v[:, d] - (lo[d] + a[d])) <= tol
        key[on_hi, d] -= a[d]
    q = np.round(key / tol).astype(np.int64)
    _, first, inverse = np.unique(q, axis=0, return_index=True, return_inverse=True)
    master = first[inverse.ravel()]
    pairs = np.column_stack([np.arange(len(v)), master])
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    for d in range(2):
        on_lo = np.abs(v[:, d] - lo[d]) <= tol
        on_hi = np.abs(v[:, d] - (lo[d] + a[d])) <= tol
        n_hi_paired = np.isin(np.flatnonzero(on_hi), pairs[:, 0]).sum()
        if on_lo.sum() != on_hi.sum() or n_hi_paired != on_hi.sum():
            raise InvalidGeometryError(
                f"opposite lateral faces in direction {d + 1} have mismatched vertex grids")
    return pairs


# ---------------------------------------------------------------- 2D meshes

def _grid_triangles(nx, ny):
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    v00 = (j * (nx + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    return np.stack([lower, upper], axis=1).reshape(-1, 3)


def _side_tags(tags):
    if tags is None:
        return dict.fromkeys(_SIDES, "boundary")
    if isinstance(tags, str):
        return dict.fromkeys(_SIDES, tags)
    unknown = set(tags) - set(_SIDES)
    if unknown:
        raise InvalidGeometryError(f"unknown rectangle side(s) {sorted(unknown)}; use {_SIDES}")
    return {s: tags.get(s, "boundary") for s in _SIDES}


def mesh_rectangle(width, height, nx, ny, tags=None, origin=(0.0, 0.0)):
    """Uniform ``nx x ny`` grid on a rectangle, each square split into two triangles.

    ``tags`` is a single label or a mapping from side (bottom/right/top/left) to label.
    Vertex ``j * (nx + 1) + i`` sits at ``origin + (i * width/nx, j * height/ny)``.
    """
    if not (width > 0 and height > 0):
        raise InvalidGeometryError(f"rectangle sides must be positive, got {width} x {height}")
    if int(nx) < 1 or int(ny) < 1 or nx != int(nx) or ny != int(ny):
        raise InvalidGeometryError(f"resolution must be positive integers, got nx={nx}, ny={ny}")
    nx, ny = int(nx), int(ny)
    side = _side_tags(tags)
    x = origin[0] + np.linspace(0.0, width, nx + 1)
    y = origin[1] + np.linspace(0.0, height, ny + 1)
    X, Y = np.meshgrid(x, y, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    tris = _grid_triangles(nx, ny)
    idx = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    edges, labels = [], []
    for name, line in (("bottom", idx[0, :]), ("top", idx[-1, :]), ("left", idx[:, 0]), ("right", idx[:, -1])):
        e = np.column_stack([line[:-1], line[1:]])
        edges.append(e)
        labels += [side[name]] * len(e)
    return TriMesh(vertices, tris, np.concatenate(edges), labels, grid_shape=(nx + 1, ny + 1))


@dataclass(frozen=True)
class StepPolygon:
    """Simple axis-aligned polygon; ``tags[i]`` labels the segment from vertex i to i+1."""

    vertices: tuple
    tags: tuple

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        object.__setattr__(self, "vertices", tuple(map(tuple, v.tolist())))
        object.__setattr__(self, "tags", tuple(self.tags))
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 4:
            raise InvalidGeometryError("a stepped polygon needs at least 4 (x, y) vertices")
        if len(self.tags) != len(v):
            raise InvalidGeometryError("one tag per polygon segment is required")
        seg = np.roll(v, -1, axis=0) - v
        if np.any((np.abs(seg[:, 0]) > 0) & (np.abs(seg[:, 1]) > 0)):
            raise InvalidGeometryError("polygon segments must be axis-aligned")
        if np.any(np.abs(seg).sum(axis=1) == 0):
            raise InvalidGeometryError("polygon has a zero-length segment")
        poly = Polygon(v)
        if not poly.exterior.is_simple or not poly.is_valid or poly.area <= 0:
            raise InvalidGeometryError("polygon is self-intersecting or degenerate")

    @property
    def array(self):
        return np.asarray(self.vertices, dtype=float)

    def area(self):
        """Shoelace formula."""
        v = self.array
        x, y = v[:, 0], v[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))

    def segments(self):
        v = self.array
        return v, np.roll(v, -1, axis=0)

    @classmethod
    def rectangle(cls, x0, y0, x1, y1, tags):
        """Counter-clockwise rectangle; ``tags`` maps bottom/right/top/left to labels."""
        side = _side_tags(tags)
        return cls([(x0, y0), (x1, y0), (x1, y1), (x0, y1)],
                   [side["bottom"], side["right"], side["top"], side["left"]])


def _subdivide(breaks, target_h):
    pts = [breaks[0]]
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        n = max(1, math.ceil((hi - lo) / target_h - 1e-9))
        pts.extend(np.linspace(lo, hi, n + 1)[1:])
    return np.asarray(pts)


def mesh_stepped_polygon(polygon, target_h):
    """Conforming triangulation of an axis-aligned polygon on a graded tensor grid.

    Grid lines pass through every polygon vertex coordinate, so the triangulation
    covers the polygon exactly. Boundary edges inherit the tag of their segment.
    """
    if not target_h > 0:
        raise InvalidGeometryError(f"target_h must be positive, got {target_h}")
    if not isinstance(polygon, StepPolygon):
        polygon = StepPolygon(*polygon)
    v = polygon.array
    xs = _subdivide(np.unique(v[:, 0]), target_h)
    ys = _subdivide(np.unique(v[:, 1]), target_h)
    nx, ny = len(xs) - 1, len(ys) - 1
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    grid_vertices = np.column_stack([X.ravel(), Y.ravel()])
    xc = 0.5 * (xs[:-1] + xs[1:])
    yc = 0.5 * (ys[:-1] + ys[1:])
    XC, YC = np.meshgrid(xc, yc, indexing="xy")
    inside = shapely.contains_xy(Polygon(v), XC.ravel(), YC.ravel())
    tris = _grid_triangles(nx, ny).reshape(-1, 2, 3)[inside].reshape(-1, 3)
    used, tris = np.unique(tris, return_inverse=True)
    tris = tris.reshape(-1, 3)
    vertices = grid_vertices[used]

    edges = _boundary_facets(tris, ([0, 1], [1, 2], [2, 0]))
    mid = vertices[edges].mean(axis=1)
    a, b = polygon.segments()
    tol = 1e-9 * max(1.0, np.abs(v).max())
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    on = np.all((mid[:, None, :] >= lo[None] - tol) & (mid[:, None, :] <= hi[None] + tol), axis=2)
    n_hits = on.sum(axis=1)
    if np.any(n_hits != 1):
        raise InvalidGeometryError("could not attribute every boundary edge to one polygon segment")
    labels = [polygon.tags[i] for i in on.argmax(axis=1)]
    return TriMesh(vertices, tris, edges, labels)


# ---------------------------------------------------------------- 3D extrusion

def _extrude(columns_xy, column_tris, depth, nz, grid_shape, lateral):
    """Extrude a column triangulation down to ``-depth`` with ``nz`` uniform layers.

    Prisms are split into three tets with the lowest-column-index diagonal rule,
    which keeps neighbouring prisms conforming. ``lateral`` is a list of
    ``(edges, tag)`` with the 2D boundary edges to extrude as tagged side faces.
    """
    nc = len(columns_xy)
    layers = np.arange(nz + 1)
    z = -np.outer(layers / nz, depth)  # (nz+1, nc)
    vertices = np.column_stack([
        np.tile(columns_xy, (nz + 1, 1)),
        z.ravel(),
    ])
    c = np.sort(column_tris, axis=1)
    c0, c1, c2 = c[:, 0], c[:, 1], c[:, 2]
    tets = []
    for l in range(nz):
        up, dn = l * nc, (l + 1) * nc
        tets.append(np.column_stack([c0 + up, c1 + up, c2 + up, c2 + dn]))
        tets.append(np.column_stack([c0 + up, c1 + up, c1 + dn, c2 + dn]))
        tets.append(np.column_stack([c0 + up, c0 + dn, c1 + dn, c2 + dn]))
    tets = np.concatenate(tets)
    vol = _simplex_measure(vertices[tets])
    neg = vol < 0
    tets[neg] = tets[neg][:, [0, 1, 3, 2]]

    faces, tags = [column_tris.copy(), column_tris + nz * nc], []
    tags += ["top"] * len(column_tris) + ["bottom"] * len(column_tris)
    for edges, tag in lateral:
        e = np.sort(edges, axis=1)
        p, q = e[:, 0], e[:, 1]
        for l in range(nz):
            up, dn = l * nc, (l + 1) * nc
            faces.append(np.column_stack([p + up, q + up, q + dn]))
            faces.append(np.column_stack([p + up, q + dn, p + dn]))
            tags += [tag] * (2 * len(e))
    return vertices, tets, np.concatenate(faces), tags


def _grid_boundary_edges(n1, n2):
    """Boundary edges of an (n1 x n2)-interval column grid, keyed by side."""
    idx = np.arange((n1 + 1) * (n2 + 1)).reshape(n2 + 1, n1 + 1)
    pairs = lambda line: np.column_stack([line[:-1], line[1:]])  # noqa: E731
    return {"bottom": pairs(idx[0, :]), "top": pairs(idx[-1, :]),
            "left": pairs(idx[:, 0]), "right": pairs(idx[:, -1])}


def _check_resolution(*counts):
    for n in counts:
        if n != int(n) or int(n) < 1:
            raise InvalidGeometryError(f"resolution counts must be positive integers, got {counts}")


def mesh_graph_cell(cell: CellGeometry, nx, ny, nz):
    """Tet mesh of the periodicity cell by vertical extrusion over an ``nx x ny`` grid on sigma.

    Top faces are tagged ``sigma+``, bottom faces ``sigma-``, lateral faces
    ``lateral``; vertices on the faces ``eta_i = a_i/2`` are paired with their
    translates on ``eta_i = -a_i/2``.
    """
    _check_resolution(nx, ny, nz)
    nx, ny, nz = int(nx), int(ny), int(nz)
    e1 = np.linspace(-cell.a1 / 2, cell.a1 / 2, nx + 1)
    e2 = np.linspace(-cell.a2 / 2, cell.a2 / 2, ny + 1)
    E1, E2 = np.meshgrid(e1, e2, indexing="xy")
    depth = cell.depth_at(E1, E2)
    depth[:, -1] = depth[:, 0]
    depth[-1, :] = depth[0, :]
    if depth.min() <= 0 or depth.max() > cell.H + 1e-12:
        raise InvalidGeometryError("depth profile violates 0 < h <= H on the mesh grid")
    cols = np.column_stack([E1.ravel(), E2.ravel()])
    sides = _grid_boundary_edges(nx, ny)
    vertices, tets, faces, tags = _extrude(
        cols, _grid_triangles(nx, ny), depth.ravel(), nz, (nx + 1, ny + 1),
        [(e, "lateral") for e in sides.values()])
    tags = ["sigma+" if t == "top" else "sigma-" if t == "bottom" else t for t in tags]

    ncol = (nx + 1) * (ny + 1)
    i = np.tile(np.arange(nx + 1), ny + 1)
    j = np.repeat(np.arange(ny + 1), nx + 1)
    master_col = (j % ny) * (nx + 1) + (i % nx)
    col = np.arange(ncol)
    slave_cols = col[master_col != col]
    pairs = np.concatenate([
        np.column_stack([slave_cols + l * ncol, master_col[slave_cols] + l * ncol]) for l in range(nz + 1)
    ])
    return TetMesh(vertices, tets, faces, tags, periodic_pairs=pairs, period=(cell.a1, cell.a2),
                   grid_shape=(nx + 1, ny + 1), layers=nz)


def plate_node_count(plate: PlateGeometry, cell_res, half=False):
    nx, ny, nz = cell_res
    n2 = plate.N2 * ny
    if half:
        n2 //= 2
    return (plate.N1 * nx + 1) * (n2 + 1) * (nz + 1)


def mesh_plate(plate: PlateGeometry, cell_res, half=False, max_nodes=DEFAULT_NODE_BUDGET):
    """Tet mesh of the thin plate as a conforming union of scaled cell meshes.

    Each cell is meshed with ``cell_res = (nx, ny, nz)`` so interface vertices are
    shared. Tags: ``omega+`` (free surface), ``omega-`` (rough bottom),
    ``upsilon`` (lateral sides) and, for the half plate ``y2 > 0``, ``symmetry``.
    """
    _check_resolution(*cell_res)
    nx, ny, nz = (int(n) for n in cell_res)
    N1, N2 = plate.N1, plate.N2
    n1, n2 = N1 * nx, N2 * ny
    if half and n2 % 2:
        raise InvalidGeometryError(
            "half plate needs the plane y2 = 0 to be a mesh plane (N2 * ny must be even)")
    nodes = plate_node_count(plate, cell_res, half)
    if nodes > max_nodes:
        raise BudgetError(f"plate mesh at eps={plate.eps!r} needs {nodes} nodes > budget {max_nodes}",
                          eps=plate.eps, nodes=nodes)
    j0 = n2 // 2 if half else 0
    x = np.linspace(-plate.A1 / 2, plate.A1 / 2, n1 + 1)
    y = np.linspace(-plate.A2 / 2, plate.A2 / 2, n2 + 1)[j0:]
    if half:
        y[0] = 0.0
    X, Y = np.meshgrid(x, y, indexing="xy")
    cell_e1 = np.linspace(-plate.cell.a1 / 2, plate.cell.a1 / 2, nx + 1)
    cell_e2 = np.linspace(-plate.cell.a2 / 2, plate.cell.a2 / 2, ny + 1)
    gi = np.arange(n1 + 1) % nx
    gj = np.arange(j0, n2 + 1) % ny
    GI, GJ = np.meshgrid(gi, gj, indexing="xy")
    depth = plate.eps * plate.cell.depth_at(cell_e1[GI], cell_e2[GJ])
    m2 = n2 - j0
    sides = _grid_boundary_edges(n1, m2)
    lateral = [(sides["right"], "upsilon"), (sides["left"], "upsilon"), (sides["top"], "upsilon"),
               (sides["bottom"], "symmetry" if half else "upsilon")]
    vertices, tets, faces, tags = _extrude(
        np.column_stack([X.ravel(), Y.ravel()]), _grid_triangles(n1, m2), depth.ravel(), nz,
        (n1 + 1, m2 + 1), lateral)
    tags = ["omega+" if t == "top" else "omega-" if t == "bottom" else t for t in tags]
    return TetMesh(vertices, tets, faces, tags, grid_shape=(n1 + 1, m2 + 1), layers=nz)


# ---------------------------------------------------------------- export

def export_mesh(mesh, path=None):
    """Plain-text dump with ``vertices``, ``cells`` and ``tags`` sections."""
    lines = [f"vertices {mesh.vertices.shape[0]} {mesh.vertices.shape[1]}"]
    lines += [" ".join(f"{c:.17g}" for c in row) for row in mesh.vertices]
    lines.append(f"cells {mesh.cells.shape[0]} {mesh.cells.shape[1]}")
    lines += [" ".join(str(int(i)) for i in row) for row in mesh.cells]
    lines.append(f"tags {len(mesh.facets)}")
    lines += [" ".join(str(int(i)) for i in row) + f" {tag}" for row, tag in zip(mesh.facets, mesh.facet_tags)]
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def read_mesh_sections(text):
    """Parse an exported mesh back into ``(vertices, cells, facets, tags)`` arrays."""
    lines = iter(text.splitlines())
    out = {}
    for header in ("vertices", "cells", "tags"):
        parts = next(lines).split()
        if parts[0] != header:
            raise ValueError(f"expected section {header!r}, got {parts[0]!r}")
        rows = [next(lines).split() for _ in range(int(parts[1]))]
        out[header] = rows
    vertices = np.array(out["vertices"], dtype=float)
    cells = np.array(out["cells"], dtype=np.int64)
    facets = np.array([r[:-1] for r in out["tags"]], dtype=np.int64)
    tags = [r[-1] for r in out["tags"]]
    return vertices, cells, facets, tags
