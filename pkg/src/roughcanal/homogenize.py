"""Periodic cell problems, the effective tensor and two-scale averaging."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import MeshMismatchError, SolverError
from .fem.assembly import Forms, assemble, element_geometry, facet_measures
from .fem.constraints import ConstraintSet, Reduction
from .fem.mesh import TetMesh, mesh_graph_cell
from .geometry import CellGeometry, PlateGeometry

DEFAULT_CELL_RES = (8, 8, 8)

# 4-point degree-2 rule on the reference tetrahedron (barycentric coordinates)
_TET_A, _TET_B = 0.5854101966249685, 0.1381966011250105
_TET_BARY = np.full((4, 4), _TET_B) + np.eye(4) * (_TET_A - _TET_B)


@dataclass(frozen=True)
class CellCorrectors:
    """Nodal fields ``W[:, 0]``, ``W[:, 1]`` on ``mesh``, mean-zero over the cell."""

    cell: CellGeometry
    mesh: TetMesh
    W: np.ndarray
    forms: Forms
    reduction: Reduction

    @property
    def W1(self):
        return self.W[:, 0]

    @property
    def W2(self):
        return self.W[:, 1]

    @property
    def res(self):
        nx1, ny1 = self.mesh.grid_shape
        return (nx1 - 1, ny1 - 1, self.mesh.layers)

    def mean(self):
        ones = np.ones(self.mesh.n_vertices)
        return (ones @ (self.forms.mass @ self.W)) / self.mesh.volume()


@dataclass(frozen=True)
class EffectiveTensor:
    b: np.ndarray
    cell_volume: float
    cover_area: float

    def __post_init__(self):
        b = np.array(self.b, dtype=float).reshape(2, 2)
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @classmethod
    def diagonal(cls, b1, b2, cell_volume=1.0, cover_area=1.0):
        return cls(np.diag([b1, b2]), cell_volume, cover_area)

    def scaled(self, c):
        return EffectiveTensor(c * self.b, self.cell_volume, self.cover_area)

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.b)

    def is_diagonal(self, tol=1e-12):
        return abs(self.b[0, 1]) <= tol * np.abs(self.b).max()


def _volume_gradient_load(mesh):
    """Columns ``f_i[a] = int d(phi_a)/d(xi_i)`` for i = 1, 2."""
    vol, grads = element_geometry(mesh.vertices, mesh.tets)
    n = mesh.n_vertices
    f = np.zeros((n, 2))
    for i in range(2):
        np.add.at(f[:, i], mesh.tets.ravel(), (vol[:, None] * grads[:, :, i]).ravel())
    return f


def solve_correctors(cell: CellGeometry, res=DEFAULT_CELL_RES):
    """Solve the periodic Neumann cell problems for ``W_1, W_2``.

    The discrete problem is ``int grad W_i . grad v = int dv/dxi_i`` for every periodic
    P1 field ``v``; the constant is fixed by a zero-mean constraint.
    """
    mesh = mesh_graph_cell(cell, *res)
    forms = assemble(mesh)
    red = Reduction.build(mesh.n_vertices, ConstraintSet.from_pairs(pairs=mesh.periodic_pairs))
    K = red.apply(forms.stiffness)
    m = red.rhs(forms.mass @ np.ones(mesh.n_vertices))
    f = red.rhs(_volume_gradient_load(mesh))
    n = red.n_free
    aug = sp.bmat([[K, sp.csr_matrix(m[:, None])], [sp.csr_matrix(m[None, :]), None]], format="csc")
    rhs = np.vstack([f, np.zeros((1, 2))])
    try:
        sol = spla.splu(aug).solve(rhs)
    except RuntimeError as exc:
        raise SolverError(f"cell problem is singular: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise SolverError("cell problem produced non-finite values")
    W = red.expand(sol[:n])
    W.setflags(write=False)
    return CellCorrectors(cell, mesh, W, forms, red)


def _check_same_mesh(cell, correctors):
    if correctors.cell is not cell and correctors.cell != cell:
        if not (np.array_equal(correctors.cell.depth, cell.depth)
                and (correctors.cell.a1, correctors.cell.a2) == (cell.a1, cell.a2)):
            raise MeshMismatchError("correctors were computed for a different cell")


def effective_tensor(cell: CellGeometry, correctors: CellCorrectors):
    """``b_ik = (grad(xi_k - W_k), grad(xi_i - W_i))`` over the cell, by exact element quadrature."""
    _check_same_mesh(cell, correctors)
    mesh = correctors.mesh
    vol, grads = element_geometry(mesh.vertices, mesh.tets)
    gW = np.einsum("mad,maj->mjd", grads, correctors.W[mesh.tets])  # (m, 2, 3)
    G = -gW
    G[:, 0, 0] += 1.0
    G[:, 1, 1] += 1.0
    b = np.einsum("m,mid,mkd->ik", vol, G, G)
    b = 0.5 * (b + b.T)
    return EffectiveTensor(b, float(vol.sum()), cell.cover_area)


def effective_tensor_boundary_form(cell: CellGeometry, correctors: CellCorrectors):
    """Same tensor via ``|Sigma| delta_ik - int(d_i W_k + d_k W_i) + int_{sigma-} W_k n_i``.

    Equal to :func:`effective_tensor` up to the accuracy of the linear solve; used
    as a consistency check.
    """
    _check_same_mesh(cell, correctors)
    mesh = correctors.mesh
    vol, grads = element_geometry(mesh.vertices, mesh.tets)
    gW = np.einsum("mad,maj->mjd", grads, correctors.W[mesh.tets])
    D = np.einsum("m,mkd->dk", vol, gW)[:2, :]  # D[i, k] = int d_i W_k
    faces = mesh.faces_with_tag("sigma-")
    pts = mesh.vertices[faces]
    nrm = np.cross(pts[:, 1] - pts[:, 0], pts[:, 2] - pts[:, 0])
    nrm *= np.where(nrm[:, 2] > 0, -1.0, 1.0)[:, None]  # outward: downward
    nrm /= np.linalg.norm(nrm, axis=1)[:, None]
    area = facet_measures(mesh.vertices, faces)
    Wmean = correctors.W[faces].mean(axis=1)  # (f, 2), exact face average of a linear field
    S = np.einsum("f,fi,fk->ik", area, nrm[:, :2], Wmean)  # S[i, k] = int W_k n_i
    total = float(vol.sum())
    b = total * np.eye(2) - D - D.T + S
    return EffectiveTensor(b, total, cell.cover_area)


def homogenize(cell: CellGeometry, res=DEFAULT_CELL_RES):
    """Correctors and effective tensor in one call."""
    corr = solve_correctors(cell, res)
    return corr, effective_tensor(cell, corr)


# ---------------------------------------------------------------- two-scale averaging

@dataclass(frozen=True)
class TwoScaleResult:
    lhs: float
    rhs: float
    z_mean: float

    @property
    def discrepancy(self):
        return self.lhs - self.rhs


def cell_quadrature(mesh: TetMesh):
    """Points ``(q, 3)`` and weights of a degree-2 rule on every tet of ``mesh``."""
    vol, _ = element_geometry(mesh.vertices, mesh.tets)
    pts = np.einsum("qa,mad->mqd", _TET_BARY, mesh.vertices[mesh.tets]).reshape(-1, 3)
    w = np.repeat(vol / 4.0, 4)
    return pts, w


def cell_centers(plate: PlateGeometry):
    """Centres ``y^nu`` of the scaled cells on the cover, shape ``(N1 * N2, 2)``."""
    c1 = -plate.A1 / 2 + plate.eps * plate.cell.a1 * (np.arange(plate.N1) + 0.5)
    c2 = -plate.A2 / 2 + plate.eps * plate.cell.a2 * (np.arange(plate.N2) + 0.5)
    C1, C2 = np.meshgrid(c1, c2, indexing="ij")
    return np.column_stack([C1.ravel(), C2.ravel()])


def two_scale_average(Z, Y, plate: PlateGeometry, res=(4, 4, 4)):
    """Compare ``int Z(x/eps) Y(y) dx`` over the plate with ``eps |Sigma|/|sigma| Zbar int Y``.

    ``Z(eta1, eta2, zeta)`` is a cell field evaluated in local cell coordinates and
    ``Y(y1, y2)`` a field on the cover. Both integrals use the same per-cell rule.
    """
    mesh = mesh_graph_cell(plate.cell, *res)
    pts, w = cell_quadrature(mesh)
    z = np.broadcast_to(np.asarray(Z(pts[:, 0], pts[:, 1], pts[:, 2]), dtype=float), w.shape)
    cell_vol = w.sum()
    zbar = float(w @ z) / cell_vol
    eps = plate.eps
    centers = cell_centers(plate)
    lhs = 0.0
    for c in centers:
        yv = Y(c[0] + eps * pts[:, 0], c[1] + eps * pts[:, 1])
        lhs += eps ** 3 * float(np.sum(w * z * np.broadcast_to(yv, w.shape)))
    # cover integral of Y with a Gauss rule per scaled cell footprint
    g, gw = np.polynomial.legendre.leggauss(6)
    ha1, ha2 = eps * plate.cell.a1 / 2, eps * plate.cell.a2 / 2
    G1, G2 = np.meshgrid(g, g, indexing="ij")
    GW = np.outer(gw, gw).ravel() * ha1 * ha2
    intY = 0.0
    for c in centers:
        yv = Y(c[0] + ha1 * G1.ravel(), c[1] + ha2 * G2.ravel())
        intY += float(np.sum(GW * np.broadcast_to(yv, GW.shape)))
    rhs = float(eps * cell_vol / plate.cell.cover_area * zbar * intY)
    return TwoScaleResult(lhs, rhs, float(zbar))
