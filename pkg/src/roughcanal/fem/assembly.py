"""Closed-form P1 element matrices and global assembly."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import DegenerateElementError


@dataclass(frozen=True)
class Forms:
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    boundary_mass: dict

    def boundary(self, *tags):
        """Sum of boundary masses over ``tags`` (zero matrix if none present)."""
        n = self.mass.shape[0]
        out = sp.csr_matrix((n, n))
        for t in tags:
            if t in self.boundary_mass:
                out = out + self.boundary_mass[t]
        return out


def element_geometry(vertices, cells):
    """Measures and barycentric gradients ``(m, d+1, d)`` of simplices."""
    pts = vertices[cells]
    d = pts.shape[2]
    edges = pts[:, 1:, :] - pts[:, :1, :]
    det = np.linalg.det(edges)
    measure = np.abs(det) / math.factorial(d)
    scale = np.ptp(vertices, axis=0).max() ** d if len(vertices) else 1.0
    bad = np.abs(measure) < 1e-14 * scale
    if np.any(bad):
        raise DegenerateElementError(
            f"{int(bad.sum())} degenerate element(s), first is cell {int(np.flatnonzero(bad)[0])}")
    g = np.linalg.inv(edges)  # column j is the gradient of barycentric coordinate j+1
    grads = np.concatenate([-g.sum(axis=2)[:, None, :], g.transpose(0, 2, 1)], axis=1)
    return measure, grads


def _scatter(cells, local, n):
    k = cells.shape[1]
    rows = np.repeat(cells, k, axis=1).ravel()
    cols = np.tile(cells, (1, k)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _local_mass(measure, k):
    """P1 mass on a k-simplex: measure / ((k+1)(k+2)) * (1 + delta_ij)."""
    base = (np.ones((k + 1, k + 1)) + np.eye(k + 1)) / ((k + 1) * (k + 2))
    return measure[:, None, None] * base[None]


def stiffness_matrix(vertices, cells, tensor=None):
    measure, grads = element_geometry(vertices, cells)
    if tensor is None:
        local = np.einsum("mad,mbd->mab", grads, grads)
    else:
        c = np.asarray(tensor, dtype=float)
        local = np.einsum("mad,de,mbe->mab", grads, c, grads)
    local = 0.5 * (local + local.transpose(0, 2, 1)) * measure[:, None, None]
    return _scatter(cells, local, len(vertices))


def mass_matrix(vertices, cells):
    measure = element_geometry(vertices, cells)[0]
    return _scatter(cells, _local_mass(measure, cells.shape[1] - 1), len(vertices))


def facet_measures(vertices, facets):
    pts = vertices[facets]
    if facets.shape[1] == 2:
        return np.linalg.norm(pts[:, 1] - pts[:, 0], axis=1)
    return 0.5 * np.linalg.norm(np.cross(pts[:, 1] - pts[:, 0], pts[:, 2] - pts[:, 0]), axis=1)


def boundary_mass_matrix(vertices, facets, n):
    facets = np.asarray(facets, dtype=np.int64)
    if len(facets) == 0:
        return sp.csr_matrix((n, n))
    meas = facet_measures(vertices, facets)
    return _scatter(facets, _local_mass(meas, facets.shape[1] - 1), n)


def assemble(mesh, tensor=None):
    """Stiffness, domain mass and per-tag boundary mass of a TriMesh or TetMesh.

    ``tensor`` is an optional constant symmetric coefficient in the stiffness form.
    """
    v, c = mesh.vertices, mesh.cells
    K = stiffness_matrix(v, c, tensor)
    M = mass_matrix(v, c)
    tags = np.array(mesh.facet_tags, dtype=object)
    bm = {t: boundary_mass_matrix(v, mesh.facets[tags == t], len(v)) for t in mesh.tags()}
    return Forms(K, M, bm)


def gradients(mesh, u):
    """Elementwise constant gradients of nodal fields ``u`` (shape (n,) or (n, q))."""
    _, grads = element_geometry(mesh.vertices, mesh.cells)
    return np.einsum("mad,ma...->m...d", grads, np.asarray(u)[mesh.cells])


def is_symmetric(A, tol=0.0):
    diff = abs(A - A.T)
    return diff.nnz == 0 or diff.max() <= tol * max(abs(A).max(), 1.0)
