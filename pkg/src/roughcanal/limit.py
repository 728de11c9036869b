"""Homogenized Dirichlet spectral problem on the plate cover (or its upper half)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigensolve import EigenRequest, solve_smallest
from .fem.assembly import assemble, element_geometry
from .fem.constraints import ConstraintSet, Reduction
from .fem.mesh import TriMesh, mesh_rectangle
from .homogenize import EffectiveTensor
from .errors import InvalidGeometryError

DEFAULT_LIMIT_RES = (64, 64)


@dataclass(frozen=True)
class LimitProblem:
    """``-div(b grad w) = tau |sigma| w`` on the cover with ``w = 0`` on its boundary.

    With ``half`` the domain is the part ``y2 > 0`` of the cover.
    """

    tensor: EffectiveTensor
    A1: float
    A2: float
    half: bool = False

    def __post_init__(self):
        if not (self.A1 > 0 and self.A2 > 0):
            raise InvalidGeometryError(f"plate sides must be positive, got {self.A1}, {self.A2}")
        ev = self.tensor.eigenvalues()
        if not ev.min() > 0:
            raise InvalidGeometryError(f"effective tensor must be positive definite, eigenvalues {ev}")

    def domain(self):
        """``(x0, y0, width, height)`` of the rectangle that is meshed."""
        if self.half:
            return -self.A1 / 2, 0.0, self.A1, self.A2 / 2
        return -self.A1 / 2, -self.A2 / 2, self.A1, self.A2


def separable_values(tensor: EffectiveTensor, A1, A2, k, half=False):
    """Exact eigenvalues for a diagonal tensor, ascending (first ``k``)."""
    b1, b2 = tensor.b[0, 0], tensor.b[1, 1]
    L2 = A2 / 2 if half else A2
    m = np.arange(1, k + 2)
    vals = np.add.outer(b1 * (m / A1) ** 2, b2 * (m / L2) ** 2).ravel()
    return np.sort(np.pi ** 2 * vals / tensor.cover_area)[:k]


def solve_limit(problem: LimitProblem, k=5, res=DEFAULT_LIMIT_RES, tol=1e-9, seed=0):
    """Smallest ``k`` values of ``tau`` with eigenfunctions normalized by
    ``(b grad w_p, grad w_q) + |sigma| (w_p, w_q) = delta_pq``.
    """
    x0, y0, w, h = problem.domain()
    mesh = mesh_rectangle(w, h, res[0], res[1], tags="boundary", origin=(x0, y0))
    forms = assemble(mesh, tensor=problem.tensor.b)
    red = Reduction.build(mesh.n_vertices, ConstraintSet(dirichlet=mesh.vertices_with_tag("boundary")))
    sig = problem.tensor.cover_area
    spec = solve_smallest(red.apply(forms.stiffness), red.apply(sig * forms.mass),
                          EigenRequest(k=k, tol=tol, seed=seed), reduction=red)
    # M-orthonormal output has energy tau; rescale to unit energy-plus-mass norm
    spec.vectors = spec.vectors / np.sqrt(1.0 + spec.values)
    K, M = forms.stiffness, sig * forms.mass
    spec.gram = spec.vectors.T @ (K @ spec.vectors) + spec.vectors.T @ (M @ spec.vectors)
    spec.meta.update(mesh=mesh, normalization="energy_plus_mass")
    return spec


# ---------------------------------------------------------------- evaluation on structured grids

def nodal_gradient(mesh: TriMesh, u):
    """Area-weighted average of element gradients at each vertex, shape ``(n, 2)`` (or ``(n, q, 2)``)."""
    area, grads = element_geometry(mesh.vertices, mesh.triangles)
    u = np.asarray(u)
    g = np.einsum("mad,ma...->m...d", grads, u[mesh.triangles])
    num = np.zeros((mesh.n_vertices,) + g.shape[1:])
    den = np.zeros(mesh.n_vertices)
    for a in range(3):
        np.add.at(num, mesh.triangles[:, a], area.reshape((-1,) + (1,) * (g.ndim - 1)) * g)
        np.add.at(den, mesh.triangles[:, a], area)
    return num / den.reshape((-1,) + (1,) * (g.ndim - 1))


def interpolate(mesh: TriMesh, u, points):
    """Evaluate the P1 field ``u`` of a :func:`mesh_rectangle` mesh at ``points`` (clamped to the rectangle)."""
    if mesh.grid_shape is None:
        raise ValueError("interpolation needs a structured rectangle mesh")
    nx, ny = mesh.grid_shape[0] - 1, mesh.grid_shape[1] - 1
    x0, y0 = mesh.vertices[0]
    x1, y1 = mesh.vertices[-1]
    pts = np.asarray(points, dtype=float)
    s = np.clip((pts[:, 0] - x0) / (x1 - x0) * nx, 0, nx)
    t = np.clip((pts[:, 1] - y0) / (y1 - y0) * ny, 0, ny)
    i = np.minimum(np.floor(s).astype(int), nx - 1)
    j = np.minimum(np.floor(t).astype(int), ny - 1)
    s -= i
    t -= j
    u = np.asarray(u)
    v00 = j * (nx + 1) + i
    u00, u10, u01, u11 = u[v00], u[v00 + 1], u[v00 + nx + 1], u[v00 + nx + 2]
    shape = (-1,) + (1,) * (u.ndim - 1)
    s, t = s.reshape(shape), t.reshape(shape)
    lower = u00 + s * (u10 - u00) + t * (u11 - u10)
    upper = u00 + t * (u01 - u00) + s * (u11 - u01)
    return np.where(s >= t, lower, upper)
