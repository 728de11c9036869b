"""Direct Steklov problem on the thin rough plate and convergence to the limit spectrum."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .eigensolve import CLUSTER_RTOL, EigenRequest, solve_smallest
from .errors import BudgetError, MeshMismatchError
from .fem.assembly import assemble
from .fem.constraints import ConstraintSet, Reduction
from .fem.mesh import DEFAULT_NODE_BUDGET, mesh_plate, plate_node_count
from .geometry import PlateGeometry, snap_eps, cell_count
from .homogenize import CellCorrectors, solve_correctors, effective_tensor
from .limit import LimitProblem, interpolate, nodal_gradient, separable_values, solve_limit

DEFAULT_PLATE_RES = (4, 4, 4)


def solve_plate_steklov(plate: PlateGeometry, half=False, k=3, cell_res=DEFAULT_PLATE_RES,
                        max_nodes=DEFAULT_NODE_BUDGET, tol=1e-9, seed=0):
    """Smallest ``k`` Steklov eigenvalues ``alpha`` of the plate (Dirichlet on the lateral sides).

    Eigenvectors are scaled so that ``(grad u_p, grad u_q) = delta_pq`` for the half
    plate and ``(grad u_p, grad u_q) + eps (u_p, u_q)_top = delta_pq`` for the full plate.
    """
    mesh = mesh_plate(plate, cell_res, half=half, max_nodes=max_nodes)
    forms = assemble(mesh)
    pinned = mesh.vertices_with_tag("upsilon", "symmetry")
    red = Reduction.build(mesh.n_vertices, ConstraintSet(dirichlet=pinned))
    K = forms.stiffness
    B = forms.boundary_mass["omega+"]
    spec = solve_smallest(red.apply(K), red.apply(B), EigenRequest(k=k, tol=tol, seed=seed), reduction=red)
    shift = 0.0 if half else plate.eps
    spec.vectors = spec.vectors / np.sqrt(spec.values + shift)
    spec.gram = spec.vectors.T @ (K @ spec.vectors) + shift * spec.vectors.T @ (B @ spec.vectors)
    spec.meta.update(mesh=mesh, forms=forms, half=half, eps=plate.eps,
                     normalization="energy" if half else "energy_plus_eps_trace")
    return spec


def flat_plate_values(A1, A2, thickness, k, half=False):
    """Separable values ``|q| tanh(|q| t)`` for a flat box plate, ascending."""
    L2 = A2 / 2 if half else A2
    m = np.arange(1, k + 2)
    q = np.pi * np.sqrt(np.add.outer((m / A1) ** 2, (m / L2) ** 2).ravel())
    return np.sort(q * np.tanh(q * thickness))[:k]


# ---------------------------------------------------------------- asymptotic eigenfunction

def smoothstep(t):
    """Quintic smoothstep, 0 for t <= 0 and 1 for t >= 1, C2 at both ends."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


def cutoff(y, A1, A2, eps, half=False):
    """Product cut-off: 1 farther than ``eps`` from the boundary, 0 within ``eps/2`` of it."""
    y = np.asarray(y, dtype=float)
    d1 = A1 / 2 - np.abs(y[:, 0])
    d2 = np.minimum(y[:, 1], A2 / 2 - y[:, 1]) if half else A2 / 2 - np.abs(y[:, 1])
    ramp = lambda d: smoothstep((d - eps / 2) / (eps / 2))  # noqa: E731
    return ramp(d1) * ramp(d2)


def corrector_values_on_plate(mesh, plate: PlateGeometry, correctors: CellCorrectors, half=False):
    """Nodal ``W_i(x/eps)`` on a plate mesh whose cells match the corrector mesh vertex-for-vertex."""
    nx, ny, nz = correctors.res
    if mesh.layers != nz:
        raise MeshMismatchError("plate and cell meshes use different layer counts")
    n1, m2 = mesh.grid_shape[0] - 1, mesh.grid_shape[1] - 1
    if n1 != plate.N1 * nx:
        raise MeshMismatchError("plate and cell meshes use different horizontal resolutions")
    j0 = plate.N2 * ny // 2 if half else 0
    if m2 + j0 != plate.N2 * ny:
        raise MeshMismatchError("plate and cell meshes use different horizontal resolutions")
    i = np.tile(np.arange(n1 + 1), m2 + 1) % nx
    j = (np.repeat(np.arange(m2 + 1), n1 + 1) + j0) % ny
    col_cell = j * (nx + 1) + i
    ncell = (nx + 1) * (ny + 1)
    layers = np.arange(nz + 1)
    idx = (layers[:, None] * ncell + col_cell[None, :]).ravel()
    return correctors.W[idx]


@dataclass
class AsymptoticComparison:
    field: np.ndarray
    distance: float
    mode: int
    target: int
    cluster: tuple
    flagged: bool
    notes: list = field(default_factory=list)


def asymptotic_eigenfunction(plate: PlateGeometry, p, correctors: CellCorrectors, limit_spectrum,
                             plate_spectrum, half=False, target=None, sign=-1.0):
    """Two-scale approximation ``w + sign * eps * X_eps * sum_i W_i(x/eps) dw/dy_i`` of mode ``p``.

    Returns the relative L2 distance over the plate to direct mode ``target``
    (default ``p``) after normalization and sign alignment. When the direct value
    sits in a cluster the distance to the cluster's span is reported and flagged.
    ``sign=-1`` matches the corrector orientation used by :func:`solve_correctors`.
    """
    target = p if target is None else target
    mesh = plate_spectrum.meta["mesh"]
    lmesh = limit_spectrum.meta["mesh"]
    y = mesh.vertices[:, :2]
    w = limit_spectrum.vectors[:, p]
    gw = nodal_gradient(lmesh, w)
    W = corrector_values_on_plate(mesh, plate, correctors, half)
    ncol = mesh.n_columns
    yc = y[:ncol]
    w_c = interpolate(lmesh, w, yc)
    g_c = interpolate(lmesh, gw, yc)
    X = cutoff(yc, plate.A1, plate.A2, plate.eps, half)
    w_n = np.tile(w_c, mesh.layers + 1)
    corr = np.tile(X[:, None] * g_c, (mesh.layers + 1, 1))
    U = w_n + sign * plate.eps * np.einsum("ni,ni->n", W, corr)

    M = plate_spectrum.meta["forms"].mass
    l2 = lambda v: float(np.sqrt(max(v @ (M @ v), 0.0)))  # noqa: E731
    Uh = U / l2(U)
    vals = plate_spectrum.values
    cl = tuple(i for i in range(len(vals))
               if abs(vals[i] - vals[target]) <= CLUSTER_RTOL * abs(vals[target])) or (target,)
    notes = []
    if len(cl) > 1:
        V = plate_spectrum.vectors[:, list(cl)]
        G = V.T @ (M @ V)
        coef = np.linalg.solve(G, V.T @ (M @ Uh))
        dist = l2(Uh - V @ coef)
        notes.append(f"mode {target} is in cluster {cl}; distance measured to the cluster span")
        flagged = True
    else:
        u = plate_spectrum.vectors[:, target]
        uh = u / l2(u)
        s = 1.0 if Uh @ (M @ uh) >= 0 else -1.0
        dist = l2(Uh - s * uh)
        flagged = False
    return AsymptoticComparison(U, dist, p, target, cl, flagged, notes)


# ---------------------------------------------------------------- convergence study

@dataclass
class ConvergenceReport:
    """Rows ``(eps, mode, alpha/eps, tau, |alpha - eps tau|)`` with fitted log-log rates per mode."""

    rows: list
    rates: dict
    tau: np.ndarray
    eps_used: list
    eps_requested: list
    flags: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def errors(self, mode):
        return np.array([r[4] for r in self.rows if r[1] == mode])

    def ratio_errors(self, mode):
        return np.array([abs(r[2] - r[3]) for r in self.rows if r[1] == mode])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["eps", "mode", "alpha_over_eps", "tau", "abs_err"])
            for e, m, a, t, err in self.rows:
                wr.writerow([repr(float(e)), m, repr(float(a)), repr(float(t)), repr(float(err))])

    def sidecar(self):
        return {"rates": {str(k): v for k, v in self.rates.items()}, "eps_used": self.eps_used,
                "eps_requested": self.eps_requested, "flags": self.flags,
                "abs_err_definition": "|alpha - eps * tau|", **self.meta}

    def write_sidecar(self, path):
        Path(path).write_text(json.dumps(self.sidecar(), indent=2))


def fit_rate(eps, err):
    """Least-squares slope of ``log err`` against ``log eps``."""
    eps, err = np.asarray(eps, float), np.asarray(err, float)
    if len(eps) < 2 or np.any(err <= 0):
        return None
    return float(np.polyfit(np.log(eps), np.log(err), 1)[0])


def admissible_eps(cell, A1, A2, eps):
    """Snap ``eps`` so both plate sides hold an integer number of scaled cells."""
    e = snap_eps(A1, cell.a1, eps)
    cell_count(A2, cell.a2, e)
    return e


def convergence_study(cell, A1, A2, eps_list, k=1, cell_res=DEFAULT_PLATE_RES, limit_res=(128, 128),
                      half=False, max_nodes=DEFAULT_NODE_BUDGET, tol=1e-9, seed=0):
    """Compare ``alpha_eps / eps`` with the limit values ``tau`` over a decreasing list of scales.

    The effective tensor is computed on the same cell mesh as the plates. For a
    diagonal tensor ``tau`` is exact (separable), otherwise a fine limit FEM solve.
    """
    eps_req = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_req, eps_req[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    eps_used = [admissible_eps(cell, A1, A2, e) for e in eps_req]
    if any(b >= a for a, b in zip(eps_used, eps_used[1:])):
        raise ValueError(f"snapped scales {eps_used} are not strictly decreasing")
    for e in eps_used:
        nodes = plate_node_count(PlateGeometry(cell, A1, A2, e), cell_res, half)
        if nodes > max_nodes:
            raise BudgetError(f"eps={e!r} needs {nodes} nodes > budget {max_nodes}", eps=e, nodes=nodes)

    corr = solve_correctors(cell, cell_res)
    tensor = effective_tensor(cell, corr)
    if tensor.is_diagonal():
        tau = separable_values(tensor, A1, A2, k, half)
        tau_method = "separable"
    else:
        tau = solve_limit(LimitProblem(tensor, A1, A2, half), k, limit_res, tol=tol, seed=seed).values
        tau_method = f"fem{tuple(limit_res)}"

    rows, flags = [], []
    for e in eps_used:
        spec = solve_plate_steklov(PlateGeometry(cell, A1, A2, e), half, k, cell_res, max_nodes, tol, seed)
        for m in range(k):
            a = float(spec.values[m])
            rows.append((e, m + 1, a / e, float(tau[m]), float(abs(a - e * tau[m]))))
        if spec.clusters:
            flags.append(f"eps={e!r}: clustered modes {spec.clusters} matched by index")
    rates = {}
    for m in range(1, k + 1):
        errs = [r[4] for r in rows if r[1] == m]
        rates[m] = fit_rate(eps_used, errs)
    if len(eps_used) < 2:
        flags.append("single scale: no rate fitted")
    meta = {"tau_method": tau_method, "b": tensor.b.tolist(), "cell_res": list(cell_res), "half": half}
    return ConvergenceReport(rows, rates, np.asarray(tau), eps_used, eps_req, flags, meta)
