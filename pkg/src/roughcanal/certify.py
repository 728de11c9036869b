"""Trapped-mode certificates: plate Steklov bounds below the canal threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .canal import CrossSection, lambda_to_mu, mu_to_lambda, threshold
from .errors import BudgetError, InvalidGeometryError, NotFoundError, ThresholdViolationError
from .fem.mesh import DEFAULT_NODE_BUDGET
from .geometry import PlateGeometry
from .homogenize import effective_tensor, solve_correctors
from .limit import LimitProblem, separable_values, solve_limit
from .plate import DEFAULT_PLATE_RES, admissible_eps, solve_plate_steklov

FEM_THRESHOLD_DEFLATION = 0.99


def spectral_parameter_maps(value, direction, eps=None):
    """Algebraic maps between spectral parameters.

    ``lambda->mu``: ``1/(1+lambda)``; ``mu->lambda``: ``1/mu - 1`` (``inf`` at 0);
    ``alpha->beta``: ``1/(alpha+eps)``; ``beta->alpha``: ``1/beta - eps``.
    """
    if direction == "lambda->mu":
        return lambda_to_mu(value)
    if direction == "mu->lambda":
        return mu_to_lambda(value)
    if direction in ("alpha->beta", "beta->alpha"):
        if eps is None:
            raise ValueError(f"{direction} needs eps")
        if direction == "alpha->beta":
            return 1.0 / (value + eps)
        return math.inf if value == 0 else 1.0 / value - eps
    raise ValueError(f"unknown map direction {direction!r}")


@dataclass(frozen=True)
class CanalConfig:
    """Half canal section plus the rough plate centred on ``x2 = 0`` under its free surface.

    ``body`` holds descriptive data about the submerged body below the plate; it
    never enters a certificate.
    """

    section: CrossSection
    plate: PlateGeometry
    body: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.section.half:
            raise InvalidGeometryError("certification works on the half section with a symmetry cut")
        lo, hi = self.section.surface_extent()
        if not (lo <= 0.0 and self.plate.A2 / 2 < hi):
            raise InvalidGeometryError(
                f"plate half-width {self.plate.A2 / 2} does not fit under the free surface [{lo}, {hi}]")

    def with_eps(self, eps):
        return CanalConfig(self.section, self.plate.with_eps(eps), self.body)


@dataclass
class Certificate:
    d: float
    n_requested: int | None
    eps: float
    bounds: list
    threshold: float
    certified_count: int
    method: str
    threshold_method: str
    partial: bool = False
    degenerate: bool = False
    flags: list = field(default_factory=list)
    oracle_notes: list = field(default_factory=list)

    @property
    def limit(self):
        return min(self.d, self.threshold)

    def to_dict(self):
        return {
            "d": self.d, "threshold": self.threshold, "eps": self.eps, "bounds": list(self.bounds),
            "certified_count": self.certified_count, "method": self.method,
            "oracle_notes": list(self.oracle_notes), "n_requested": self.n_requested,
            "threshold_method": self.threshold_method, "partial": self.partial,
            "degenerate": self.degenerate, "flags": list(self.flags),
        }


def effective_threshold(section: CrossSection, method="auto", target_h=None):
    """Threshold used for certification and a note on how it was obtained.

    Rectangles use the exact separable value. Otherwise the finite element value,
    which overestimates, is deflated by ``FEM_THRESHOLD_DEFLATION``.
    """
    if method == "auto":
        method = "analytic" if section.is_rectangle else "fem"
    res = threshold(section, target_h=target_h, method=method)
    if method == "analytic":
        return res.lambda_gamma0, "analytic", ["threshold from the exact separable dispersion root"]
    lam = FEM_THRESHOLD_DEFLATION * res.lambda_gamma0
    return lam, "fem", [f"finite element threshold {res.lambda_gamma0!r} deflated by "
                        f"{FEM_THRESHOLD_DEFLATION} (the discrete value lies above the exact one)"]


def _count_below(bounds, limit):
    n = 0
    for b in bounds:
        if b < limit:
            n += 1
        else:
            break
    return n


def certify(config: CanalConfig, d, method="direct", n_requested=None, modes=None, cell_res=DEFAULT_PLATE_RES,
            max_nodes=DEFAULT_NODE_BUDGET, threshold_method="auto", threshold_h=None, max_modes=64,
            tol=1e-9, seed=0, _threshold=None):
    """Certify how many canal eigenvalues lie in ``(0, d)``.

    ``direct`` computes half-plate Steklov eigenvalues, which bound the canal
    eigenvalues from above; every bound below ``min(d, threshold)`` is one certified
    mode. ``asymptotic`` uses ``eps * tau^(k)+`` instead and is not rigorous.
    """
    if _threshold is None:
        lam0, tmethod, notes = effective_threshold(config.section, threshold_method, threshold_h)
    else:
        lam0, tmethod, notes = _threshold
    notes = list(notes)
    if not d > 0:
        raise ValueError(f"d must be positive, got {d}")
    if d >= lam0:
        raise ThresholdViolationError(f"d={d!r} is not below the continuous-spectrum threshold {lam0!r}")
    eps = config.plate.eps
    limit = min(d, lam0)
    if n_requested == 0:
        return Certificate(d, 0, eps, [], lam0, 0, method, tmethod, degenerate=True,
                           flags=["zero modes requested: trivially certified"], oracle_notes=notes)
    k = modes or max(4, (n_requested or 0) + 1)
    flags = []
    if method == "direct":
        notes.append("bounds are conforming finite element upper bounds of the half-plate Steklov eigenvalues")
        while True:
            try:
                spec = solve_plate_steklov(config.plate, half=True, k=k, cell_res=cell_res,
                                           max_nodes=max_nodes, tol=tol, seed=seed)
            except BudgetError as exc:
                return Certificate(d, n_requested, eps, [], lam0, 0, method, tmethod, partial=True,
                                   flags=[f"budget exceeded: {exc}"], oracle_notes=notes)
            bounds = [float(v) for v in spec.values]
            count = _count_below(bounds, limit)
            if count < len(bounds) or k >= max_modes:
                break
            k = min(2 * k, max_modes)
        if count == len(bounds):
            flags.append(f"all {k} computed bounds are certified; more modes may exist")
    elif method == "asymptotic":
        corr = solve_correctors(config.plate.cell, cell_res)
        tensor = effective_tensor(config.plate.cell, corr)
        p = config.plate
        if tensor.is_diagonal():
            tau = separable_values(tensor, p.A1, p.A2, k, half=True)
        else:
            tau = solve_limit(LimitProblem(tensor, p.A1, p.A2, half=True), k, tol=tol, seed=seed).values
        bounds = [float(eps * t) for t in tau]
        count = _count_below(bounds, limit)
        flags.append("asymptotic estimates eps * tau, not rigorous bounds")
    else:
        raise ValueError(f"unknown certification method {method!r}")
    return Certificate(d, n_requested, eps, bounds, lam0, count, method, tmethod, flags=flags, oracle_notes=notes)


def default_eps_grid(config: CanalConfig, count=3):
    """Scales ``A1 / (a1 * N)`` with ``N = N1, 2 N1, 4 N1, ...`` starting from the configured plate."""
    p = config.plate
    return [p.A1 / (p.cell.a1 * p.N1 * 2 ** i) for i in range(count)]


def find_epsilon(config: CanalConfig, d, N, eps_grid=None, **kwargs):
    """Largest grid scale whose certificate reaches ``N`` modes (descending scan).

    Returns ``(eps, certificate)``. Raises :class:`NotFoundError` carrying the best
    certificate seen when the grid or the node budget runs out first.
    """
    grid = sorted({float(e) for e in (eps_grid or default_eps_grid(config))}, reverse=True)
    p = config.plate
    thr = effective_threshold(config.section, kwargs.pop("threshold_method", "auto"),
                              kwargs.pop("threshold_h", None))
    if d >= thr[0]:
        raise ThresholdViolationError(f"d={d!r} is not below the continuous-spectrum threshold {thr[0]!r}")
    best = None
    for e in grid:
        e_adm = admissible_eps(p.cell, p.A1, p.A2, e)
        cert = certify(config.with_eps(e_adm), d, n_requested=N, _threshold=thr, **kwargs)
        if not np.isclose(e_adm, e, rtol=1e-12):
            cert.flags.append(f"requested eps={e!r} snapped to admissible {e_adm!r}")
        if cert.certified_count >= N:
            return e_adm, cert
        if best is None or cert.certified_count > best.certified_count:
            best = cert
        if cert.partial:
            raise NotFoundError(f"node budget exhausted at eps={e_adm!r} before reaching N={N}", best=best)
    raise NotFoundError(f"no scale in {grid} certifies N={N} modes below d={d!r}", best=best)
