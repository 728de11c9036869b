"""Cross-section model problems of the canal: threshold, dispersion and Weyl residuals.

Sections live in the ``(x2, x3)`` plane with the free surface on ``x3 = 0``.
Tags: ``gamma0`` (free surface), ``gamma`` (walls), ``symmetry`` (cut ``x2 = 0``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .eigensolve import EigenRequest, solve_smallest
from .errors import InvalidGeometryError, RangeGuardError
from .fem.assembly import assemble
from .fem.constraints import ConstraintSet, Reduction
from .fem.mesh import StepPolygon, mesh_stepped_polygon
from .plate import smoothstep

SURFACE, WALL, SYMMETRY = "gamma0", "gamma", "symmetry"
_TAGS = {SURFACE, WALL, SYMMETRY}
_TOL = 1e-12


@dataclass(frozen=True)
class CrossSection:
    """Canal cross-section (or its half ``x2 > 0``) as a tagged stepped polygon."""

    polygon: StepPolygon
    half: bool = True

    def __post_init__(self):
        poly = self.polygon
        if not isinstance(poly, StepPolygon):
            poly = StepPolygon(*poly)
            object.__setattr__(self, "polygon", poly)
        unknown = set(poly.tags) - _TAGS
        if unknown:
            raise InvalidGeometryError(f"unknown section tags {sorted(unknown)}; use {sorted(_TAGS)}")
        a, b = poly.segments()
        for (p, q), tag in zip(zip(a, b), poly.tags):
            if tag == SURFACE and (abs(p[1]) > _TOL or abs(q[1]) > _TOL):
                raise InvalidGeometryError("free-surface edges must lie on x3 = 0")
            if tag == SYMMETRY and (abs(p[0]) > _TOL or abs(q[0]) > _TOL):
                raise InvalidGeometryError("symmetry edges must lie on x2 = 0")
        if SURFACE not in poly.tags:
            raise InvalidGeometryError("section needs a free surface")
        if self.half and SYMMETRY not in poly.tags:
            raise InvalidGeometryError("half section needs a nonempty symmetry cut")
        v = poly.array
        if v[:, 1].max() > _TOL:
            raise InvalidGeometryError("section must lie below the free surface x3 = 0")
        if self.half and v[:, 0].min() < -_TOL:
            raise InvalidGeometryError("half section must lie in x2 >= 0")

    @classmethod
    def rectangle(cls, l, depth, half=True):
        if not (l > 0 and depth > 0):
            raise InvalidGeometryError(f"half-width and depth must be positive, got {l}, {depth}")
        x0 = 0.0 if half else -l
        tags = {"bottom": WALL, "right": WALL, "top": SURFACE, "left": SYMMETRY if half else WALL}
        return cls(StepPolygon.rectangle(x0, -depth, l, 0.0, tags), half)

    @classmethod
    def from_vertices(cls, vertices, tags, half=True):
        return cls(StepPolygon(vertices, tags), half)

    @property
    def half_width(self):
        v = self.polygon.array
        return float(v[:, 0].max()) if self.half else float(np.ptp(v[:, 0]) / 2)

    l = half_width

    @property
    def depth(self):
        return float(-self.polygon.array[:, 1].min())

    @property
    def is_rectangle(self):
        return len(self.polygon.vertices) == 4

    def surface_extent(self):
        """``(x2_min, x2_max)`` of the free surface."""
        a, b = self.polygon.segments()
        sel = [i for i, t in enumerate(self.polygon.tags) if t == SURFACE]
        xs = np.concatenate([a[sel, 0], b[sel, 0]])
        return float(xs.min()), float(xs.max())

    def default_h(self):
        return min(self.half_width, self.depth) / 32.0

    def mesh(self, target_h=None):
        return mesh_stepped_polygon(self.polygon, target_h or self.default_h())


def lambda_to_mu(lam):
    return 1.0 / (1.0 + lam)


def mu_to_lambda(mu):
    """``mu^{-1} - 1``; ``mu = 0`` maps to ``inf``."""
    return math.inf if mu == 0 else 1.0 / mu - 1.0


# ---------------------------------------------------------------- threshold

@dataclass
class ThresholdResult:
    lambda_gamma0: float
    mu_gamma0: float
    eigenfunction: np.ndarray | None
    method: str
    mesh: object = None
    forms: object = None
    reduction: object = None
    notes: list = field(default_factory=list)


def rectangle_threshold(l, depth):
    """``k tanh(k depth)`` with ``k = pi / (2 l)``."""
    k = math.pi / (2.0 * l)
    return k * math.tanh(k * depth)


def _section_system(section, target_h, dirichlet_tags):
    mesh = section.mesh(target_h)
    forms = assemble(mesh)
    pinned = mesh.vertices_with_tag(*dirichlet_tags) if dirichlet_tags else ()
    red = Reduction.build(mesh.n_vertices, ConstraintSet(dirichlet=pinned))
    return mesh, forms, red


def threshold(section: CrossSection, target_h=None, method="fem", tol=1e-9):
    """First Steklov eigenvalue of the half section with a Dirichlet cut (``eta = 0``).

    ``method="analytic"`` uses the separable formula and needs a rectangle.
    """
    if not section.half or SYMMETRY not in section.polygon.tags:
        raise InvalidGeometryError("the threshold needs a half section with a symmetry cut")
    if method == "analytic":
        if not section.is_rectangle:
            raise InvalidGeometryError("analytic threshold is only available for rectangular sections")
        lam = rectangle_threshold(section.half_width, section.depth)
        return ThresholdResult(lam, lambda_to_mu(lam), None, "analytic")
    if method != "fem":
        raise ValueError(f"unknown threshold method {method!r}")
    mesh, forms, red = _section_system(section, target_h, (SYMMETRY,))
    B = forms.boundary_mass[SURFACE]
    spec = solve_smallest(red.apply(forms.stiffness), red.apply(B), EigenRequest(k=1, tol=tol), reduction=red)
    lam = float(spec.values[0])
    return ThresholdResult(lam, lambda_to_mu(lam), spec.vectors[:, 0], "fem", mesh, forms, red,
                           ["finite elements overestimate the threshold"])


def full_section_first_value(section: CrossSection, target_h=None, tol=1e-9):
    """First Steklov eigenvalue without any Dirichlet cut (zero up to discretization)."""
    mesh, forms, red = _section_system(section, target_h, ())
    spec = solve_smallest(red.apply(forms.stiffness), red.apply(forms.boundary_mass[SURFACE]),
                          EigenRequest(k=1, tol=tol))
    return float(spec.values[0])


@dataclass
class TraceCheck:
    bound: float
    worst_ratio: float
    ratios: np.ndarray
    skipped: int

    @property
    def holds(self):
        return self.worst_ratio <= self.bound * 1.01


def trace_ratio(result: ThresholdResult, phi):
    """``||phi||^2 on the surface / ||grad phi||^2``; ``None`` for a zero field."""
    K = result.forms.stiffness
    B = result.forms.boundary_mass[SURFACE]
    energy = float(phi @ (K @ phi))
    if energy <= 0:
        return None
    return float(phi @ (B @ phi)) / energy


def trace_constant_check(section: CrossSection, result: ThresholdResult, samples=100, seed=0, fields=()):
    """Trace inequality with constant ``1/lambda`` on random fields vanishing on the cut.

    Random fields mix nodal noise with smooth trigonometric sums; ``fields`` adds
    explicit nodal fields (their constrained part is used). Zero fields are skipped.
    """
    if result.forms is None:
        result = threshold(section)
    rng = np.random.default_rng(seed)
    red = result.reduction
    xy = result.mesh.vertices
    l, d = section.half_width, section.depth
    cands = [np.asarray(f, dtype=float) for f in fields]
    for s in range(samples):
        if s % 2 == 0:
            cands.append(rng.standard_normal(len(xy)))
        else:
            f = np.zeros(len(xy))
            for _ in range(4):
                p, q = rng.integers(0, 4, size=2)
                f += rng.standard_normal() * np.cos(p * np.pi * xy[:, 0] / l + rng.uniform(0, np.pi)) \
                    * np.cos(q * np.pi * xy[:, 1] / d)
            cands.append(f)
    ratios, skipped = [], 0
    for f in cands:
        f = red.expand(red.restrict(f))
        r = trace_ratio(result, f)
        if r is None:
            skipped += 1
        else:
            ratios.append(r)
    ratios = np.asarray(ratios)
    worst = float(ratios.max()) if len(ratios) else float("nan")
    return TraceCheck(1.0 / result.lambda_gamma0, worst, ratios, skipped)


# ---------------------------------------------------------------- dispersion

@dataclass
class DispersionCurve:
    """``eta_sq[i, k]`` is the (k+1)-th eigenvalue of ``Q(lambda_i)`` against the domain mass."""

    lambdas: np.ndarray
    eta_sq: np.ndarray
    section: CrossSection

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["lambda", "k", "eta_sq"])
            for lam, row in zip(self.lambdas, self.eta_sq):
                for k, v in enumerate(row, start=1):
                    wr.writerow([repr(float(lam)), k, repr(float(v))])


def dispersion(section: CrossSection, lambda_grid, modes=1, target_h=None, tol=1e-9):
    """Eigenvalues ``eta_k(lambda)^2`` of ``-Lap phi + eta^2 phi = 0`` with the Steklov condition.

    For each ``lambda`` these are the eigenvalues of the form
    ``(grad phi, grad psi) - lambda (phi, psi)_surface`` against the section mass,
    so ``eta_1^2 < 0`` once ``lambda`` passes the first Steklov eigenvalue.
    """
    lams = np.asarray(lambda_grid, dtype=float)
    if np.any(lams < 0):
        raise ValueError("lambda values must be non-negative")
    dirichlet = (SYMMETRY,) if section.half else ()
    mesh, forms, red = _section_system(section, target_h, dirichlet)
    K = red.apply(forms.stiffness)
    B = red.apply(forms.boundary_mass[SURFACE])
    M = red.apply(forms.mass)
    out = np.empty((len(lams), modes))
    for i, lam in enumerate(lams):
        spec = solve_smallest((K - lam * B).tocsr(), M, EigenRequest(k=modes, tol=tol))
        out[i] = spec.values
    return DispersionCurve(lams, out, section)


def rectangle_kappa(lam, depth):
    """Root ``kappa >= 0`` of ``kappa tanh(kappa depth) = lam``."""
    if lam == 0:
        return 0.0
    f = lambda k: k * math.tanh(k * depth) - lam  # noqa: E731
    hi = max(lam, math.sqrt(lam / depth)) + 1.0
    while f(hi) < 0:
        hi *= 2.0
    return brentq(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


# ---------------------------------------------------------------- Weyl sequence diagnostic

_M_MIN, _M_MAX = 1, 52
_GL = np.polynomial.legendre.leggauss(64)


def _gauss(f, a, b, pieces=8):
    """Composite Gauss-Legendre integral of a vectorized ``f`` over ``[a, b]``."""
    x, w = _GL
    edges = np.linspace(a, b, pieces + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        h = 0.5 * (hi - lo)
        total += h * float(np.dot(w, f(lo + h * (x + 1.0))))
    return total


def _chi(t, d=0):
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    tc = np.clip(t, 0, 1)
    if d == 0:
        return smoothstep(t)
    if d == 1:
        return np.where(inside, 30 * tc ** 2 * (1 - tc) ** 2, 0.0)
    return np.where(inside, 60 * tc * (1 - tc) * (1 - 2 * tc), 0.0)


@dataclass
class WeylTerm:
    m: int
    lam: float
    kappa: float
    a_m: float
    residual: float
    support: tuple
    l2_sq: float


def _check_m(m):
    if int(m) != m or not (_M_MIN <= m <= _M_MAX):
        raise RangeGuardError(f"m={m} is outside the supported range [{_M_MIN}, {_M_MAX}]")


def weyl_term(section: CrossSection, lam, m):
    """Normalized standing wave ``a_m X_m(kappa x1 / 2pi) sin(kappa x1) phi_1`` and its residual.

    ``phi_1 = cosh(kappa (x3 + depth))`` solves the full rectangular section problem
    with ``eta_1^2 = -kappa^2``. The residual is ``mu ||Lap Phi||`` over the two
    transition zones, where ``mu = 1/(1 + lam)``; ``a_m`` makes the energy plus
    surface norm equal to one. For ``lam = 0`` the wave is ``a_m X_m(x1)``.
    Integrals in ``x1`` use the local variable ``t = kappa x1 / (2 pi) - 2^m``, so
    large ``m`` costs nothing and loses no precision.
    """
    _check_m(m)
    if section.half or not section.is_rectangle:
        raise InvalidGeometryError("the Weyl diagnostic needs a full rectangular section")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    l, D = section.half_width, section.depth
    width = 2.0 * l
    plateau = 2.0 ** m - 2.0
    mu = lambda_to_mu(lam)
    if lam == 0:
        kappa = 0.0
        area = width * D
        # X_m(x1): transitions on [2^m, 2^m + 1] (rising) and its mirror (falling)
        trans_X2 = 2 * _gauss(lambda t: _chi(t) ** 2, 0, 1)
        trans_dX2 = 2 * _gauss(lambda t: _chi(t, 1) ** 2, 0, 1)
        trans_ddX2 = 2 * _gauss(lambda t: _chi(t, 2) ** 2, 0, 1)
        norm2 = area * trans_dX2 + width * (plateau + trans_X2)
        a = 1.0 / math.sqrt(norm2)
        lap2 = area * trans_ddX2
        return WeylTerm(m, lam, 0.0, a, mu * a * math.sqrt(lap2), (2.0 ** m, 2.0 ** (m + 1)),
                        a * a * area * (plateau + trans_X2))

    kappa = rectangle_kappa(lam, D)
    c = kappa / (2 * math.pi)  # dt/dx1
    s2kd = math.sinh(2 * kappa * D)
    phi2_G = width * (D / 2 + s2kd / (4 * kappa))
    dphi2_G = width * kappa ** 2 * (s2kd / (4 * kappa) - D / 2)
    phi2_top = width * math.cosh(kappa * D) ** 2

    # x1 profile g = X(t) sin(2 pi t) on the rising transition t in [0, 1]; the falling one mirrors it
    def g(t):
        return _chi(t) * np.sin(2 * np.pi * t)

    def dg(t):  # d/dx1
        return c * _chi(t, 1) * np.sin(2 * np.pi * t) + kappa * _chi(t) * np.cos(2 * np.pi * t)

    def lap(t):  # x1-part of Lap Phi / phi_1 after the kappa^2 cancellation
        return c ** 2 * _chi(t, 2) * np.sin(2 * np.pi * t) + 2 * c * kappa * _chi(t, 1) * np.cos(2 * np.pi * t)

    dx = 1.0 / c
    g2 = 2 * dx * _gauss(lambda t: g(t) ** 2, 0, 1) + plateau * dx / 2
    dg2 = 2 * dx * _gauss(lambda t: dg(t) ** 2, 0, 1) + plateau * dx * kappa ** 2 / 2
    lap2 = 2 * dx * _gauss(lambda t: lap(t) ** 2, 0, 1)
    norm2 = dg2 * phi2_G + g2 * dphi2_G + g2 * phi2_top
    a = 1.0 / math.sqrt(norm2)
    residual = mu * a * math.sqrt(lap2 * phi2_G)
    support = (2.0 ** m / c, 2.0 ** (m + 1) / c)
    return WeylTerm(m, lam, kappa, a, residual, support, a * a * g2 * phi2_G)


def weyl_residual(section: CrossSection, lam, m):
    return weyl_term(section, lam, m).residual


def weyl_overlap(section: CrossSection, lam, m, n):
    """Integral of ``Phi^(m) Phi^(n)`` over the canal; zero unless the supports overlap."""
    tm, tn = weyl_term(section, lam, m), weyl_term(section, lam, n)
    lo = max(tm.support[0], tn.support[0])
    hi = min(tm.support[1], tn.support[1])
    if hi <= lo:
        return 0.0
    if m != n:
        raise AssertionError("distinct Weyl terms must have disjoint supports")
    return tm.l2_sq
