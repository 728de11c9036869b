"""Geometric descriptions of the rough periodicity cell and the thin plate.

Lengths are dimensionless. The cell occupies ``sigma x (-h(eta), 0)`` where
``sigma = (-a1/2, a1/2) x (-a2/2, a2/2)`` and ``h`` is a depth profile
sampled on a uniform grid that includes both edges of ``sigma``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InconsistentScalingError, InvalidGeometryError

_TOL = 1e-12


def triangle_wave(t, period=1.0):
    """Mean-zero triangle wave with peak 1 at ``t = 0`` and trough -1 at ``t = +-period/2``."""
    s = np.mod(np.asarray(t, dtype=float) + 0.5 * period, period) - 0.5 * period
    return 1.0 - 4.0 * np.abs(s) / period


@dataclass(frozen=True)
class CellGeometry:
    """One periodicity cell of the rough layer.

    ``depth[i, j]`` is the depth at ``eta = (-a1/2 + i*a1/(n1-1), -a2/2 + j*a2/(n2-1))``.
    The first and last rows (and columns) must coincide so the profile is periodic.
    """

    a1: float
    a2: float
    H: float
    depth: np.ndarray = field(repr=False)

    def __post_init__(self):
        depth = np.array(self.depth, dtype=float)
        if not (self.a1 > 0 and self.a2 > 0):
            raise InvalidGeometryError(f"period lengths must be positive, got a1={self.a1}, a2={self.a2}")
        if not self.H > 0:
            raise InvalidGeometryError(f"maximal depth H must be positive, got {self.H}")
        if depth.ndim != 2 or min(depth.shape) < 2:
            raise InvalidGeometryError("depth profile must be a 2D grid with at least 2 samples per direction")
        if not np.all(np.isfinite(depth)) or depth.min() <= 0:
            raise InvalidGeometryError(f"depth profile must be positive, min is {depth.min()}")
        if depth.max() > self.H + _TOL:
            raise InvalidGeometryError(f"depth profile exceeds H={self.H} (max {depth.max()})")
        if np.abs(depth[0, :] - depth[-1, :]).max() > _TOL or np.abs(depth[:, 0] - depth[:, -1]).max() > _TOL:
            raise InvalidGeometryError("depth profile is not periodic: opposite edge samples differ")
        depth.setflags(write=False)
        object.__setattr__(self, "depth", depth)

    # constructors

    @classmethod
    def flat(cls, a1=1.0, a2=1.0, h=1.0, H=None):
        return cls(a1, a2, h if H is None else H, np.full((2, 2), float(h)))

    @classmethod
    def from_function(cls, func, a1=1.0, a2=1.0, H=None, n1=33, n2=33):
        """Sample ``func(eta1, eta2)`` on an ``n1 x n2`` grid (edges included)."""
        e1 = np.linspace(-a1 / 2, a1 / 2, n1)
        e2 = np.linspace(-a2 / 2, a2 / 2, n2)
        E1, E2 = np.meshgrid(e1, e2, indexing="ij")
        depth = np.broadcast_to(np.asarray(func(E1, E2), dtype=float), E1.shape).copy()
        # guard against round-off at the periodic seam
        depth[-1, :] = depth[0, :]
        depth[:, -1] = depth[:, 0]
        return cls(a1, a2, float(depth.max()) if H is None else H, depth)

    @classmethod
    def corrugated(cls, mean=0.5, amplitude=0.25, a1=1.0, a2=1.0, H=None, n1=5):
        """``h(eta1) = mean + amplitude * tri(eta1)``, invariant in ``eta2``.

        With ``n1 - 1`` divisible by 2 the kinks of the triangle wave are grid points,
        so the piecewise-linear profile is exact.
        """
        return cls.from_function(
            lambda e1, e2: mean + amplitude * triangle_wave(e1, a1),
            a1=a1, a2=a2, H=mean + abs(amplitude) if H is None else H, n1=n1, n2=2,
        )

    # queries

    @property
    def cover_area(self):
        return self.a1 * self.a2

    @property
    def shape(self):
        return self.depth.shape

    def volume(self):
        """Exact volume of the cell for the bilinear interpolant of the profile."""
        n1, n2 = self.depth.shape
        d = self.depth
        cell_means = 0.25 * (d[:-1, :-1] + d[1:, :-1] + d[:-1, 1:] + d[1:, 1:])
        return float(cell_means.sum() * self.a1 / (n1 - 1) * self.a2 / (n2 - 1))

    def depth_at(self, eta1, eta2):
        """Bilinear interpolation of the profile, periodically extended."""
        eta1 = np.asarray(eta1, dtype=float)
        eta2 = np.asarray(eta2, dtype=float)
        n1, n2 = self.depth.shape
        s1 = np.mod(eta1 + self.a1 / 2, self.a1) / self.a1 * (n1 - 1)
        s2 = np.mod(eta2 + self.a2 / 2, self.a2) / self.a2 * (n2 - 1)
        i = np.clip(np.floor(s1).astype(int), 0, n1 - 2)
        j = np.clip(np.floor(s2).astype(int), 0, n2 - 2)
        t1 = s1 - i
        t2 = s2 - j
        d = self.depth
        return ((1 - t1) * (1 - t2) * d[i, j] + t1 * (1 - t2) * d[i + 1, j]
                + (1 - t1) * t2 * d[i, j + 1] + t1 * t2 * d[i + 1, j + 1])

    def is_flat(self, direction=None):
        """True if the profile does not vary (optionally only along ``direction`` 1 or 2)."""
        d = self.depth
        if direction is None:
            return bool(np.ptp(d) <= _TOL)
        axis = direction - 1
        return bool(np.ptp(d, axis=axis).max() <= _TOL)

    # text grid format

    def to_text(self):
        n1, n2 = self.depth.shape
        lines = [f"{self.a1!r} {self.a2!r} {self.H!r} {n1} {n2}"]
        lines += [" ".join(repr(float(v)) for v in row) for row in self.depth]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        tokens = text.split()
        if len(tokens) < 5:
            raise InvalidGeometryError("cell profile file needs a header 'a1 a2 H nx ny'")
        a1, a2, H = (float(t) for t in tokens[:3])
        n1, n2 = int(tokens[3]), int(tokens[4])
        values = np.array([float(t) for t in tokens[5:]])
        if values.size != n1 * n2:
            raise InvalidGeometryError(f"expected {n1 * n2} depth samples, found {values.size}")
        return cls(a1, a2, H, values.reshape(n1, n2))

    def save(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path):
        return cls.from_text(Path(path).read_text())


def cell_count(A, a, eps):
    """Integer number of cells with ``A = eps * a * N``; raises if not admissible."""
    n = A / (eps * a)
    N = int(round(n))
    if N < 1 or abs(eps * a * N - A) > _TOL * max(1.0, abs(A)):
        raise InconsistentScalingError(
            f"eps={eps!r} is not admissible: A={A!r} is not an integer multiple of eps*a={eps * a!r}")
    return N


def snap_eps(A, a, eps):
    """Nearest admissible scale ``A / (a * N)`` to the requested ``eps``."""
    N = max(1, int(round(A / (a * eps))))
    return A / (a * N)


@dataclass(frozen=True)
class PlateGeometry:
    """Thin plate ``Omega_eps`` made of ``N1 x N2`` copies of the cell scaled by ``eps``.

    The cover is ``omega = (-A1/2, A1/2) x (-A2/2, A2/2)``.
    """

    cell: CellGeometry
    A1: float
    A2: float
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise InconsistentScalingError(f"eps must be positive, got {self.eps}")
        if not (self.A1 > 0 and self.A2 > 0):
            raise InvalidGeometryError(f"plate sides must be positive, got {self.A1}, {self.A2}")
        cell_count(self.A1, self.cell.a1, self.eps)
        cell_count(self.A2, self.cell.a2, self.eps)

    @classmethod
    def from_counts(cls, cell, eps, N1, N2):
        return cls(cell, eps * cell.a1 * N1, eps * cell.a2 * N2, eps)

    @property
    def N1(self):
        return cell_count(self.A1, self.cell.a1, self.eps)

    @property
    def N2(self):
        return cell_count(self.A2, self.cell.a2, self.eps)

    def with_eps(self, eps):
        return PlateGeometry(self.cell, self.A1, self.A2, eps)
