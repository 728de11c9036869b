"""Dirichlet and periodic constraints imposed by a 0/1 prolongation ``P``.

A reduced form is ``P^T A P``; reduced vectors expand to full-mesh fields as ``P x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import EmptySystemError, InvalidGeometryError


@dataclass(frozen=True)
class ConstraintSet:
    dirichlet: frozenset = frozenset()
    periodic: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "dirichlet", frozenset(int(i) for i in self.dirichlet))
        object.__setattr__(self, "periodic", {int(s): int(m) for s, m in dict(self.periodic).items()})
        clash = self.dirichlet & set(self.periodic)
        if clash:
            raise InvalidGeometryError(f"dofs {sorted(clash)[:5]} are both Dirichlet and periodic slaves")
        self.resolved_masters()

    @classmethod
    def from_pairs(cls, dirichlet=(), pairs=()):
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        return cls(frozenset(np.asarray(dirichlet, dtype=np.int64).tolist()),
                   dict(zip(pairs[:, 0].tolist(), pairs[:, 1].tolist())))

    def resolved_masters(self):
        """Follow slave chains to their final master; raises on cycles."""
        out = {}
        for s in self.periodic:
            seen = {s}
            m = self.periodic[s]
            while m in self.periodic:
                if m in seen:
                    raise InvalidGeometryError(f"periodic map has a cycle through dof {m}")
                seen.add(m)
                m = self.periodic[m]
            out[s] = m
        return out


@dataclass(frozen=True)
class Reduction:
    """Index map between full-mesh dofs and reduced unknowns (``-1`` marks pinned dofs)."""

    index: np.ndarray
    n_free: int

    @classmethod
    def build(cls, n, constraints=None):
        constraints = constraints or ConstraintSet()
        idx = np.arange(n)
        for s, m in constraints.resolved_masters().items():
            if not (0 <= s < n and 0 <= m < n):
                raise InvalidGeometryError(f"periodic pair ({s}, {m}) out of range for {n} dofs")
            idx[s] = m
        pinned = np.zeros(n, dtype=bool)
        if constraints.dirichlet:
            d = np.fromiter(constraints.dirichlet, dtype=np.int64)
            if d.min() < 0 or d.max() >= n:
                raise InvalidGeometryError("Dirichlet dof out of range")
            pinned[d] = True
        pinned = pinned[idx]
        masters = np.unique(idx[~pinned])
        if len(masters) == 0:
            raise EmptySystemError("constraints pin every degree of freedom")
        lookup = np.full(n, -1, dtype=np.int64)
        lookup[masters] = np.arange(len(masters))
        index = np.where(pinned, -1, lookup[idx])
        index.setflags(write=False)
        return cls(index, len(masters))

    @property
    def n_full(self):
        return len(self.index)

    @property
    def prolongation(self):
        rows = np.flatnonzero(self.index >= 0)
        return sp.csr_matrix((np.ones(len(rows)), (rows, self.index[rows])), shape=(self.n_full, self.n_free))

    def apply(self, A):
        P = self.prolongation
        return (P.T @ A @ P).tocsr()

    def rhs(self, f):
        return self.prolongation.T @ f

    def expand(self, x):
        x = np.asarray(x)
        out = np.zeros((self.n_full,) + x.shape[1:], dtype=x.dtype)
        free = self.index >= 0
        out[free] = x[self.index[free]]
        return out

    def restrict(self, u):
        """Reduced coordinates of a full field that already satisfies the constraints."""
        u = np.asarray(u)
        free = np.flatnonzero(self.index >= 0)
        out = np.zeros((self.n_free,) + u.shape[1:], dtype=u.dtype)
        out[self.index[free]] = u[free]
        return out


@dataclass(frozen=True)
class ReducedForm:
    matrix: sp.csr_matrix
    reduction: Reduction

    def expand(self, x):
        return self.reduction.expand(x)


def reduce(form, constraints=None):
    """Fold periodic slaves onto masters and drop Dirichlet rows/columns."""
    red = Reduction.build(form.shape[0], constraints)
    return ReducedForm(red.apply(form), red)
