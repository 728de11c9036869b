"""Smallest eigenpairs of ``K u = lambda M u`` with symmetric PSD ``K`` and ``M``.

``M`` may be singular (boundary mass of a Steklov problem). Its kernel is read off
the zero diagonal; eigenpairs are sought in the complementary range only, since
every iterate of ``(K - sigma M)^{-1} M`` is already determined by range values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, InsufficientRankError, SolverError

CLUSTER_RTOL = 1e-8
_DENSE_LIMIT = 400
_SINGULAR_PIVOT = 1e-11  # relative pivot size treated as a singular shift


@dataclass(frozen=True)
class EigenRequest:
    k: int
    shift: float = 0.0
    tol: float = 1e-9
    max_iter: int = 500
    block: int | None = None
    seed: int = 0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class Spectrum:
    """Ascending eigenvalues with M-orthonormal eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    gram: np.ndarray
    clusters: list = field(default_factory=list)
    shift: float = 0.0
    iterations: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)

    def cluster_of(self, i):
        for c in self.clusters:
            if i in c:
                return c
        return (i,)

    def is_simple(self, i):
        return len(self.cluster_of(i)) == 1


def find_clusters(values, rtol=CLUSTER_RTOL):
    """Groups of consecutive indices whose values agree within ``rtol`` relative."""
    groups, cur = [], [0]
    for i in range(1, len(values)):
        scale = max(abs(values[i]), abs(values[i - 1]), np.finfo(float).tiny)
        if abs(values[i] - values[i - 1]) <= rtol * scale:
            cur.append(i)
        else:
            groups.append(tuple(cur))
            cur = [i]
    groups.append(tuple(cur))
    return [g for g in groups if len(g) > 1]


def _factor(A):
    """Symmetric-mode LU without row pivoting, so U's diagonal carries the inertia."""
    return spla.splu(sp.csc_matrix(A), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                     options=dict(SymmetricMode=True))


def _negative_pivots(lu, rtol=0.0):
    """Negative pivot count, or ``None`` if some pivot is zero (relative to ``rtol``)."""
    d = lu.U.diagonal()
    if not np.all(np.isfinite(d)):
        return None
    a = np.abs(d)
    if np.any(a <= rtol * a.max()) or np.any(a == 0):
        return None
    return int(np.count_nonzero(d < 0))


def inertia_count(K, M, sigma):
    """Number of eigenvalues of ``K u = lambda M u`` below ``sigma`` (Sylvester's law)."""
    try:
        lu = _factor(K - sigma * M)
    except RuntimeError as exc:
        raise SolverError(f"shifted matrix is singular at sigma={sigma}") from exc
    neg = _negative_pivots(lu)
    if neg is None:
        raise SolverError(f"shifted matrix is singular at sigma={sigma}")
    return neg


def _safe_factor(K, M, sigma):
    """Factor ``K - sigma M``, lowering ``sigma`` until it sits below the spectrum."""
    delta = max(abs(sigma), 1e-3 * _pencil_scale(K, M), 1e-12)
    for _ in range(60):
        try:
            lu = _factor(K - sigma * M)
            neg = _negative_pivots(lu, _SINGULAR_PIVOT)
        except RuntimeError:
            neg = None
        if neg == 0:
            return lu, sigma
        sigma -= delta
        delta *= 2.0
    raise SolverError("could not find a shift with a positive definite shifted matrix")


def _canonical_sign(X):
    idx = np.argmax(np.abs(X), axis=0)
    s = np.sign(X[idx, np.arange(X.shape[1])])
    s[s == 0] = 1.0
    return X * s


def _residuals(K, M, X, s, sigma=0.0):
    """``||K x - s M x||`` relative to ``max(||K x||, ||(K - sigma M) x||)``.

    The second term only matters for (near) zero eigenvalues, where ``||K x||``
    itself is at roundoff level; ``sigma`` is then a negative reference shift.
    """
    KX = K @ X
    MX = M @ X
    R = KX - MX * s
    num = np.linalg.norm(R, axis=0)
    den = np.maximum(np.linalg.norm(KX, axis=0), np.linalg.norm(KX - sigma * MX, axis=0))
    den = np.where(den > 0, den, 1.0)
    return num / den


def _pencil_scale(K, M):
    trM = abs(M.diagonal()).sum()
    return abs(K.diagonal()).sum() / max(trM, np.finfo(float).tiny)


def _finish(K, M, X, s, req, sigma, iterations, reduction, meta):
    norms = np.sqrt(np.einsum("ij,ij->j", X, M @ X))
    X = _canonical_sign(X / norms)
    res = _residuals(K, M, X, s, _reference_shift(K, M, s, sigma))
    gram = X.T @ (M @ X)
    full = reduction.expand(X) if reduction is not None else X
    return Spectrum(np.asarray(s, dtype=float), full, res, gram, find_clusters(s), sigma, iterations, meta)


def _reference_shift(K, M, s, sigma):
    """Zero unless some eigenvalue is tiny on the pencil's scale; then a shift below it."""
    scale = 1e-3 * _pencil_scale(K, M)
    if np.min(np.abs(s)) >= scale:
        return 0.0
    return min(sigma, -scale)


def _solve_dense(K, M, req, kernel, reduction):
    Kd = K.toarray() if sp.issparse(K) else np.asarray(K, dtype=float)
    Md = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    rng_idx = np.flatnonzero(~kernel)
    ker_idx = np.flatnonzero(kernel)
    Krr = Kd[np.ix_(rng_idx, rng_idx)]
    if len(ker_idx):
        Kzz = Kd[np.ix_(ker_idx, ker_idx)]
        Kzr = Kd[np.ix_(ker_idx, rng_idx)]
        try:
            cho = la.cho_factor(Kzz)
        except la.LinAlgError as exc:
            raise SolverError("stiffness is singular on the kernel of the mass form") from exc
        ext = -la.cho_solve(cho, Kzr)
        S = Krr + Kzr.T @ ext
    else:
        S = Krr
    S = 0.5 * (S + S.T)
    Mrr = Md[np.ix_(rng_idx, rng_idx)]
    try:
        w, V = la.eigh(S, Mrr, subset_by_index=(0, req.k - 1))
    except la.LinAlgError as exc:
        raise SolverError(f"dense eigensolve failed: {exc}") from exc
    X = np.zeros((K.shape[0], req.k))
    X[rng_idx] = V
    if len(ker_idx):
        X[ker_idx] = ext @ V
    Ks = sp.csr_matrix(Kd)
    Ms = sp.csr_matrix(Md)
    return _finish(Ks, Ms, X, w, req, req.shift, 1, reduction, {"method": "dense"})


def solve_smallest(K, M, req=None, reduction=None, **kwargs):
    """The ``req.k`` smallest eigenpairs of ``K u = lambda M u`` restricted to the range of ``M``.

    ``reduction`` (from :mod:`roughcanal.fem.constraints`) expands eigenvectors to
    full-mesh fields. Residuals are ``||K x - lambda M x|| / ||K x||``.
    """
    req = req or EigenRequest(**kwargs)
    K = sp.csr_matrix(K, dtype=float)
    M = sp.csr_matrix(M, dtype=float)
    n = K.shape[0]
    if K.shape != (n, n) or M.shape != (n, n):
        raise ValueError("K and M must be square matrices of the same size")
    kernel = M.diagonal() == 0
    rank = int(np.count_nonzero(~kernel))
    if req.k > rank:
        raise InsufficientRankError(f"requested k={req.k} modes but the mass form has rank {rank}")
    if n <= _DENSE_LIMIT:
        spec = _solve_dense(K, M, req, kernel, reduction)
        _check(spec, req)
        return spec

    lu, sigma = _safe_factor(K, M, float(req.shift))
    A = (K - sigma * M).tocsr()
    p = req.block or min(rank, max(2 * req.k, req.k + 8))
    p = max(min(p, rank), req.k)
    rng = np.random.default_rng(req.seed)
    X = rng.standard_normal((n, p))
    X = lu.solve(M @ X)
    res = np.full(req.k, np.inf)
    s = None
    for it in range(1, req.max_iter + 1):
        Y = lu.solve(M @ X)
        Y, _ = np.linalg.qr(Y)
        GA = Y.T @ (A @ Y)
        GM = Y.T @ (M @ Y)
        GA = 0.5 * (GA + GA.T)
        GM = 0.5 * (GM + GM.T)
        try:
            theta, C = la.eigh(GM, GA)
        except la.LinAlgError as exc:
            raise SolverError(f"Rayleigh-Ritz step failed: {exc}") from exc
        order = np.argsort(theta)[::-1]
        theta, C = theta[order], C[:, order]
        X = Y @ C
        if np.any(theta[:req.k] <= 0):
            continue
        s = sigma + 1.0 / theta[:req.k]
        res = _residuals(K, M, X[:, :req.k], s, _reference_shift(K, M, s, sigma))
        if np.all(res <= req.tol):
            spec = _finish(K, M, X[:, :req.k], s, req, sigma, it, reduction, {"method": "subspace", "block": p})
            _check(spec, req)
            return spec
    raise ConvergenceError(
        f"subspace iteration did not converge in {req.max_iter} iterations "
        f"(max residual {np.max(res):.3e} > tol {req.tol:.1e})", residual=float(np.max(res)))


def _check(spec, req):
    if np.any(spec.residuals > max(req.tol, 1e-12) * 10):
        raise ConvergenceError(
            f"eigenpair residual {spec.residuals.max():.3e} exceeds tolerance {req.tol:.1e}",
            residual=float(spec.residuals.max()))
