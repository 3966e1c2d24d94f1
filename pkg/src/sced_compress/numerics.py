"""Small dense linear-algebra and scalar kernels.

Matrices are plain 2-D ``numpy`` float arrays. The LU routine is a textbook
partial-pivoting factorization; it is used for the PTDF computation and for
rank checks, where the matrices are at most a few hundred rows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NoSignChange, SingularMatrix

PIVOT_RTOL = 1e-12


@dataclass(frozen=True)
class LUFactorization:
    """Packed factors of ``P @ A = L @ U``.

    ``lu`` holds U on and above the diagonal and the unit-lower L below it.
    ``perm[i]`` is the row of A that ended up in row i.
    """

    lu: np.ndarray
    perm: np.ndarray

    @property
    def n(self) -> int:
        return self.lu.shape[0]

    @property
    def L(self) -> np.ndarray:
        return np.tril(self.lu, -1) + np.eye(self.n)

    @property
    def U(self) -> np.ndarray:
        return np.triu(self.lu)

    @property
    def P(self) -> np.ndarray:
        """Permutation matrix with ``P.T @ L @ U == A``."""
        p = np.zeros((self.n, self.n))
        p[np.arange(self.n), self.perm] = 1.0
        return p


def as_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def lu_factor(m, rtol: float = PIVOT_RTOL) -> LUFactorization:
    """Gaussian elimination with partial pivoting.

    Raises SingularMatrix when a pivot falls below ``rtol`` times the largest
    row norm (infinity norm) of the input.
    """
    a = as_matrix(m)
    n, k = a.shape
    if n != k:
        raise DimensionMismatch(f"lu_factor needs a square matrix, got {a.shape}")
    scale = np.abs(a).sum(axis=1).max() if n else 0.0
    thresh = rtol * scale
    perm = np.arange(n)
    for j in range(n):
        p = j + int(np.argmax(np.abs(a[j:, j])))
        if abs(a[p, j]) <= thresh or a[p, j] == 0.0:
            raise SingularMatrix(f"pivot {j} below tolerance ({abs(a[p, j]):.3e})")
        if p != j:
            a[[j, p]] = a[[p, j]]
            perm[[j, p]] = perm[[p, j]]
        a[j + 1:, j] /= a[j, j]
        a[j + 1:, j + 1:] -= np.outer(a[j + 1:, j], a[j, j + 1:])
    return LUFactorization(a, perm)


def lu_solve(f: LUFactorization, rhs) -> np.ndarray:
    """Solve ``A x = rhs`` given ``f = lu_factor(A)``; rhs may be a matrix."""
    b = np.asarray(rhs, dtype=float)
    if b.shape[0] != f.n:
        raise DimensionMismatch(f"rhs has {b.shape[0]} rows, factor has {f.n}")
    lu = f.lu
    y = b[f.perm].copy()
    for i in range(f.n):
        y[i] -= lu[i, :i] @ y[:i]
    for i in range(f.n - 1, -1, -1):
        y[i] = (y[i] - lu[i, i + 1:] @ y[i + 1:]) / lu[i, i]
    return y


def find_root_bisect(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 500) -> float:
    """Bisection on a bracketing interval ``[lo, hi]``."""
    if not lo < hi:
        raise ValueError("need lo < hi")
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise NoSignChange(f"f({lo})={flo:.3g} and f({hi})={fhi:.3g} have the same sign")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid in (lo, hi):
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


# log-space combinatorics -------------------------------------------------

def log_binom(n, k):
    """log C(n, k), vectorised over numpy arrays of n (k scalar or array)."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    n, k = np.broadcast_arrays(n, k)
    out = np.full(n.shape, -np.inf)
    ok = (k >= 0) & (k <= n)
    lg = np.vectorize(math.lgamma, otypes=[float])
    if ok.any():
        out[ok] = lg(n[ok] + 1) - lg(k[ok] + 1) - lg(n[ok] - k[ok] + 1)
    return out[()] if out.ndim == 0 else out


def logsumexp(x) -> float:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return -math.inf
    m = float(np.max(x))
    if not math.isfinite(m):
        return m
    return m + math.log(float(np.sum(np.exp(x - m))))
