"""Risk certificates for scenario programs and scenario compression.

The two-sided bound on the violation (or compression) probability is obtained
from the unit level set of

    Psi_{k,beta}(a) = beta/(2N) * sum_{t=k}^{N-1} C(t,k)/C(N,k) (1-a)^{-(N-t)}
                    + beta/(6N) * sum_{t=N+1}^{4N} C(t,k)/C(N,k) (1-a)^{t-N}

which is convex on (-inf, 1). For k < N it crosses 1 twice, at a_lo < a_hi, and
the certificate is [max(0, a_lo), a_hi]. For k = N only the second sum remains,
there is a single crossing and the upper bound is 1.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DegenerateWarning, DomainError, RootBracketFailure
from .numerics import find_root_bisect, log_binom, logsumexp

ROWGEN_MIN_ROWS = 20_000
DUAL_ZERO = 1e-9
KINDS = ("solution", "compression", "classical")


@dataclass(frozen=True)
class RiskCertificate:
    kind: str
    k: int
    N: int
    beta: float
    eps_lower: float
    eps_upper: float

    def to_dict(self) -> dict:
        return asdict(self)

    def contains(self, rate: float) -> bool:
        return self.eps_lower <= rate <= self.eps_upper


@dataclass
class ComplexityReport:
    s_star: int
    support: list[int]
    n_solves: int
    candidates: list[int] = field(default_factory=list)
    degenerate: bool = False


def _check_kN(k, N, beta):
    if not (isinstance(k, (int, np.integer)) and isinstance(N, (int, np.integer))):
        raise DomainError("k and N must be integers")
    if N < 1 or not 0 <= k <= N:
        raise DomainError(f"need 0 <= k <= N and N >= 1, got k={k}, N={N}")
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta}")


@lru_cache(maxsize=4096)
def _psi_terms(k: int, N: int, beta: float):
    """Log-weights and exponents of the two sums; independent of alpha."""
    lbN = float(log_binom(N, k))
    parts_w, parts_p = [], []
    if k < N:
        t = np.arange(k, N)
        parts_w.append(math.log(beta / (2 * N)) + log_binom(t, k) - lbN)
        parts_p.append(-(N - t).astype(float))
    t = np.arange(N + 1, 4 * N + 1)
    parts_w.append(math.log(beta / (6 * N)) + log_binom(t, k) - lbN)
    parts_p.append((t - N).astype(float))
    return np.concatenate(parts_w), np.concatenate(parts_p)


def log_psi(k: int, beta: float, alpha: float, N: int) -> float:
    _check_kN(k, N, beta)
    if not alpha < 1.0:
        raise DomainError(f"alpha must be < 1, got {alpha}")
    w, p = _psi_terms(int(k), int(N), float(beta))
    return logsumexp(w + p * math.log1p(-alpha))


def psi(k: int, beta: float, alpha: float, N: int) -> float:
    """Psi_{k,beta}(alpha); may overflow to inf far from the roots."""
    lp = log_psi(k, beta, alpha, N)
    return math.exp(lp) if lp < 709.0 else math.inf


def _alpha_grid():
    neg = -np.geomspace(10.0, 1e-10, 300)
    pos = 1.0 - np.geomspace(1.0, 1e-12, 600)[1:]
    return np.concatenate([neg, [0.0], pos])


_GRID = _alpha_grid()


@lru_cache(maxsize=4096)
def epsilon_bounds(k: int, N: int, beta: float, tol: float = 1e-12) -> tuple[float, float]:
    """Two-sided risk bounds (eps_lower, eps_upper) at complexity k."""
    _check_kN(k, N, beta)
    k, N = int(k), int(N)

    def g(a):
        return log_psi(k, beta, a, N)

    vals = np.array([g(a) for a in _GRID])
    i = int(np.argmin(vals))
    if k == N:
        # Psi decreasing in alpha: single crossing
        if vals[-1] > 0:
            raise RootBracketFailure("Psi stays above 1 for k = N")
        lo = find_root_bisect(g, float(_GRID[0]), float(_GRID[-1]), tol)
        return max(0.0, lo), 1.0
    a_min = float(_GRID[i])
    if vals[i] >= 0:
        # refine the minimum between neighbours before giving up
        left = float(_GRID[max(i - 1, 0)])
        right = float(_GRID[min(i + 1, len(_GRID) - 1)])
        for _ in range(200):
            m1 = left + (right - left) / 3
            m2 = right - (right - left) / 3
            if g(m1) < g(m2):
                right = m2
            else:
                left = m1
        a_min = 0.5 * (left + right)
        if g(a_min) >= 0:
            raise RootBracketFailure(f"Psi_(k={k}) never drops below 1")
    if vals[0] <= 0 or vals[-1] <= 0:
        raise RootBracketFailure("scan grid does not bracket both roots")
    lo = find_root_bisect(g, float(_GRID[0]), a_min, tol)
    hi = find_root_bisect(g, a_min, float(_GRID[-1]), tol)
    return max(0.0, lo), hi


def _log_beta_tail(N: int, h: int, eps: float) -> float:
    """log sum_{i<h} C(N,i) eps^i (1-eps)^(N-i)."""
    if eps <= 0.0:
        return 0.0
    if eps >= 1.0:
        return -math.inf
    i = np.arange(h)
    return logsumexp(log_binom(N, i) + i * math.log(eps) + (N - i) * math.log1p(-eps))


def classical_epsilon(N: int, h: int, beta: float, tol: float = 1e-15) -> float:
    """Smallest eps whose Beta(h, N-h+1) tail mass is at most beta."""
    if not (1 <= h <= N) or not 0.0 < beta < 1.0:
        raise DomainError(f"need 1 <= h <= N and beta in (0,1), got h={h}, N={N}, beta={beta}")
    lb = math.log(beta)
    return find_root_bisect(lambda e: _log_beta_tail(N, h, e) - lb, 0.0, 1.0, tol)


def certify(kind: str, k: int, N: int, beta: float) -> RiskCertificate:
    if kind not in KINDS:
        raise DomainError(f"unknown certificate kind {kind!r}")
    if kind == "classical":
        return RiskCertificate(kind, int(k), int(N), float(beta), 0.0, classical_epsilon(N, k, beta))
    lo, hi = epsilon_bounds(int(k), int(N), float(beta))
    return RiskCertificate(kind, int(k), int(N), float(beta), lo, hi)


def solution_complexity(problem, solve=None, base=None, screen_active: bool = True,
                        rtol: float = 1e-7, check_degeneracy: bool = True,
                        rowgen: bool | None = None) -> ComplexityReport:
    """Count support scenarios by leave-one-out re-solves.

    ``problem`` is an :class:`~sced_compress.lp.LPProblem` whose scenario rows
    carry ``("scenario", i)`` group tags. Scenario i is of support when dropping
    its rows lowers the optimal cost by more than ``rtol * |cost|``.

    With ``screen_active`` only scenarios owning a row that is active at the base
    optimum and carries a nonzero multiplier are re-solved. Dropping rows whose
    multipliers vanish keeps the KKT conditions of the base optimum intact, so
    the other scenarios cannot be of support.

    Large problems re-solve by row generation seeded with the other candidates
    (exact, see :func:`~sced_compress.lp.solve_lp_rowgen`); ``rowgen`` forces
    the choice.
    """
    from .lp import remove_rows, solve_lp, solve_lp_rowgen  # local: lp imports nothing from here

    if rowgen is None:
        rowgen = solve is None and problem.m > ROWGEN_MIN_ROWS
    solve = solve or solve_lp
    if base is None:
        base = solve_lp_rowgen(problem) if rowgen else solve(problem)
    if base.status != "optimal":
        raise DomainError(f"base problem is {base.status}")
    cost = base.objective
    thresh = rtol * max(abs(cost), 1.0)
    groups = problem.scenario_groups()
    if screen_active:
        keep = problem.active_rows(base.x)
        if base.duals is not None:
            # zero multipliers on every row of a group: x* stays optimal without it
            d = np.abs(base.duals)
            keep &= d > DUAL_ZERO * max(1.0, float(d.max(initial=0.0)))
        gids = np.unique(problem.row_group[keep])
        cand = sorted(problem.groups[k][1] for k in gids if problem.groups[k][0] == "scenario")
    else:
        cand = sorted(g[1] for g in groups)
    support, n_solves = [], 0
    for i in cand:
        reduced = remove_rows(problem, ("scenario", i))
        if rowgen:
            sol = solve_lp_rowgen(reduced, [("scenario", j) for j in cand if j != i])
        else:
            sol = solve(reduced)
        n_solves += 1
        if sol.status == "unbounded" or (sol.status == "optimal" and sol.objective < cost - thresh):
            support.append(i)
    degenerate = False
    if check_degeneracy:
        drop = [g for g in groups if g[1] not in set(support)]
        if drop:
            sol = solve(remove_rows(problem, *drop))
            n_solves += 1
            if sol.status != "optimal" or abs(sol.objective - cost) > thresh:
                degenerate = True
                warnings.warn(
                    "cost changes when all non-support scenarios are removed together; "
                    "the problem is degenerate and the support count is unreliable",
                    DegenerateWarning, stacklevel=2)
    return ComplexityReport(len(support), support, n_solves, cand, degenerate)
