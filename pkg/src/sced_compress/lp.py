"""Linear programs with tagged constraint groups, and a two-phase simplex.

A problem is ``min c'x  s.t.  rows (<=, =, >=) rhs,  lower <= x <= upper``.
Every row belongs to a group tag; scenario rows are tagged ``("scenario", i)``
so support scenarios can be removed and re-solved as units.

``solve_lp`` runs a dense bounded-variable primal simplex (two phases, Bland's
rule, free variables kept nonbasic at zero instead of being split). Problems
too large for a dense tableau are handed to HiGHS through scipy.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import DimensionMismatch, NumericalBreakdown, UnknownGroup
from .numerics import lu_factor, lu_solve

DETERMINISTIC = ("deterministic",)
DUAL_AUX = ("dual-aux",)
BOX_AUX = ("box-aux",)

SENSES = ("<", "=", ">")

# largest row count solved with the dense simplex under method="auto"
DENSE_MAX_ROWS = 600
DENSE_MAX_COLS = 600


def scenario(i: int) -> tuple:
    return ("scenario", int(i))


def tag_str(tag: tuple) -> str:
    return ":".join(str(t) for t in tag)


@dataclass(frozen=True)
class LPProblem:
    c: np.ndarray
    A: sp.csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    row_group: np.ndarray
    groups: tuple
    var_blocks: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        m, n = self.A.shape
        if len(self.c) != n or len(self.lower) != n or len(self.upper) != n:
            raise DimensionMismatch("variable arrays do not match A")
        if len(self.sense) != m or len(self.rhs) != m or len(self.row_group) != m:
            raise DimensionMismatch("row arrays do not match A")
        if not np.all(np.isfinite(self.rhs)):
            raise ValueError("rhs must be finite")

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def group_of(self, row: int) -> tuple:
        return self.groups[self.row_group[row]]

    def rows_in(self, tag: tuple) -> np.ndarray:
        try:
            gid = self.groups.index(tag)
        except ValueError:
            raise UnknownGroup(tag_str(tag)) from None
        return np.flatnonzero(self.row_group == gid)

    def group_counts(self) -> dict:
        counts = np.bincount(self.row_group, minlength=len(self.groups))
        return {g: int(c) for g, c in zip(self.groups, counts)}

    def scenario_groups(self) -> list:
        present = set(np.unique(self.row_group).tolist())
        return [g for k, g in enumerate(self.groups) if g[0] == "scenario" and k in present]

    def block(self, x, name):
        return np.asarray(x)[self.var_blocks[name]]

    def activity(self, x) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=float)

    def violation(self, x) -> np.ndarray:
        """Per-row constraint violation (0 when satisfied)."""
        act = self.activity(x)
        v = np.zeros(self.m)
        le, eq, ge = (self.sense == s for s in SENSES)
        v[le] = np.maximum(act[le] - self.rhs[le], 0.0)
        v[ge] = np.maximum(self.rhs[ge] - act[ge], 0.0)
        v[eq] = np.abs(act[eq] - self.rhs[eq])
        return v

    def active_rows(self, x, tol: float = 1e-6) -> np.ndarray:
        act = self.activity(x)
        scale = 1.0 + np.abs(self.rhs)
        return np.abs(act - self.rhs) <= tol * scale

    def dump(self) -> str:
        """Human-readable listing of the problem, one row per line."""
        out = ["min " + _lin(self.c, range(self.n))]
        A = self.A.tocsr()
        for r in range(self.m):
            lo, hi = A.indptr[r], A.indptr[r + 1]
            op = {"<": "<=", "=": "=", ">": ">="}[self.sense[r]]
            out.append(f"r{r} [{tag_str(self.group_of(r))}]: "
                       f"{_lin(A.data[lo:hi], A.indices[lo:hi])} {op} {self.rhs[r]:.10g}")
        for j in range(self.n):
            out.append(f"{self.lower[j]:.10g} <= x{j} <= {self.upper[j]:.10g}")
        return "\n".join(out)


def _lin(coefs, idx) -> str:
    terms = [f"{c:+.10g} x{j}" for c, j in zip(coefs, idx) if c != 0]
    return " ".join(terms) if terms else "0"


class LPBuilder:
    """Incremental assembly of an LPProblem from COO triplets."""

    def __init__(self):
        self.c, self.lower, self.upper = [], [], []
        self.var_blocks = {}
        self.n = 0
        self._rows, self._cols, self._vals = [], [], []
        self.sense, self.rhs, self.row_group = [], [], []
        self.groups, self._gid = [], {}
        self.m = 0

    def add_vars(self, name, count, lower=0.0, upper=np.inf, cost=0.0) -> np.ndarray:
        idx = np.arange(self.n, self.n + count)
        self.c.append(np.broadcast_to(np.asarray(cost, float), (count,)))
        self.lower.append(np.broadcast_to(np.asarray(lower, float), (count,)))
        self.upper.append(np.broadcast_to(np.asarray(upper, float), (count,)))
        self.var_blocks[name] = slice(self.n, self.n + count)
        self.n += count
        return idx

    def _group_id(self, tag):
        if tag not in self._gid:
            self._gid[tag] = len(self.groups)
            self.groups.append(tag)
        return self._gid[tag]

    def add_rows(self, rows, cols, vals, sense, rhs, group):
        """Add ``len(rhs)`` rows; ``rows`` are local indices 0..len(rhs)-1."""
        rhs = np.atleast_1d(np.asarray(rhs, float))
        k = len(rhs)
        self._rows.append(np.asarray(rows, np.int64) + self.m)
        self._cols.append(np.asarray(cols, np.int64))
        self._vals.append(np.asarray(vals, float))
        self.sense.append(np.broadcast_to(np.asarray(sense), (k,)))
        self.rhs.append(rhs)
        self.row_group.append(np.full(k, self._group_id(group), np.int64))
        self.m += k

    def add_dense_rows(self, matrix, var_idx, sense, rhs, group):
        matrix = np.atleast_2d(np.asarray(matrix, float))
        r, c = np.nonzero(matrix)
        self.add_rows(r, np.asarray(var_idx)[c], matrix[r, c], sense, rhs, group)

    def build(self, **meta) -> LPProblem:
        cat = (lambda xs, dt=float: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dt))
        A = sp.csr_matrix((cat(self._vals), (cat(self._rows, np.int64), cat(self._cols, np.int64))),
                          shape=(self.m, self.n))
        A.sum_duplicates()
        sense = np.concatenate(self.sense).astype("<U1") if self.sense else np.zeros(0, "<U1")
        return LPProblem(cat(self.c), A, sense, cat(self.rhs), cat(self.lower), cat(self.upper),
                         cat(self.row_group, np.int64), tuple(self.groups), dict(self.var_blocks),
                         meta)


def _subset(p: LPProblem, keep: np.ndarray) -> LPProblem:
    return LPProblem(p.c, p.A[keep], p.sense[keep], p.rhs[keep], p.lower, p.upper,
                     p.row_group[keep], p.groups, p.var_blocks, p.meta)


def remove_rows(p: LPProblem, *groups) -> LPProblem:
    """Drop every row belonging to the given group tags."""
    gid = {g: k for k, g in enumerate(p.groups)}
    missing = [g for g in groups if g not in gid]
    if missing:
        raise UnknownGroup(tag_str(missing[0]))
    drop = np.isin(p.row_group, [gid[g] for g in groups])
    return _subset(p, ~drop)


def select_rows(p: LPProblem, *groups) -> LPProblem:
    keep = np.zeros(p.m, bool)
    for g in groups:
        keep[p.rows_in(g)] = True
    return _subset(p, keep)


def append_rows(p: LPProblem, q: LPProblem) -> LPProblem:
    """Rows of q appended to p (both over the same variables)."""
    if q.n != p.n:
        raise DimensionMismatch("problems have different variable counts")
    groups = list(p.groups)
    remap = []
    for g in q.groups:
        if g not in groups:
            groups.append(g)
        remap.append(groups.index(g))
    rg = np.concatenate([p.row_group, np.asarray(remap, np.int64)[q.row_group]])
    return LPProblem(p.c, sp.vstack([p.A, q.A]).tocsr(), np.concatenate([p.sense, q.sense]),
                     np.concatenate([p.rhs, q.rhs]), p.lower, p.upper, rg, tuple(groups),
                     p.var_blocks, p.meta)


def with_objective(p: LPProblem, c) -> LPProblem:
    return LPProblem(np.asarray(c, float), p.A, p.sense, p.rhs, p.lower, p.upper,
                     p.row_group, p.groups, p.var_blocks, p.meta)


@dataclass
class LPSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = np.nan
    activity: np.ndarray | None = None
    basis: tuple | None = None
    duals: np.ndarray | None = None
    iterations: int = 0
    method: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def solve_lp(p: LPProblem, method: str = "auto") -> LPSolution:
    """Solve p; returns an infeasible/unbounded status instead of raising."""
    if method == "auto":
        method = "simplex" if (p.m <= DENSE_MAX_ROWS and p.n <= DENSE_MAX_COLS) else "highs"
    if method == "simplex":
        return _DenseSimplex(p).solve()
    if method == "highs":
        return _solve_highs(p)
    raise ValueError(f"unknown method {method!r}")


def solve_lp_rowgen(p: LPProblem, working=(), method: str = "highs", feas_tol: float = 1e-7,
                    batch: int = 50, max_rounds: int = 200) -> LPSolution:
    """Exact solve of p by scenario-row generation.

    Non-scenario rows are always kept. Scenario groups start from ``working``;
    each round solves the restricted problem and adds the (at most ``batch``)
    most violated scenario groups. A restricted optimum that satisfies every row
    of p is optimal for p, so the result equals a direct solve.
    """
    gid = {g: k for k, g in enumerate(p.groups)}
    is_scen = np.array([g[0] == "scenario" for g in p.groups], bool)
    active = ~is_scen
    for g in working:
        if g in gid:
            active[gid[g]] = True
    scale = 1.0 + np.abs(p.rhs)
    sol = None
    for _ in range(max_rounds):
        sub = _subset(p, active[p.row_group])
        sol = solve_lp(sub, method)
        if sol.status == "infeasible":
            return sol
        if sol.status != "optimal":
            break  # a relaxation may be unbounded while p is not; decide directly
        v = p.violation(sol.x) / scale
        # rows already in the restricted problem are trusted to solver tolerance
        bad = (v > feas_tol) & ~active[p.row_group]
        if not bad.any():
            duals = None
            if sol.duals is not None:
                duals = np.zeros(p.m)
                duals[active[p.row_group]] = sol.duals
            return LPSolution("optimal", sol.x, sol.objective, p.activity(sol.x), sol.basis,
                              duals, sol.iterations, f"rowgen/{sol.method}")
        worst = np.zeros(len(p.groups))
        np.maximum.at(worst, p.row_group[bad], v[bad])
        add = np.argsort(-worst)[:batch]
        add = add[worst[add] > 0]
        active[add] = True
    return solve_lp(p, method)


def _solve_highs(p: LPProblem) -> LPSolution:
    le, eq, ge = (p.sense == s for s in SENSES)
    A = p.A.tocsr()
    A_ub = sp.vstack([A[le], -A[ge]]).tocsr() if (le.any() or ge.any()) else None
    b_ub = np.concatenate([p.rhs[le], -p.rhs[ge]]) if A_ub is not None else None
    A_eq = A[eq] if eq.any() else None
    b_eq = p.rhs[eq] if eq.any() else None
    bounds = np.column_stack([np.where(np.isfinite(p.lower), p.lower, -np.inf),
                              np.where(np.isfinite(p.upper), p.upper, np.inf)])
    res = linprog(p.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs-ds", options={"presolve": True})
    if res.status == 2:
        return LPSolution("infeasible", method="highs")
    if res.status == 3:
        return LPSolution("unbounded", method="highs")
    if res.status != 0:
        raise NumericalBreakdown(f"HiGHS: {res.message}")
    x = res.x
    duals = np.zeros(p.m)
    nle = int(le.sum())
    if A_ub is not None:
        duals[np.flatnonzero(le)] = res.ineqlin.marginals[:nle]
        duals[np.flatnonzero(ge)] = -res.ineqlin.marginals[nle:]
    if A_eq is not None:
        duals[np.flatnonzero(eq)] = res.eqlin.marginals
    return LPSolution("optimal", x, float(p.c @ x), p.activity(x), None, duals,
                      int(getattr(res, "nit", 0)), "highs")


class _DenseSimplex:
    """Bounded-variable two-phase primal simplex on a dense tableau."""

    DJ_TOL = 1e-9
    PIV_TOL = 1e-9
    BREAKDOWN = 1e-11
    FEAS_TOL = 1e-7

    def __init__(self, p: LPProblem, max_iter: int = 100_000):
        self.p = p
        self.max_iter = max_iter

    def _setup(self):
        p = self.p
        m, n = p.m, p.n
        A = p.A.toarray()
        le, ge = p.sense == "<", p.sense == ">"
        n_sl = int(le.sum() + ge.sum())
        S = np.zeros((m, n_sl))
        sl_rows = np.flatnonzero(le | ge)
        S[sl_rows, np.arange(n_sl)] = np.where(le[sl_rows], 1.0, -1.0)
        lo = np.concatenate([p.lower, np.zeros(n_sl)])
        hi = np.concatenate([p.upper, np.full(n_sl, np.inf)])
        x = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
        M = np.hstack([A, S])
        r = p.rhs - M @ x
        # reuse a slack as the starting basic variable where its sign allows
        basis = -np.ones(m, np.int64)
        init_sign = np.ones(m)
        for k, row in enumerate(sl_rows):
            coef = S[row, k]
            if r[row] * coef >= 0:
                basis[row] = n + k
                init_sign[row] = coef
        need = np.flatnonzero(basis < 0)
        D = np.zeros((m, len(need)))
        sgn = np.where(r[need] >= 0, 1.0, -1.0)
        D[need, np.arange(len(need))] = sgn
        basis[need] = n + n_sl + np.arange(len(need))
        init_sign[need] = sgn
        M = np.hstack([M, D])
        lo = np.concatenate([lo, np.zeros(len(need))])
        hi = np.concatenate([hi, np.full(len(need), np.inf)])
        x = np.concatenate([x, np.zeros(len(need))])
        x[basis] = np.abs(r)
        # initial basis columns are +-unit vectors, so B^-1 M is a row scaling
        T = M * init_sign[:, None]
        self.n_struct, self.n_art = n, len(need)
        self.art = np.arange(n + n_sl, n + n_sl + len(need))
        self.init_cols = basis.copy()
        self.init_sign = init_sign
        self.M, self.T, self.lo, self.hi, self.x, self.basis = M, T, lo, hi, x, basis
        self.b = p.rhs.astype(float)

    def _reduced(self, cost):
        return cost - cost[self.basis] @ self.T

    def _pivot(self, r, j):
        T = self.T
        piv = T[r, j]
        if abs(piv) < self.BREAKDOWN:
            raise NumericalBreakdown(f"pivot {piv:.3e} on column {j}")
        T[r] /= piv
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.d -= self.d[j] * T[r]

    def _iterate(self, cost):
        self.d = self._reduced(cost)
        is_basic = np.zeros(len(self.x), bool)
        is_basic[self.basis] = True
        for it in range(self.max_iter):
            d, x, lo, hi = self.d, self.x, self.lo, self.hi
            up = (d < -self.DJ_TOL) & (x < hi - 1e-12)
            dn = (d > self.DJ_TOL) & (x > lo + 1e-12)
            cand = np.flatnonzero((up | dn) & ~is_basic)
            if cand.size == 0:
                return "optimal", it
            j = int(cand[0])  # Bland: lowest index
            dirn = 1.0 if d[j] < 0 else -1.0
            a = dirn * self.T[:, j]
            xb = x[self.basis]
            lb, ub = lo[self.basis], hi[self.basis]
            lim = np.full(len(a), np.inf)
            dec = a > self.PIV_TOL
            inc = a < -self.PIV_TOL
            lim[dec] = (xb[dec] - lb[dec]) / a[dec]
            lim[inc] = (ub[inc] - xb[inc]) / (-a[inc])
            lim = np.maximum(lim, 0.0)
            t_flip = hi[j] - lo[j]
            t = min(lim.min(initial=np.inf), t_flip)
            if not np.isfinite(t):
                return "unbounded", it
            ties = np.flatnonzero(lim <= t + 1e-12)
            leave_var = self.basis[ties] if ties.size else np.array([], np.int64)
            flip = t_flip <= t + 1e-12 and (ties.size == 0 or j < leave_var.min())
            x[j] += dirn * t
            x[self.basis] = xb - t * a
            if flip:
                x[j] = hi[j] if dirn > 0 else lo[j]
                continue
            r = int(ties[np.argmin(leave_var)])
            out = self.basis[r]
            x[out] = lb[r] if a[r] > 0 else ub[r]
            self._pivot(r, j)
            is_basic[out] = False
            is_basic[j] = True
            self.basis[r] = j
        raise NumericalBreakdown("iteration limit reached")

    def _refresh(self):
        """Recompute basic values from scratch to shed accumulated drift."""
        B = self.M[:, self.basis]
        nb = np.ones(len(self.x), bool)
        nb[self.basis] = False
        rhs = self.b - self.M[:, nb] @ self.x[nb]
        try:
            self.x[self.basis] = lu_solve(lu_factor(B, rtol=1e-14), rhs)
        except Exception:
            pass

    def solve(self) -> LPSolution:
        p = self.p
        if p.m == 0:
            return self._no_rows()
        self._setup()
        ntot = len(self.x)
        c1 = np.zeros(ntot)
        c1[self.art] = 1.0
        it1 = 0
        if self.n_art:
            status, it1 = self._iterate(c1)
            self._refresh()
            if self.x[self.art].sum() > self.FEAS_TOL * (1.0 + np.abs(self.b).max()):
                return LPSolution("infeasible", iterations=it1, method="simplex")
            self.x[self.art] = 0.0
            self.hi[self.art] = 0.0
        c2 = np.zeros(ntot)
        c2[: self.n_struct] = p.c
        status, it2 = self._iterate(c2)
        if status != "optimal":
            return LPSolution(status, iterations=it1 + it2, method="simplex")
        self._refresh()
        x = self.x[: self.n_struct].copy()
        # duals y = c_B' B^-1; column i of B^-1 is init_sign[i] * T[:, init_cols[i]]
        binv = self.T[:, self.init_cols] * self.init_sign[None, :]
        y = c2[self.basis] @ binv
        basis = tuple(sorted(int(b) for b in self.basis))
        return LPSolution("optimal", x, float(p.c @ x), p.activity(x), basis, y,
                          it1 + it2, "simplex")

    def _no_rows(self):
        p = self.p
        x = np.zeros(p.n)
        for j in range(p.n):
            if p.c[j] > 0:
                x[j] = p.lower[j]
            elif p.c[j] < 0:
                x[j] = p.upper[j]
            else:
                x[j] = p.lower[j] if np.isfinite(p.lower[j]) else (p.upper[j] if np.isfinite(p.upper[j]) else 0.0)
            if not np.isfinite(x[j]):
                return LPSolution("unbounded", method="simplex")
        return LPSolution("optimal", x, float(p.c @ x), np.zeros(0), (), np.zeros(0), 0, "simplex")
