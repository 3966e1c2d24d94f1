"""SCED problem assembly: deterministic, scenario, hull-vertex and robust forms.

Decision variables are the dispatch ``g`` and participation factors ``eta``.
Two auxiliary blocks keep scenario rows sparse: ``p = H_g g`` for every line
and ``q = H_g eta`` for the key lines. A scenario w (farm MW, s = sum(w)) then
gives the line row

    p_j - s q_j  in  [-cap_j, cap_j] + (H_d d)_j - (H_w w_hat)_j - (H_w w)_j

plus generator rows ``g - s eta in [pmin, pmax]`` and reserve rows
``-s eta in [ramp_down, ramp_up]``: 2|key| + 4 n_gen rows per scenario.
Nominal (w = 0) line limits are bounds on ``p``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .compress import Box, Polytope
from .errors import DimensionMismatch, EmptyHoldout, MissingHalfspaces, NumericalBreakdown, RequiresOptimal
from .grid import GridCase, PtdfPartition
from .lp import (BOX_AUX, DETERMINISTIC, DUAL_AUX, LPBuilder, LPProblem, LPSolution, scenario,
                 solve_lp, tag_str)
from .scenario import AffineMap, ScenarioSet

KEY_LINE_THRESHOLD = 0.6
ALL_LINES_MAX = 200


@dataclass
class DispatchSolution:
    status: str
    g: np.ndarray | None = None
    eta: np.ndarray | None = None
    cost: float = np.nan
    flows: np.ndarray | None = None
    binding: list = field(default_factory=list)
    lp: LPSolution | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def to_dict(self) -> dict:
        out = {"status": self.status, "cost": None if np.isnan(self.cost) else float(self.cost)}
        if self.optimal:
            out["g"] = self.g.tolist()
            out["eta"] = None if self.eta is None else self.eta.tolist()
            out["flows"] = self.flows.tolist()
            out["binding"] = self.binding
        return out


@dataclass
class RobustCounterpart:
    """Bookkeeping for a robustified program.

    ``blocks`` maps a robustified row label, e.g. ``("line", j, "upper")``, to
    the slice of its auxiliary (dual or absolute-value) variables.
    """

    kind: str
    n_robust_rows: int
    rows_added: int
    vars_added: int
    blocks: dict = field(default_factory=dict)


def _all_lines(case):
    return np.arange(case.n_line)


def _base(case: GridCase, ptdf: PtdfPartition, key_lines, with_eta: bool, eta_nonneg: bool):
    """Builder with the deterministic block: g, p (and eta, q when with_eta)."""
    key = _all_lines(case) if key_lines is None else np.asarray(sorted(key_lines), np.int64)
    b = LPBuilder()
    g = b.add_vars("g", case.n_gen, case.gen_min, case.gen_max, case.gen_cost)
    eta = b.add_vars("eta", case.n_gen, 0.0 if eta_nonneg else -np.inf, np.inf) if with_eta else None
    offset = ptdf.Hd @ case.load_mw - ptdf.Hw @ case.wind_forecast
    p = b.add_vars("p", case.n_line, -case.line_cap + offset, case.line_cap + offset)
    q = b.add_vars("q", len(key), -np.inf, np.inf) if with_eta else None
    b.add_rows(np.zeros(case.n_gen), g, np.ones(case.n_gen), "=", case.net_demand, DETERMINISTIC)
    # p - H_g g = 0
    n_l = case.n_line
    b.add_dense_rows(np.hstack([np.eye(n_l), -ptdf.Hg]), np.concatenate([p, g]), "=",
                     np.zeros(n_l), DETERMINISTIC)
    if with_eta:
        b.add_rows(np.zeros(case.n_gen), eta, np.ones(case.n_gen), "=", 1.0, DETERMINISTIC)
        b.add_dense_rows(np.hstack([np.eye(len(key)), -ptdf.Hg[key]]), np.concatenate([q, eta]),
                         "=", np.zeros(len(key)), DETERMINISTIC)
    v = {"g": g, "eta": eta, "p": p, "q": q}
    return b, v, key, offset


def _meta(case, ptdf, key, kind, **extra):
    return dict(case=case, ptdf=ptdf, key_lines=key, kind=kind, **extra)


def build_deterministic(case: GridCase, ptdf: PtdfPartition) -> LPProblem:
    b, v, key, _ = _base(case, ptdf, None, with_eta=False, eta_nonneg=False)
    return b.build(**_meta(case, ptdf, key, "deterministic"))


def _add_scenario_rows(b, v, case, ptdf, key, offset, W, labels):
    """Rows of one or more farm-space scenarios W (K, n_w), tagged scenario(label)."""
    n_k, n_g = len(key), case.n_gen
    Hw_k = ptdf.Hw[key]
    cap = case.line_cap[key]
    off = offset[key]
    # fixed sparsity pattern per scenario
    local = np.arange(2 * n_k + 4 * n_g)
    line_rows = np.concatenate([np.arange(n_k), n_k + np.arange(n_k)])
    p_cols = np.tile(v["p"][key], 2)
    q_cols = np.tile(v["q"], 2)
    gen_rows = 2 * n_k + np.arange(2 * n_g)
    res_rows = 2 * n_k + 2 * n_g + np.arange(2 * n_g)
    g2 = np.tile(v["g"], 2)
    e2 = np.tile(v["eta"], 2)
    sense = np.array(["<"] * n_k + [">"] * n_k + ["<"] * n_g + [">"] * n_g
                     + ["<"] * n_g + [">"] * n_g)
    rows = np.concatenate([line_rows, line_rows, gen_rows, gen_rows, res_rows])
    cols = np.concatenate([p_cols, q_cols, g2, e2, e2])
    for w, lab in zip(np.atleast_2d(W), labels):
        s = float(w.sum())
        ew = Hw_k @ w
        vals = np.concatenate([np.ones(2 * n_k), np.full(2 * n_k, -s), np.ones(2 * n_g),
                               np.full(2 * n_g, -s), np.full(2 * n_g, -s)])
        rhs = np.concatenate([cap + off - ew, -cap + off - ew, case.gen_max, case.gen_min,
                              case.ramp_up, case.ramp_down])
        b.add_rows(rows, cols, vals, sense, rhs, scenario(lab))
    assert len(local) == 2 * n_k + 4 * n_g


def _farm_data(case, scenarios):
    W = scenarios.data if isinstance(scenarios, ScenarioSet) else np.atleast_2d(np.asarray(scenarios, float))
    if W.size and W.shape[1] != case.n_wind:
        raise DimensionMismatch(f"scenarios have dim {W.shape[1]}, case has {case.n_wind} wind farms")
    return W


def build_scenario_program(case, ptdf, scenarios, key_lines=None, labels=None,
                           eta_nonneg: bool = False) -> LPProblem:
    """Scenario program over farm-space scenarios (rows tagged by scenario index)."""
    W = _farm_data(case, scenarios) if scenarios is not None else np.zeros((0, case.n_wind))
    labels = range(len(W)) if labels is None else labels
    b, v, key, offset = _base(case, ptdf, key_lines, with_eta=True, eta_nonneg=eta_nonneg)
    _add_scenario_rows(b, v, case, ptdf, key, offset, W, labels)
    return b.build(**_meta(case, ptdf, key, "scenario", n_scenarios=len(W)))


def rows_per_scenario(case, key_lines=None) -> int:
    n_k = case.n_line if key_lines is None else len(key_lines)
    return 2 * n_k + 4 * case.n_gen


def _map_or_identity(amap, dim):
    return AffineMap.identity(dim) if amap is None else amap


def build_vertex_program(case, ptdf, hull: Polytope, key_lines=None, amap: AffineMap | None = None,
                         eta_nonneg: bool = False) -> LPProblem:
    """Scenario program restricted to the hull vertices (mapped to farms by amap)."""
    amap = _map_or_identity(amap, hull.dim)
    W = amap(hull.vertices)
    p = build_scenario_program(case, ptdf, W, key_lines, labels=hull.vertex_indices.tolist(),
                               eta_nonneg=eta_nonneg)
    p.meta.update(kind="vertex", n_vertices=hull.n_vertices)
    return p


def _robust_rows_template(case, ptdf, key, offset, amap):
    """For every chance row: nominal coefficients and its w-dependence in factor space.

    Each row reads  nominal(x) + (h0 + s0 * y) + (hz - y * m1) . z  (<= or >=) rhs
    where y is the scalar variable multiplying the aggregate error (q_j or eta_k),
    m1 = 1'M, s0 = -1'o and h0/hz the y-free part.
    """
    M, o = amap.matrix, amap.offset
    m1 = M.sum(axis=0)
    one_o = float(o.sum())
    HwM = ptdf.Hw[key] @ M
    Hwo = ptdf.Hw[key] @ o
    cap = case.line_cap[key]
    rows = []
    for kk, j in enumerate(key):
        for side, sign in (("upper", 1.0), ("lower", -1.0)):
            rhs = (cap[kk] if side == "upper" else -cap[kk]) + offset[j] - Hwo[kk]
            rows.append(dict(label=("line", int(j), side), side=side, lin={"p": (j, 1.0)},
                             y=("q", kk), hz=HwM[kk], rhs=rhs))
    for k in range(case.n_gen):
        rows.append(dict(label=("gen", k, "upper"), side="upper", lin={"g": (k, 1.0)},
                         y=("eta", k), hz=np.zeros(amap.in_dim), rhs=case.gen_max[k]))
        rows.append(dict(label=("gen", k, "lower"), side="lower", lin={"g": (k, 1.0)},
                         y=("eta", k), hz=np.zeros(amap.in_dim), rhs=case.gen_min[k]))
    for k in range(case.n_gen):
        rows.append(dict(label=("reserve", k, "upper"), side="upper", lin={},
                         y=("eta", k), hz=np.zeros(amap.in_dim), rhs=case.ramp_up[k]))
        rows.append(dict(label=("reserve", k, "lower"), side="lower", lin={},
                         y=("eta", k), hz=np.zeros(amap.in_dim), rhs=case.ramp_down[k]))
    return rows, m1, one_o


def build_box_counterpart(case, ptdf, box: Box, key_lines=None, amap: AffineMap | None = None,
                          eta_nonneg: bool = False):
    """Robust counterpart over a box in factor space.

    Each chance row a(x).z + rest(x) <= rhs becomes a.c + r.u + rest <= rhs with
    u >= a, u >= -a (m auxiliary variables, 2m + 1 rows).
    """
    amap = _map_or_identity(amap, box.dim)
    if amap.in_dim != box.dim or amap.out_dim != case.n_wind:
        raise DimensionMismatch("box/map/case dimensions disagree")
    b, v, key, offset = _base(case, ptdf, key_lines, with_eta=True, eta_nonneg=eta_nonneg)
    rows, m1, one_o = _robust_rows_template(case, ptdf, key, offset, amap)
    m = box.dim
    c, r = box.center, box.radius
    blocks = {}
    n_before_rows, n_before_vars = b.m, b.n
    for row in rows:
        u = b.add_vars(f"u:{row['label']}", m, 0.0, np.inf)
        blocks[row["label"]] = slice(u[0], u[-1] + 1)
        yname, yk = row["y"]
        y = v[yname][yk]
        hz = row["hz"]
        # a = hz - y*m1:  u - a >= 0  ->  u + m1*y >= hz ;  u + a >= 0 -> u - m1*y >= -hz
        rr = np.concatenate([np.arange(m), np.arange(m), m + np.arange(m), m + np.arange(m)])
        cc = np.concatenate([u, np.full(m, y), u, np.full(m, y)])
        vv = np.concatenate([np.ones(m), m1, np.ones(m), -m1])
        b.add_rows(rr, cc, vv, ">", np.concatenate([hz, -hz]), BOX_AUX)
        # value row: lin + y*(-(1'o) - m1.c) + hz.c +/- r.u  (side)
        ycoef = -(one_o + float(m1 @ c))
        cols, vals = [y], [ycoef]
        for name, (idx, coef) in row["lin"].items():
            cols.append(v[name][idx])
            vals.append(coef)
        rhs = row["rhs"] - float(hz @ c)
        sgn = 1.0 if row["side"] == "upper" else -1.0
        cols += list(u)
        vals += list(sgn * r)
        b.add_rows(np.zeros(len(cols)), cols, vals, "<" if row["side"] == "upper" else ">",
                   rhs, BOX_AUX)
    rc = RobustCounterpart("box", len(rows), b.m - n_before_rows, b.n - n_before_vars, blocks)
    return b.build(**_meta(case, ptdf, key, "box", counterpart=rc)), rc


def _aggregate_range(points_factor, amap):
    s = amap(points_factor).sum(axis=1)
    return float(s.min()), float(s.max())


def build_hull_dual_counterpart(case, ptdf, hull: Polytope, key_lines=None,
                                amap: AffineMap | None = None, eta_nonneg: bool = False):
    """Line rows robustified over {z : A z <= b} through LP duality.

    max_z a(x).z over the polytope equals min_{lam >= 0} b.lam subject to
    A' lam = a(x), so the robust upper row is  rest + b.lam <= rhs  with the
    stationarity rows as equalities. Lower rows use a second multiplier block
    for -a(x). Generator and reserve rows see w only through sum(w); they are
    imposed at the extreme aggregate values over the hull vertices.
    """
    if hull.A is None or hull.b is None or len(hull.b) == 0:
        raise MissingHalfspaces("hull carries no halfspace representation")
    amap = _map_or_identity(amap, hull.dim)
    if amap.in_dim != hull.dim or amap.out_dim != case.n_wind:
        raise DimensionMismatch("hull/map/case dimensions disagree")
    b, v, key, offset = _base(case, ptdf, key_lines, with_eta=True, eta_nonneg=eta_nonneg)
    rows, m1, one_o = _robust_rows_template(case, ptdf, key, offset, amap)
    A, bh = hull.A, hull.b
    n_h, m = A.shape
    blocks = {}
    n_before_rows, n_before_vars = b.m, b.n
    n_robust = 0
    for row in rows:
        if row["label"][0] != "line":
            continue
        n_robust += 1
        lam = b.add_vars(f"lam:{row['label']}", n_h, 0.0, np.inf)
        blocks[row["label"]] = slice(lam[0], lam[-1] + 1)
        y = v["q"][row["y"][1]]
        sgn = 1.0 if row["side"] == "upper" else -1.0
        # A' lam = sgn * (hz - y m1)  ->  A' lam + sgn*m1*y = sgn*hz
        Aext = np.hstack([A.T, (sgn * m1)[:, None]])
        b.add_dense_rows(Aext, np.concatenate([lam, [y]]), "=", sgn * row["hz"], DUAL_AUX)
        # value row: p_j - (1'o) q_j + sgn * b.lam  (<= or >=) rhs
        j = row["lin"]["p"][0]
        cols = np.concatenate([[v["p"][j], y], lam])
        vals = np.concatenate([[1.0, -one_o], sgn * bh])
        b.add_rows(np.zeros(len(cols)), cols, vals, "<" if sgn > 0 else ">", row["rhs"], DUAL_AUX)
    s_lo, s_hi = _aggregate_range(hull.vertices, amap)
    g, eta = v["g"], v["eta"]
    n_g = case.n_gen
    for s in (s_lo, s_hi):
        for k in range(n_g):
            b.add_rows([0, 0], [g[k], eta[k]], [1.0, -s], "<", case.gen_max[k], DUAL_AUX)
            b.add_rows([0, 0], [g[k], eta[k]], [1.0, -s], ">", case.gen_min[k], DUAL_AUX)
            b.add_rows([0], [eta[k]], [-s], "<", case.ramp_up[k], DUAL_AUX)
            b.add_rows([0], [eta[k]], [-s], ">", case.ramp_down[k], DUAL_AUX)
    n_robust += 4 * n_g
    rc = RobustCounterpart("hull-dual", n_robust, b.m - n_before_rows, b.n - n_before_vars, blocks)
    return b.build(**_meta(case, ptdf, key, "hull-dual", counterpart=rc)), rc


def solve_dispatch(p: LPProblem, method: str = "auto", check: bool = True) -> DispatchSolution:
    """Solve a problem built by this module and unpack the dispatch."""
    sol = solve_lp(p, method)
    if not sol.optimal:
        return DispatchSolution(sol.status, lp=sol)
    case, ptdf = p.meta["case"], p.meta["ptdf"]
    g = p.block(sol.x, "g")
    eta = p.block(sol.x, "eta") if "eta" in p.var_blocks else None
    flows = ptdf.Hg @ g - ptdf.Hd @ case.load_mw + ptdf.Hw @ case.wind_forecast
    active = p.active_rows(sol.x)
    binding = sorted({tag_str(p.group_of(r)) for r in np.flatnonzero(active)
                      if p.sense[r] != "="})
    out = DispatchSolution("optimal", g, eta, float(case.gen_cost @ g), flows, binding, sol)
    if check:
        _check_dispatch(out, case)
    return out


def _check_dispatch(sol, case):
    scale = max(1.0, float(np.abs(case.load_mw).sum()))
    if abs(sol.g.sum() - case.net_demand) > 1e-7 * scale:
        raise NumericalBreakdown("power balance violated at the reported optimum")
    if sol.eta is not None and abs(sol.eta.sum() - 1.0) > 1e-9 * max(1.0, np.abs(sol.eta).sum()):
        raise NumericalBreakdown("participation factors do not sum to one")
    tol = 1e-7 * scale
    if np.any(sol.g < case.gen_min - tol) or np.any(sol.g > case.gen_max + tol):
        raise NumericalBreakdown("dispatch outside generator limits")


def select_key_lines(case, det: DispatchSolution, threshold: float = KEY_LINE_THRESHOLD) -> list:
    """Lines loaded above ``threshold`` of capacity in the deterministic dispatch."""
    if not det.optimal:
        raise RequiresOptimal("key-line selection needs an optimal deterministic dispatch")
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    return np.flatnonzero(np.abs(det.flows) > threshold * case.line_cap).tolist()


def default_key_lines(case, ptdf, threshold: float | None = None):
    """All lines for small cases, otherwise the threshold rule (0.6 by default)."""
    if threshold is None:
        if case.n_line <= ALL_LINES_MAX:
            return None
        threshold = KEY_LINE_THRESHOLD
    det = solve_dispatch(build_deterministic(case, ptdf))
    return select_key_lines(case, det, threshold)


def scenario_violations(sol: DispatchSolution, case, ptdf, W, key_lines=None, tol: float = 1e-8):
    """Boolean per scenario: does (g*, eta*) violate any scenario row?"""
    W = _farm_data(case, W)
    key = _all_lines(case) if key_lines is None else np.asarray(sorted(key_lines), np.int64)
    g, eta = sol.g, sol.eta if sol.eta is not None else np.zeros(case.n_gen)
    s = W.sum(axis=1)
    scale = tol * max(1.0, float(np.abs(np.concatenate(
        [case.line_cap, case.gen_max, case.gen_min, case.ramp_up, case.ramp_down])).max()))
    base = (ptdf.Hg @ g - ptdf.Hd @ case.load_mw + ptdf.Hw @ case.wind_forecast)[key]
    F = base[None, :] - s[:, None] * (ptdf.Hg[key] @ eta)[None, :] + W @ ptdf.Hw[key].T
    cap = case.line_cap[key]
    bad = np.any((F > cap + scale) | (F < -cap - scale), axis=1)
    G = g[None, :] - s[:, None] * eta[None, :]
    bad |= np.any((G > case.gen_max + scale) | (G < case.gen_min - scale), axis=1)
    R = -s[:, None] * eta[None, :]
    bad |= np.any((R > case.ramp_up + scale) | (R < case.ramp_down - scale), axis=1)
    return bad


def estimate_solution_risk(sol: DispatchSolution, case, ptdf, holdout, key_lines=None) -> float:
    W = _farm_data(case, holdout)
    if W.shape[0] == 0:
        raise EmptyHoldout("holdout set is empty")
    if not sol.optimal:
        raise RequiresOptimal("solution risk needs an optimal dispatch")
    return float(np.mean(scenario_violations(sol, case, ptdf, W, key_lines)))
