import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sced_compress.compress import box_hull, convex_hull
from sced_compress.errors import MissingHalfspaces, RequiresOptimal
from sced_compress.grid import compute_ptdf, make_case
from sced_compress.lp import DETERMINISTIC
from sced_compress.risk import solution_complexity
from sced_compress.scenario import AffineMap, ScenarioSet, sample_gaussian_regions
from sced_compress.sced import (DispatchSolution, build_box_counterpart, build_deterministic,
                                build_hull_dual_counterpart, build_scenario_program,
                                build_vertex_program, estimate_solution_risk, rows_per_scenario,
                                scenario_violations, select_key_lines, solve_dispatch)


def two_bus(load=80.0, cap=500.0):
    return make_case([(1, 1), (2, 0)], [(1, 2, 0.1, cap)],
                     [(1, 0, 100, -20, 20, 10), (2, 0, 100, -20, 20, 30)], [(2, load)],
                     [(2, 10, 40, 1)], [(1, 0.1)])


def test_merit_order_two_bus():
    c = two_bus()
    s = solve_dispatch(build_deterministic(c, compute_ptdf(c)))
    assert np.allclose(s.g, [70.0, 0.0])
    assert s.cost == pytest.approx(700.0)


def test_load_beyond_capacity_is_infeasible():
    c = two_bus()
    from dataclasses import replace
    big = replace(c, load_mw=np.array([250.0]))  # skips validation on purpose
    assert solve_dispatch(build_deterministic(big, compute_ptdf(big))).status == "infeasible"


def _enumerate_dispatch(case, ptdf):
    """Exhaustive vertex enumeration of the deterministic dispatch polytope."""
    n = case.n_gen
    off = ptdf.Hd @ case.load_mw - ptdf.Hw @ case.wind_forecast
    # inequalities G g <= h
    G = np.vstack([np.eye(n), -np.eye(n), ptdf.Hg, -ptdf.Hg])
    h = np.concatenate([case.gen_max, -case.gen_min, case.line_cap + off, case.line_cap - off])
    best = np.inf
    for act in itertools.combinations(range(len(h)), n - 1):
        M = np.vstack([np.ones(n), G[list(act)]])
        r = np.concatenate([[case.net_demand], h[list(act)]])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        g = np.linalg.solve(M, r)
        if np.all(G @ g <= h + 1e-7):
            best = min(best, float(case.gen_cost @ g))
    return best


def test_deterministic_6bus_vs_enumeration(case6):
    ptdf = compute_ptdf(case6)
    s = solve_dispatch(build_deterministic(case6, ptdf))
    assert s.cost == pytest.approx(_enumerate_dispatch(case6, ptdf), rel=1e-9)
    # the 2-4 rating binds at the optimum
    assert abs(abs(s.flows[4]) - case6.line_cap[4]) < 1e-6
    # and relaxing it gives the unconstrained merit-order answer
    loose = case6.with_line_caps(np.full(case6.n_line, 1e4))
    s2 = solve_dispatch(build_deterministic(loose, ptdf))
    assert s2.cost == pytest.approx(_enumerate_dispatch(loose, ptdf), rel=1e-9)
    assert s2.cost < s.cost


def test_key_line_selection(case6):
    ptdf = compute_ptdf(case6)
    det = solve_dispatch(build_deterministic(case6, ptdf))
    loose = case6.with_line_caps(np.full(case6.n_line, 1e4))
    det_loose = solve_dispatch(build_deterministic(loose, ptdf))
    assert select_key_lines(loose, det_loose, 1.0) == []
    hi, lo = select_key_lines(case6, det, 0.9), select_key_lines(case6, det, 0.6)
    assert set(hi) <= set(lo)
    ratio = np.abs(det.flows) / case6.line_cap
    j = int(np.argsort(ratio)[-3])
    assert j in select_key_lines(case6, det, float(ratio[j]) - 1e-9)
    with pytest.raises(RequiresOptimal):
        select_key_lines(case6, DispatchSolution("infeasible"), 0.6)


def test_empty_scenarios_equal_deterministic(case6):
    ptdf = compute_ptdf(case6)
    det = solve_dispatch(build_deterministic(case6, ptdf))
    sp = solve_dispatch(build_scenario_program(case6, ptdf, np.zeros((0, 3))))
    assert sp.cost == pytest.approx(det.cost, rel=1e-12)
    assert sp.eta.sum() == pytest.approx(1.0)


def test_588_rows_per_scenario_118(case118):
    ptdf = compute_ptdf(case118)
    assert rows_per_scenario(case118) == 588
    W = np.zeros((3, case118.n_wind))
    p0 = build_scenario_program(case118, ptdf, W[:0])
    p3 = build_scenario_program(case118, ptdf, W)
    assert p3.m - p0.m == 3 * 588
    assert all(v == 588 for g, v in p3.group_counts().items() if g[0] == "scenario")


def test_duplicate_scenario_idempotent(fixtures):
    case, ptdf, amap = fixtures["case6"]
    W = amap(sample_gaussian_regions(case.region_sigma, 40, 1).data)
    a = solve_dispatch(build_scenario_program(case, ptdf, W))
    b = solve_dispatch(build_scenario_program(case, ptdf, np.vstack([W, W[:5]])))
    assert a.cost == pytest.approx(b.cost, rel=1e-12)


def test_all_vertices_gives_identical_problem(fixtures):
    case, ptdf, amap = fixtures["case6"]
    z = np.array([[0.1, 0.0], [-0.1, 0.05], [0.0, -0.1]])
    h = convex_hull(z)
    vp = build_vertex_program(case, ptdf, h, amap=amap)
    sp = build_scenario_program(case, ptdf, amap(z))
    assert vp.m == sp.m and (vp.A != sp.A).nnz == 0 and np.array_equal(vp.rhs, sp.rhs)


@pytest.mark.parametrize("name", ["case6", "case118"])
def test_vertex_program_cost_equals_full(fixtures, name):
    case, ptdf, amap = fixtures[name]
    z = sample_gaussian_regions(case.region_sigma, 500, 5).data
    h = convex_hull(z)
    sp = build_scenario_program(case, ptdf, amap(z))
    vp = build_vertex_program(case, ptdf, h, amap=amap)
    assert vp.m - vp.group_counts()[DETERMINISTIC] == h.n_vertices * rows_per_scenario(case)
    a, b = solve_dispatch(sp), solve_dispatch(vp)
    assert b.cost == pytest.approx(a.cost, rel=1e-7)


def test_zero_radius_box_equals_center(fixtures):
    case, ptdf, amap = fixtures["case6"]
    c = np.array([0.05, -0.03])
    b = box_hull(np.array([c, c]))
    p, rc = build_box_counterpart(case, ptdf, b, amap=amap)
    ref = solve_dispatch(build_scenario_program(case, ptdf, amap(c[None])))
    assert solve_dispatch(p).cost == pytest.approx(ref.cost, rel=1e-9)
    m = 2
    assert rc.rows_added == rc.n_robust_rows * (2 * m + 1)
    assert rc.vars_added == rc.n_robust_rows * m


@pytest.mark.parametrize("seed", range(3))
def test_box_equals_corner_enumeration(fixtures, seed):
    case, ptdf, amap = fixtures["case6"]
    z = sample_gaussian_regions(case.region_sigma, 300, seed).data
    b = box_hull(z)
    p, _ = build_box_counterpart(case, ptdf, b, amap=amap)
    corners = solve_dispatch(build_scenario_program(case, ptdf, amap(b.corners())))
    box = solve_dispatch(p)
    hull = solve_dispatch(build_vertex_program(case, ptdf, convex_hull(z), amap=amap))
    assert box.cost == pytest.approx(corners.cost, rel=1e-7)
    assert box.cost >= hull.cost - 1e-7 * abs(hull.cost)


def test_box_corner_enumeration_four_factors():
    # 4 regions on a 5-bus ring: corner oracle at m = 4
    c = make_case([(k, int(k == 1)) for k in range(1, 6)],
                  [(1, 2, 0.1, 80), (2, 3, 0.1, 80), (3, 4, 0.1, 80), (4, 5, 0.1, 80), (5, 1, 0.1, 80)],
                  [(1, 0, 200, -40, 40, 10), (3, 0, 150, -40, 40, 15), (5, 0, 100, -40, 40, 25)],
                  [(2, 120), (4, 110)], [(2, 30, 120, 1), (3, 20, 80, 2), (4, 40, 160, 3), (5, 25, 100, 4)],
                  [(1, 0.1), (2, 0.1), (3, 0.1), (4, 0.1)])
    ptdf = compute_ptdf(c)
    amap = AffineMap(np.diag(c.wind_forecast), np.zeros(4))
    z = sample_gaussian_regions(c.region_sigma, 200, 3).data
    b = box_hull(z)
    box = solve_dispatch(build_box_counterpart(c, ptdf, b, amap=amap)[0])
    corners = solve_dispatch(build_scenario_program(c, ptdf, amap(b.corners())))
    assert box.cost == pytest.approx(corners.cost, rel=1e-7)


@pytest.mark.parametrize("name", ["case6", "case118"])
def test_hull_dual_equals_vertex_program(fixtures, name):
    case, ptdf, amap = fixtures[name]
    z = sample_gaussian_regions(case.region_sigma, 300, 11).data
    h = convex_hull(z)
    d, rc = build_hull_dual_counterpart(case, ptdf, h, amap=amap)
    v = solve_dispatch(build_vertex_program(case, ptdf, h, amap=amap))
    sd = solve_dispatch(d)
    assert sd.cost == pytest.approx(v.cost, rel=1e-6)
    lam = [sd.lp.x[s] for s in rc.blocks.values()]
    assert min(x.min() for x in lam) >= -1e-9


def test_hull_dual_one_dimensional(case3):
    ptdf = compute_ptdf(case3)
    amap = AffineMap(case3.wind_forecast[:, None], np.zeros(1))
    z = sample_gaussian_regions(case3.region_sigma, 100, 0).data
    h = convex_hull(z)
    assert h.n_halfspaces == 2
    d, _ = build_hull_dual_counterpart(case3, ptdf, h, amap=amap)
    v = build_vertex_program(case3, ptdf, h, amap=amap)
    assert solve_dispatch(d).cost == pytest.approx(solve_dispatch(v).cost, rel=1e-9)


def test_dual_support_function_single_halfspace():
    # max a.z over {z : z <= 3} with a = 2 is 6; the dual min 3 lam, lam = 2
    from sced_compress.lp import LPBuilder, solve_lp
    b = LPBuilder()
    lam = b.add_vars("lam", 1, 0.0, np.inf, [3.0])
    b.add_rows([0], lam, [1.0], "=", 2.0, DETERMINISTIC)
    assert solve_lp(b.build()).objective == pytest.approx(6.0)


def test_missing_halfspaces(fixtures):
    case, ptdf, amap = fixtures["case6"]
    h = convex_hull(sample_gaussian_regions(case.region_sigma, 50, 0).data)
    from dataclasses import replace
    with pytest.raises(MissingHalfspaces):
        build_hull_dual_counterpart(case, ptdf, replace(h, A=np.zeros((0, 2)), b=np.zeros(0)),
                                    amap=amap)


def test_infeasible_stays_infeasible(case6):
    ptdf = compute_ptdf(case6)
    tight = case6.with_ramps(0.0, 0.0)
    amap = AffineMap(np.diag(case6.wind_forecast), np.zeros(3))
    z = np.array([[0.1, 0.1, 0.1], [-0.1, -0.1, -0.1], [0.05, -0.05, 0.02], [0.0, 0.1, -0.1]])
    W = amap(z)
    assert solve_dispatch(build_scenario_program(tight, ptdf, W)).status == "infeasible"
    h = convex_hull(z)
    assert solve_dispatch(build_hull_dual_counterpart(tight, ptdf, h, amap=amap)[0]).status == "infeasible"


@pytest.mark.parametrize("name", ["case6", "case118"])
def test_conservatism_ordering(fixtures, name):
    case, ptdf, amap = fixtures[name]
    z = sample_gaussian_regions(case.region_sigma, 200, 3).data
    det = solve_dispatch(build_deterministic(case, ptdf)).cost
    hull = solve_dispatch(build_vertex_program(case, ptdf, convex_hull(z), amap=amap)).cost
    box = solve_dispatch(build_box_counterpart(case, ptdf, box_hull(z), amap=amap)[0]).cost
    tol = 1e-9 * abs(det)
    assert det <= hull + tol and hull <= box + tol


def test_dispatch_invariants(fixtures):
    case, ptdf, amap = fixtures["case118"]
    z = sample_gaussian_regions(case.region_sigma, 100, 0).data
    s = solve_dispatch(build_scenario_program(case, ptdf, amap(z)))
    assert abs(s.eta.sum() - 1) <= 1e-9
    assert abs(s.g.sum() - case.net_demand) <= 1e-7 * case.load_mw.sum()
    assert np.all(s.g >= case.gen_min - 1e-6) and np.all(s.g <= case.gen_max + 1e-6)
    assert 1e4 <= s.cost <= 1e6


def test_solution_risk_examples(fixtures):
    case, ptdf, amap = fixtures["case6"]
    W = amap(sample_gaussian_regions(case.region_sigma, 200, 4).data)
    s = solve_dispatch(build_scenario_program(case, ptdf, W))
    assert estimate_solution_risk(s, case, ptdf, W) == 0.0
    small = case.with_ramps(-1.0, 1.0)
    s2 = solve_dispatch(build_deterministic(case, ptdf))
    s2.eta = np.full(case.n_gen, 1 / case.n_gen)
    assert estimate_solution_risk(s2, small, ptdf, W * 20) > 0.95


def test_region_inclusion_random_points(fixtures):
    """(g, eta) feasible for the vertex program iff feasible for the full program."""
    case, ptdf, amap = fixtures["case6"]
    z = sample_gaussian_regions(case.region_sigma, 500, 2).data
    W = amap(z)
    Wv = amap(convex_hull(z).vertices)
    s = solve_dispatch(build_scenario_program(case, ptdf, W))
    rng = np.random.default_rng(0)
    agree = 0
    for _ in range(1000):
        trial = DispatchSolution("optimal", s.g + rng.normal(size=3) * 2,
                                 s.eta + rng.normal(size=3) * 0.3)
        full = not scenario_violations(trial, case, ptdf, W, tol=0).any()
        vert = not scenario_violations(trial, case, ptdf, Wv, tol=0).any()
        assert full == vert
        agree += full
    assert 0 < agree < 1000  # both outcomes exercised


@pytest.mark.parametrize("seed", range(3))
def test_complexity_invariant_under_hull(fixtures, seed):
    case, ptdf, amap = fixtures["case6"]
    z = sample_gaussian_regions(case.region_sigma, 300, seed).data
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = solution_complexity(build_scenario_program(case, ptdf, amap(z)))
        b = solution_complexity(build_vertex_program(case, ptdf, convex_hull(z), amap=amap))
    assert a.s_star == b.s_star and a.support == b.support


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1), st.integers(20, 200))
def test_vertex_program_random_draws(seed, N):
    case = make_case([(1, 1), (2, 0), (3, 0)], [(1, 2, 0.1, 90), (2, 3, 0.1, 90), (1, 3, 0.1, 90)],
                     [(1, 0, 250, -60, 60, 20.3), (2, 0, 200, -60, 60, 29.7)], [(3, 180)],
                     [(2, 40, 160, 1), (3, 30, 120, 2)], [(1, 0.1), (2, 0.2)])
    ptdf = compute_ptdf(case)
    amap = AffineMap(np.diag(case.wind_forecast), np.zeros(2))
    z = sample_gaussian_regions(case.region_sigma, N, seed).data
    a = solve_dispatch(build_scenario_program(case, ptdf, amap(z)))
    b = solve_dispatch(build_vertex_program(case, ptdf, convex_hull(z), amap=amap))
    assert a.status == b.status
    if a.optimal:
        assert b.cost == pytest.approx(a.cost, rel=1e-7)
        assert np.allclose(a.g, b.g, atol=1e-6) and np.allclose(a.eta, b.eta, atol=1e-6)


def test_to_dict_is_json_ready(fixtures):
    import json
    case, ptdf, _ = fixtures["case6"]
    s = solve_dispatch(build_deterministic(case, ptdf))
    json.dumps(s.to_dict())
    assert isinstance(ScenarioSet(np.zeros((1, 2))).N, int)
