"""Acceptance criteria 1-10. ``pytest tests/test_acceptance.py`` prints a PASS/FAIL
line per criterion at the end of the run (see conftest.py)."""
import time
import warnings

import numpy as np
import pytest

from conftest import brute_dc_flows
from oracles import hull_vertices_lp
from sced_compress.compress import (box_hull, compression_complexity, convex_hull,
                                    estimate_compression_risk)
from sced_compress.errors import DegenerateWarning
from sced_compress.grid import compute_ptdf, load_case, make_case
from sced_compress.risk import classical_epsilon, epsilon_bounds, solution_complexity
from sced_compress.scenario import (AffineMap, region_map, sample_gaussian_regions,
                                    sample_uniform_regions)
from sced_compress.sced import (build_box_counterpart, build_deterministic,
                                build_hull_dual_counterpart, build_scenario_program,
                                build_vertex_program, estimate_solution_risk, rows_per_scenario,
                                solve_dispatch)

N_PUB, BETA = 500, 1e-3
SEEDS = range(20)
SIZES = (100, 500)
CASES = ("case6", "case118")


@pytest.fixture(scope="module")
def setups():
    out = {}
    for name in ("case3",) + CASES:
        c = load_case(name)
        out[name] = (c, compute_ptdf(c), region_map(c))
    return out


@pytest.fixture(scope="module")
def hull_runs(setups):
    """Full and vertex programs for every (case, N, seed) of criteria 3, 4, 6 and 9."""
    runs, elapsed = {}, 0.0
    for name in CASES:
        case, ptdf, amap = setups[name]
        for N in SIZES:
            for seed in SEEDS:
                t = time.perf_counter()
                z = sample_gaussian_regions(case.region_sigma, N, 1000 + seed).data
                hull = convex_hull(z)
                full_p = build_scenario_program(case, ptdf, amap(z))
                vert_p = build_vertex_program(case, ptdf, hull, amap=amap)
                full, vert = solve_dispatch(full_p), solve_dispatch(vert_p)
                elapsed += time.perf_counter() - t
                runs[name, N, seed] = dict(z=z, hull=hull, full_p=full_p, vert_p=vert_p,
                                           full=full, vert=vert)
    return runs, elapsed


# 1 -----------------------------------------------------------------------------

@pytest.mark.criterion_1
@pytest.mark.parametrize("k,lo,hi,tol", [
    (6, 0.000, 0.045, 0.002),
    (32, 0.028, 0.121, 0.002),
    (10, 0.003, 0.059, 0.002),
    (63, 0.071, 0.200, 0.002),
])
def test_c1_published_brackets(k, lo, hi, tol):
    t = time.perf_counter()
    a, b = epsilon_bounds.__wrapped__(k, N_PUB, BETA)
    assert time.perf_counter() - t < 1.0
    print(f"k={k}: [{a:.4f}, {b:.4f}] vs [{lo}, {hi}]")
    assert abs(a - lo) <= tol and abs(b - hi) <= tol


@pytest.mark.criterion_1
def test_c1_low_complexity():
    t = time.perf_counter()
    _, b = epsilon_bounds.__wrapped__(2, N_PUB, BETA)
    assert time.perf_counter() - t < 1.0
    assert 0.028 <= b <= 0.033


# 2 -----------------------------------------------------------------------------

@pytest.mark.criterion_2
def test_c2_classical_closed_form():
    assert abs(classical_epsilon(N_PUB, 1, BETA) - (1 - BETA ** (1 / N_PUB))) <= 1e-10


# 3, 4 --------------------------------------------------------------------------

@pytest.mark.criterion_3
def test_c3_full_equals_vertex_cost(hull_runs):
    runs, elapsed = hull_runs
    bad = []
    for key, r in runs.items():
        assert r["full"].optimal and r["vert"].optimal, key
        rel = abs(r["full"].cost - r["vert"].cost) / abs(r["full"].cost)
        if rel > 1e-7:
            bad.append((key, rel))
    print(f"{len(runs)} runs in {elapsed:.1f} s")
    assert not bad
    assert len(runs) == len(CASES) * len(SIZES) * len(SEEDS)
    assert elapsed < 120.0


@pytest.mark.criterion_4
@pytest.mark.parametrize("name", CASES)
def test_c4_complexity_full_equals_vertex(hull_runs, name):
    runs, _ = hull_runs
    n_degen = 0
    for (cname, N, seed), r in runs.items():
        if cname != name:
            continue
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always", DegenerateWarning)
            a = solution_complexity(r["full_p"], base=r["full"].lp)
            b = solution_complexity(r["vert_p"], base=r["vert"].lp)
        n_degen += any(issubclass(x.category, DegenerateWarning) for x in w)
        assert a.s_star == b.s_star, (N, seed)
        assert a.support == b.support, (N, seed)
    print(f"{name}: {n_degen} degenerate runs")


# 5 -----------------------------------------------------------------------------

@pytest.mark.criterion_5
@pytest.mark.parametrize("name", ("case3",) + CASES)
@pytest.mark.parametrize("seed", range(3))
def test_c5_hull_dual_equals_vertex(setups, name, seed):
    case, ptdf, amap = setups[name]
    z = sample_gaussian_regions(case.region_sigma, 300, 50 + seed).data
    h = convex_hull(z)
    d = solve_dispatch(build_hull_dual_counterpart(case, ptdf, h, amap=amap)[0])
    v = solve_dispatch(build_vertex_program(case, ptdf, h, amap=amap))
    assert abs(d.cost - v.cost) <= 1e-6 * abs(v.cost)


def _five_bus_four_regions():
    c = make_case([(k, int(k == 1)) for k in range(1, 6)],
                  [(1, 2, 0.1, 80), (2, 3, 0.1, 80), (3, 4, 0.1, 80), (4, 5, 0.1, 80),
                   (5, 1, 0.1, 80)],
                  [(1, 0, 200, -40, 40, 10), (3, 0, 150, -40, 40, 15), (5, 0, 100, -40, 40, 25)],
                  [(2, 120), (4, 110)],
                  [(2, 30, 120, 1), (3, 20, 80, 2), (4, 40, 160, 3), (5, 25, 100, 4)],
                  [(1, 0.1), (2, 0.1), (3, 0.1), (4, 0.1)])
    return c, compute_ptdf(c), AffineMap(np.diag(c.wind_forecast), np.zeros(4))


@pytest.mark.criterion_5
@pytest.mark.parametrize("name", ("case3",) + CASES + ("five_bus_m4",))
@pytest.mark.parametrize("seed", range(3))
def test_c5_box_equals_corner_enumeration(setups, name, seed):
    case, ptdf, amap = _five_bus_four_regions() if name == "five_bus_m4" else setups[name]
    assert amap.in_dim <= 4
    z = sample_gaussian_regions(case.region_sigma, 300, 70 + seed).data
    b = box_hull(z)
    box = solve_dispatch(build_box_counterpart(case, ptdf, b, amap=amap)[0])
    corners = solve_dispatch(build_scenario_program(case, ptdf, amap(b.corners())))
    assert abs(box.cost - corners.cost) <= 1e-7 * abs(corners.cost)


# 6 -----------------------------------------------------------------------------

@pytest.mark.criterion_6
@pytest.mark.parametrize("name", CASES)
def test_c6_conservatism_ordering(setups, hull_runs, name):
    runs, _ = hull_runs
    case, ptdf, amap = setups[name]
    det = solve_dispatch(build_deterministic(case, ptdf)).cost
    tol = 1e-9 * abs(det)
    for (cname, N, seed), r in runs.items():
        if cname != name:
            continue
        box = solve_dispatch(build_box_counterpart(case, ptdf, box_hull(r["z"]), amap=amap)[0])
        assert det <= r["vert"].cost + tol <= box.cost + 2 * tol, (N, seed)


@pytest.mark.criterion_6
def test_c6_conservatism_case3(setups):
    case, ptdf, amap = setups["case3"]
    det = solve_dispatch(build_deterministic(case, ptdf)).cost
    for seed in SEEDS:
        z = sample_gaussian_regions(case.region_sigma, 500, seed).data
        hull = solve_dispatch(build_vertex_program(case, ptdf, convex_hull(z), amap=amap)).cost
        box = solve_dispatch(build_box_counterpart(case, ptdf, box_hull(z), amap=amap)[0]).cost
        assert det <= hull + 1e-9 * det <= box + 2e-9 * det


# 7 -----------------------------------------------------------------------------

TRIALS = 200
HOLDOUT = 10_000
FACTOR_SIGMA = np.array([0.05, 0.1, 0.08])


@pytest.fixture(scope="module")
def risk_trials(setups):
    case, ptdf, amap = setups["case6"]
    out = []
    t = time.perf_counter()
    for trial in range(TRIALS):
        sampler = sample_gaussian_regions if trial % 2 == 0 else sample_uniform_regions
        z = sampler(FACTOR_SIGMA, N_PUB + HOLDOUT, 10_000 + trial).data
        train, hold = z[:N_PUB], z[N_PUB:]
        hull, box = convex_hull(train), box_hull(train)
        rec = {"hull": (hull.n_vertices, estimate_compression_risk(hull, hold)),
               "box": (compression_complexity(train, "box"), estimate_compression_risk(box, hold))}
        w = sampler(case.region_sigma, N_PUB + HOLDOUT, 20_000 + trial).data
        prob = build_scenario_program(case, ptdf, amap(w[:N_PUB]))
        sol = solve_dispatch(prob)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateWarning)
            s = solution_complexity(prob, base=sol.lp).s_star
        rec["solution"] = (s, estimate_solution_risk(sol, case, ptdf, amap(w[N_PUB:])))
        out.append(rec)
    return out, time.perf_counter() - t


def _hits(trials, key, two_sided):
    n = 0
    for rec in trials:
        k, rate = rec[key]
        lo, hi = epsilon_bounds(int(k), N_PUB, BETA)
        n += (lo <= rate <= hi) if two_sided else (rate <= hi)
    return n


@pytest.mark.criterion_7
@pytest.mark.parametrize("key", ["hull", "box"])
def test_c7_compression_risk_inside_bounds(risk_trials, key):
    trials, elapsed = risk_trials
    n = _hits(trials, key, two_sided=True)
    print(f"{key}: {n}/{TRIALS} inside [lower, upper] ({elapsed:.0f} s)")
    assert n >= 197
    assert elapsed < 600.0


@pytest.mark.criterion_7
def test_c7_solution_risk_below_upper(risk_trials):
    trials, _ = risk_trials
    n = _hits(trials, "solution", two_sided=False)
    print(f"solution: {n}/{TRIALS} below upper")
    assert n >= 197


# 8 -----------------------------------------------------------------------------

@pytest.mark.criterion_8
def test_c8_box_complexity_at_most_2m():
    rng = np.random.default_rng(8)
    for trial in range(300):
        m = int(rng.integers(1, 7))
        N = int(rng.integers(1, 400))
        z = rng.standard_normal((N, m)) if trial % 3 else rng.integers(-2, 3, (N, m)).astype(float)
        assert compression_complexity(z, "box") <= 2 * m


@pytest.mark.criterion_8
def test_c8_hull_complexity_matches_oracle():
    rng = np.random.default_rng(88)
    for trial in range(120):
        d = int(rng.integers(1, 4))
        N = int(rng.integers(d + 2, 61))
        z = rng.standard_normal((N, d)) if trial % 2 else rng.uniform(-1, 1, (N, d))
        assert compression_complexity(z, "hull") == len(hull_vertices_lp(z)), (trial, N, d)


# 9 -----------------------------------------------------------------------------

@pytest.mark.criterion_9
def test_c9_rows_per_scenario(setups):
    case, ptdf, _ = setups["case118"]
    assert rows_per_scenario(case) == 588
    p1 = build_scenario_program(case, ptdf, np.zeros((1, case.n_wind)))
    p0 = build_scenario_program(case, ptdf, np.zeros((0, case.n_wind)))
    assert p1.m - p0.m == 588


@pytest.mark.criterion_9
def test_c9_multiplicity_reduction(hull_runs):
    runs, _ = hull_runs
    ratios = []
    for (name, N, seed), r in runs.items():
        if name == "case118" and N == 500:
            assert r["hull"].dim == 3
            rows = sum(c for g, c in r["vert_p"].group_counts().items() if g[0] == "scenario")
            assert rows == 588 * r["hull"].n_vertices
            ratios.append(r["hull"].n_vertices / N)
    print(f"v/N between {min(ratios):.3f} and {max(ratios):.3f}")
    assert len(ratios) == len(SEEDS) and max(ratios) < 0.15


# 10 ----------------------------------------------------------------------------

@pytest.mark.criterion_10
@pytest.mark.parametrize("name", ("case3",) + CASES)
def test_c10_ptdf_vs_dc_power_flow(setups, name):
    case, ptdf, _ = setups[name]
    rng = np.random.default_rng(10)
    for _ in range(10):
        inj = rng.normal(size=case.n_bus) * 100
        inj[case.slack] -= inj.sum()
        ref = brute_dc_flows(case, inj)
        assert np.max(np.abs(ptdf.H @ inj - ref)) <= 1e-8 * max(1.0, np.abs(ref).max())
