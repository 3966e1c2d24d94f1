"""End-to-end runs: sample, compress, build, solve, certify, validate.

A run produces a JSON-ready report. Everything outside the ``timings`` subtree
is a deterministic function of the config, so two runs with the same config
serialize to identical bytes once ``timings`` is dropped.
"""
from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .compress import box_compression_set, box_hull, contains, convex_hull, estimate_compression_risk
from .errors import ConfigError, TargetUnreachable
from .grid import compute_ptdf, load_case
from .risk import certify, classical_epsilon, epsilon_bounds, solution_complexity
from .scenario import (AffineMap, ScenarioSet, load_scenarios_csv, region_map,
                       sample_gaussian_regions, sample_uniform_regions)
from .sced import (build_box_counterpart, build_deterministic, build_hull_dual_counterpart,
                   build_scenario_program, build_vertex_program, default_key_lines,
                   estimate_solution_risk, rows_per_scenario, solve_dispatch)

SCHEMA_VERSION = "1.0"
METHODS = ("none", "hull", "box", "hull-dual")
SOURCES = ("gaussian", "uniform", "csv")


@dataclass
class RunConfig:
    case: str = "case6"
    source: str = "gaussian"
    sigmas: list | None = None        # per region; defaults to the case's region sigmas
    csv_path: str | None = None
    N: int = 500
    seed: int = 0
    method: tuple = ("hull",)
    beta: float = 1e-3
    threshold: float | None = None
    holdout: int = 0
    repetitions: int = 1
    output: str | None = None
    complexity: bool = True           # compute s_N* for none/hull

    def __post_init__(self):
        m = self.method
        if isinstance(m, str):
            m = [s.strip() for s in m.split(",") if s.strip()]
        self.method = tuple(m)
        if self.sigmas is not None:
            self.sigmas = [float(s) for s in np.atleast_1d(self.sigmas)]
        self.validate()

    def validate(self):
        if not self.method or any(m not in METHODS for m in self.method):
            raise ConfigError(f"method must be drawn from {METHODS}, got {self.method}")
        if self.source not in SOURCES:
            raise ConfigError(f"source must be one of {SOURCES}, got {self.source!r}")
        if self.source == "csv" and not self.csv_path:
            raise ConfigError("source 'csv' needs csv_path")
        if not 0.0 < self.beta < 1.0:
            raise ConfigError(f"beta must lie in (0, 1), got {self.beta}")
        if int(self.N) < 1 or int(self.repetitions) < 1 or int(self.holdout) < 0:
            raise ConfigError("need N >= 1, repetitions >= 1 and holdout >= 0")
        if self.threshold is not None and not 0.0 < self.threshold <= 1.0:
            raise ConfigError("threshold must lie in (0, 1]")
        return self

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        """JSON, or YAML when the suffix is .yaml/.yml."""
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        if path.suffix.lower() in (".yaml", ".yml"):
            import yaml
            data = yaml.safe_load(text)
        else:
            try:
                data = json.loads(text)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["method"] = list(self.method)
        return d


def repetition_seeds(seed: int, repetitions: int) -> list[int]:
    """Independent per-repetition seeds derived from the master seed."""
    ss = np.random.SeedSequence(int(seed))
    return [int(c.generate_state(1, np.uint64)[0]) for c in ss.spawn(int(repetitions))]


# one repetition --------------------------------------------------------------

@dataclass
class _Setup:
    case: object
    ptdf: object
    amap: AffineMap
    key_lines: list | None
    det_cost: float
    pool: ScenarioSet | None = None


def _setup(cfg: RunConfig) -> _Setup:
    case = load_case(cfg.case)
    ptdf = compute_ptdf(case)
    key = default_key_lines(case, ptdf, cfg.threshold)
    det = solve_dispatch(build_deterministic(case, ptdf))
    pool = None
    amap = region_map(case)
    if cfg.source == "csv":
        pool = load_scenarios_csv(cfg.csv_path)
        if pool.dim == case.n_region and pool.relative:
            pass  # regional factors
        elif pool.dim == case.n_wind:
            scale = case.wind_forecast if pool.relative else np.ones(case.n_wind)
            amap = AffineMap(np.diag(scale), np.zeros(case.n_wind))
        else:
            raise ConfigError(f"scenario file has {pool.dim} columns; expected {case.n_region} "
                              f"relative regional factors or {case.n_wind} farm columns")
        if pool.N < cfg.N + cfg.holdout:
            raise ConfigError(f"scenario file holds {pool.N} rows, need N + holdout = "
                              f"{cfg.N + cfg.holdout}")
    return _Setup(case, ptdf, amap, key, det.cost if det.optimal else float("nan"), pool)


def _draw(cfg: RunConfig, st: _Setup, seed: int):
    n = cfg.N + cfg.holdout
    if cfg.source == "csv":
        perm = np.random.Generator(np.random.PCG64(seed)).permutation(st.pool.N)[:n]
        z = st.pool.data[perm]
    else:
        sig = cfg.sigmas if cfg.sigmas is not None else st.case.region_sigma
        if len(sig) != st.amap.in_dim:
            raise ConfigError(f"{len(sig)} sigmas for {st.amap.in_dim} regions")
        sampler = sample_gaussian_regions if cfg.source == "gaussian" else sample_uniform_regions
        z = sampler(sig, n, seed).data
    return z[:cfg.N], z[cfg.N:]


def _dispatch_record(sol) -> dict:
    if not sol.optimal:
        return {"status": sol.status}
    return {"status": "optimal", "cost": sol.cost, "g": sol.g.tolist(),
            "eta": None if sol.eta is None else sol.eta.tolist()}


def _run_method(method, cfg, st, z, holdout, timings):
    case, ptdf, amap, key = st.case, st.ptdf, st.amap, st.key_lines
    rps = rows_per_scenario(case, key)
    rec = {"method": method, "rows_per_scenario": rps}
    t0 = time.perf_counter()
    compressed = None
    if method == "none":
        prob = build_scenario_program(case, ptdf, amap(z), key)
        rec["scenario_multiplicity"] = len(z)
    elif method == "hull" or method == "hull-dual":
        compressed = convex_hull(z)
        if method == "hull":
            prob = build_vertex_program(case, ptdf, compressed, key, amap)
            rec["scenario_multiplicity"] = compressed.n_vertices
        else:
            prob, rc = build_hull_dual_counterpart(case, ptdf, compressed, key, amap)
            rec["robust_rows"] = rc.n_robust_rows
            rec["rows_added"] = rc.rows_added
        rec["compression_set"] = compressed.vertex_indices.tolist()
    else:
        compressed = box_hull(z)
        prob, rc = build_box_counterpart(case, ptdf, compressed, key, amap)
        rec["robust_rows"] = rc.n_robust_rows
        rec["rows_added"] = rc.rows_added
        rec["compression_set"] = box_compression_set(compressed)
    timings["build"] = time.perf_counter() - t0
    rec["rows"] = prob.m
    rec["variables"] = prob.n
    rec["scenario_rows"] = int(sum(c for g, c in prob.group_counts().items() if g[0] == "scenario"))

    t0 = time.perf_counter()
    sol = solve_dispatch(prob)
    timings["solve"] = time.perf_counter() - t0
    rec.update(_dispatch_record(sol))

    if compressed is not None:
        kc = len(rec["compression_set"])
        rec["k_c"] = kc
        rec["compression_certificate"] = certify("compression", kc, cfg.N, cfg.beta).to_dict()
        if len(holdout):
            rec["compression_risk"] = estimate_compression_risk(compressed, holdout)
    if sol.optimal and cfg.complexity and method in ("none", "hull"):
        t0 = time.perf_counter()
        cr = solution_complexity(prob, base=sol.lp)
        timings["complexity"] = time.perf_counter() - t0
        rec["s_star"] = cr.s_star
        rec["support"] = cr.support
        rec["degenerate"] = cr.degenerate
        rec["solution_certificate"] = certify("solution", cr.s_star, cfg.N, cfg.beta).to_dict()
    if sol.optimal and len(holdout):
        rec["solution_risk"] = estimate_solution_risk(sol, case, ptdf, amap(holdout), key)
    return rec


def _repetition(cfg: RunConfig, st: _Setup, seed: int):
    z, holdout = _draw(cfg, st, seed)
    out, tim = {"seed": seed, "methods": {}}, {}
    for m in cfg.method:
        tim[m] = {}
        out["methods"][m] = _run_method(m, cfg, st, z, holdout, tim[m])
    return out, tim


# report ------------------------------------------------------------------------

AGG_FIELDS = ("cost", "s_star", "k_c", "rows", "scenario_rows", "compression_risk", "solution_risk")


def _aggregate(records, methods) -> dict:
    agg = {}
    for m in methods:
        rs = [r["methods"][m] for r in records]
        a = {"optimal": sum(r["status"] == "optimal" for r in rs)}
        for f in AGG_FIELDS:
            vals = [r[f] for r in rs if f in r]
            if vals:
                a[f"mean_{f}"] = float(np.mean(vals))
        agg[m] = a
    return agg


def run(cfg: RunConfig, write: bool = True) -> dict:
    """Execute all repetitions and return (and optionally write) the report."""
    cfg.validate()
    t_start = time.perf_counter()
    st = _setup(cfg)
    seeds = repetition_seeds(cfg.seed, cfg.repetitions)
    records, timings = [], []
    for s in seeds:
        rec, tim = _repetition(cfg, st, s)
        records.append(rec)
        timings.append(tim)
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "case": {"name": st.case.name, "buses": st.case.n_bus, "lines": st.case.n_line,
                 "generators": st.case.n_gen, "wind_farms": st.case.n_wind,
                 "regions": st.case.n_region,
                 "key_lines": None if st.key_lines is None else list(st.key_lines)},
        "deterministic_cost": st.det_cost,
        "repetitions": records,
        "aggregate": _aggregate(records, cfg.method),
        "timings": {"total": time.perf_counter() - t_start, "repetitions": timings},
    }
    if write and cfg.output:
        write_report(report, cfg.output)
    return report


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_report(report: dict, path):
    Path(path).write_text(dumps(report), encoding="utf-8")


def deterministic_part(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timings"}


def _certificate_of(rec: dict, kind: str | None) -> dict:
    if kind is None:
        kind = "solution" if "solution_certificate" in rec else "compression"
    key = f"{kind}_certificate"
    if key not in rec:
        raise ConfigError(f"method {rec['method']!r} yields no {kind} certificate")
    return rec[key]


def tune(cfg: RunConfig, n_grid, target_eps: float, kind: str | None = None,
         plot_data=None) -> list[dict]:
    """Increase N along ``n_grid`` until the certified upper risk is <= target_eps.

    The certificate is taken from the first configured method; by default its
    solution certificate when present, else its compression certificate. The
    worst repetition decides. Returns one report per N visited.
    """
    grid = [int(n) for n in n_grid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("n_grid must be strictly ascending and nonempty")
    lead = cfg.method[0]
    reports, rows = [], []
    cum_full = cum_method = 0
    for N in grid:
        rep = run(replace(cfg, N=N, output=None), write=False)
        reports.append(rep)
        recs = [r["methods"][lead] for r in rep["repetitions"]]
        certs = [_certificate_of(r, kind) for r in recs]
        eps_hi = max(c["eps_upper"] for c in certs)
        full_rows = int(np.mean([r["rows_per_scenario"] * N for r in recs]))
        method_rows = float(np.mean([r["rows"] for r in recs]))
        cum_full += full_rows
        cum_method += method_rows
        tim = rep["timings"]["repetitions"]
        rows.append({"N": N, "k": max(c["k"] for c in certs), "eps_upper": eps_hi,
                     "eps_lower": min(c["eps_lower"] for c in certs),
                     "scenario_rows_full": full_rows, "rows_method": method_rows,
                     "cumulative_rows_full": cum_full, "cumulative_rows_method": cum_method,
                     "build_s": sum(t[lead].get("build", 0.0) for t in tim),
                     "solve_s": sum(t[lead].get("solve", 0.0) for t in tim)})
        if eps_hi <= target_eps:
            break
    if plot_data:
        with open(plot_data, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    if rows[-1]["eps_upper"] > target_eps:
        raise TargetUnreachable(f"eps_upper {rows[-1]['eps_upper']:.4g} > {target_eps} "
                                f"at the largest N = {grid[-1]}")
    return reports


def bounds_table(N: int, beta: float, k_max: int, out=None) -> list[dict]:
    """Rows (k, eps_lower, eps_upper, classical) for k = 0..k_max; CSV when out is set.

    The classical column is the Beta-tail bound with Helly dimension h = k
    (zero at k = 0, where the tail sum is empty).
    """
    if not 0 <= k_max <= N:
        raise ConfigError(f"need 0 <= k_max <= N, got k_max={k_max}, N={N}")
    rows = []
    for k in range(k_max + 1):
        lo, hi = epsilon_bounds(k, N, beta)
        cl = classical_epsilon(N, k, beta) if k >= 1 else 0.0
        rows.append({"k": k, "eps_lower": lo, "eps_upper": hi, "classical": cl})
    if out is not None:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=["k", "eps_lower", "eps_upper", "classical"])
            w.writeheader()
            for r in rows:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return rows


def compress_report(z: ScenarioSet, method: str, N: int, beta: float, holdout=None) -> dict:
    """JSON shape for the ``compress`` subcommand."""
    region = convex_hull(z) if method == "hull" else box_hull(z)
    kc = (region.n_vertices if method == "hull" else len(box_compression_set(region)))
    out = {"schema_version": SCHEMA_VERSION, "method": method, "N": N, "dim": z.dim,
           "compressed": region.to_dict(), "k_c": kc,
           "compression_certificate": certify("compression", kc, N, beta).to_dict()}
    if holdout is not None and len(holdout):
        out["compression_risk"] = estimate_compression_risk(region, holdout)
        out["holdout_inside"] = int(np.sum(contains(region, holdout.data)))
    return out


__all__ = ["RunConfig", "run", "tune", "bounds_table", "compress_report", "dumps",
           "write_report", "deterministic_part", "repetition_seeds", "SCHEMA_VERSION",
           "METHODS"]
