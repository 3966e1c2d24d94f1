"""Grid case model, case-file parser and DC power transfer distribution factors."""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (DimensionMismatch, DisconnectedNetwork, ParseError, SingularMatrix,
                     ValidationError)
from .numerics import lu_factor, lu_solve

SECTIONS = {
    "buses": ("id", "slack"),
    "lines": ("from", "to", "x", "cap"),
    "generators": ("bus", "pmin", "pmax", "ramp_down", "ramp_up", "cost"),
    "loads": ("bus", "mw"),
    "wind": ("bus", "forecast", "capacity", "region"),
    "regions": ("id", "sigma"),
}
BUNDLED = {"case3": "case3.txt", "case6": "case6.txt", "case118": "case118.txt"}


@dataclass(frozen=True, eq=False)
class GridCase:
    """DC network data. All arrays are indexed by position; bus references are
    positions into ``bus_ids``, region references positions into ``region_ids``."""

    bus_ids: np.ndarray
    slack: int
    line_from: np.ndarray
    line_to: np.ndarray
    line_x: np.ndarray
    line_cap: np.ndarray
    gen_bus: np.ndarray
    gen_min: np.ndarray
    gen_max: np.ndarray
    ramp_down: np.ndarray
    ramp_up: np.ndarray
    gen_cost: np.ndarray
    load_bus: np.ndarray
    load_mw: np.ndarray
    wind_bus: np.ndarray
    wind_forecast: np.ndarray
    wind_capacity: np.ndarray
    wind_region: np.ndarray
    region_ids: np.ndarray
    region_sigma: np.ndarray
    name: str = "case"
    meta: dict = field(default_factory=dict)

    n_bus = property(lambda self: len(self.bus_ids))
    n_line = property(lambda self: len(self.line_x))
    n_gen = property(lambda self: len(self.gen_bus))
    n_load = property(lambda self: len(self.load_bus))
    n_wind = property(lambda self: len(self.wind_bus))
    n_region = property(lambda self: len(self.region_ids))

    @property
    def net_demand(self) -> float:
        return float(self.load_mw.sum() - self.wind_forecast.sum())

    def validate(self):
        if self.line_x.size and np.any(self.line_x <= 0):
            raise ValidationError("reactance", "line reactances must be positive")
        if np.any(self.gen_min > self.gen_max):
            raise ValidationError("generator limits", "pmin exceeds pmax")
        if np.any(self.ramp_down > 0) or np.any(self.ramp_up < 0):
            raise ValidationError("ramp", "need ramp_down <= 0 <= ramp_up")
        if np.any(self.line_cap <= 0):
            raise ValidationError("capacity", "line capacities must be positive")
        if self.gen_max.sum() < self.net_demand:
            raise ValidationError("capacity", "generation cannot cover net demand")
        for arr in (self.line_from, self.line_to, self.gen_bus, self.load_bus, self.wind_bus):
            if arr.size and (arr.min() < 0 or arr.max() >= self.n_bus):
                raise ValidationError("bus", "reference to an undeclared bus")
        if self.wind_region.size and (self.wind_region.min() < 0
                                      or self.wind_region.max() >= self.n_region):
            raise ValidationError("region", "wind farm refers to an undeclared region")
        if np.any(self.line_from == self.line_to):
            raise ValidationError("line", "line connects a bus to itself")
        if np.any(self.wind_forecast < 0) or np.any(self.wind_forecast > self.wind_capacity):
            raise ValidationError("wind", "need 0 <= forecast <= capacity")
        if np.any(self.region_sigma <= 0):
            raise ValidationError("region", "region sigma must be positive")
        return self

    def with_line_caps(self, caps) -> "GridCase":
        return _replace(self, line_cap=np.asarray(caps, float))

    def with_ramps(self, down, up) -> "GridCase":
        return _replace(self, ramp_down=np.broadcast_to(np.asarray(down, float), (self.n_gen,)).copy(),
                        ramp_up=np.broadcast_to(np.asarray(up, float), (self.n_gen,)).copy())


def _replace(case, **kw):
    from dataclasses import replace
    return replace(case, **kw).validate()


def make_case(buses, lines, generators, loads=(), wind=(), regions=(), name="case") -> GridCase:
    """Build a validated case from row tuples laid out as in the case file."""
    buses = [tuple(b) for b in buses]
    ids = [int(b[0]) for b in buses]
    if len(set(ids)) != len(ids):
        raise ValidationError("bus", "duplicate bus id")
    slack = [k for k, b in enumerate(buses) if int(b[1]) == 1]
    if len(slack) != 1:
        raise ValidationError("slack", f"exactly one slack bus required, found {len(slack)}")
    pos = {b: k for k, b in enumerate(ids)}
    regions = [tuple(r) for r in regions]
    rpos = {int(r[0]): k for k, r in enumerate(regions)}

    def bus(b):
        try:
            return pos[int(b)]
        except KeyError:
            raise ValidationError("bus", f"unknown bus {b}") from None

    def region(r):
        try:
            return rpos[int(r)]
        except KeyError:
            raise ValidationError("region", f"wind farm refers to undeclared region {r}") from None

    col = lambda rows, k, f=float: np.array([f(r[k]) for r in rows], dtype=float if f is float else np.int64)
    lines, generators, loads, wind = map(list, (lines, generators, loads, wind))
    return GridCase(
        bus_ids=np.array(ids, np.int64), slack=slack[0],
        line_from=np.array([bus(l[0]) for l in lines], np.int64),
        line_to=np.array([bus(l[1]) for l in lines], np.int64),
        line_x=col(lines, 2), line_cap=col(lines, 3),
        gen_bus=np.array([bus(g[0]) for g in generators], np.int64),
        gen_min=col(generators, 1), gen_max=col(generators, 2),
        ramp_down=col(generators, 3), ramp_up=col(generators, 4), gen_cost=col(generators, 5),
        load_bus=np.array([bus(d[0]) for d in loads], np.int64), load_mw=col(loads, 1),
        wind_bus=np.array([bus(w[0]) for w in wind], np.int64),
        wind_forecast=col(wind, 1), wind_capacity=col(wind, 2),
        wind_region=np.array([region(w[3]) for w in wind], np.int64),
        region_ids=np.array([int(r[0]) for r in regions], np.int64),
        region_sigma=col(regions, 1), name=name,
    ).validate()


def parse_case(path) -> GridCase:
    """Read a case file (format in docs/case_format.md)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e
    meta, tables, section = {}, {k: [] for k in SECTIONS}, None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError("malformed section header", lineno)
            section = line[1:-1].strip().lower()
            if section not in SECTIONS:
                raise ParseError(f"unknown section [{section}]", lineno)
            continue
        if section is None:
            if "=" not in line:
                raise ParseError("expected key = value before the first section", lineno)
            k, v = (s.strip() for s in line.split("=", 1))
            meta[k] = v
            continue
        fields = SECTIONS[section]
        toks = line.replace(",", " ").split()
        if len(toks) != len(fields):
            raise ParseError(f"[{section}] expects {len(fields)} fields, got {len(toks)}", lineno)
        row = []
        for name, tok in zip(fields, toks):
            try:
                row.append(float(tok))
            except ValueError:
                raise ParseError(f"non-numeric value {tok!r}", lineno, name) from None
        tables[section].append(tuple(row))
    for required in ("buses", "lines", "generators"):
        if not tables[required]:
            raise ParseError(f"section [{required}] missing or empty")
    case = make_case(tables["buses"], tables["lines"], tables["generators"], tables["loads"],
                     tables["wind"], tables["regions"], name=meta.get("name", path.stem))
    object.__setattr__(case, "meta", meta)
    return case


def write_case(case: GridCase, path):
    ids = case.bus_ids
    out = [f"name = {case.name}"]
    out += [f"{k} = {v}" for k, v in case.meta.items() if k != "name"]
    out += ["", "[buses]", "# id slack"]
    out += [f"{ids[k]} {int(k == case.slack)}" for k in range(case.n_bus)]
    out += ["", "[lines]", "# from to x_pu cap_mw"]
    out += [f"{ids[f]} {ids[t]} {x:.6g} {c:.6g}" for f, t, x, c in
            zip(case.line_from, case.line_to, case.line_x, case.line_cap)]
    out += ["", "[generators]", "# bus pmin pmax ramp_down ramp_up cost"]
    out += [f"{ids[b]} {a:.6g} {bb:.6g} {rd:.6g} {ru:.6g} {c:.6g}" for b, a, bb, rd, ru, c in
            zip(case.gen_bus, case.gen_min, case.gen_max, case.ramp_down, case.ramp_up, case.gen_cost)]
    out += ["", "[loads]", "# bus mw"]
    out += [f"{ids[b]} {d:.6g}" for b, d in zip(case.load_bus, case.load_mw)]
    out += ["", "[wind]", "# bus forecast_mw capacity_mw region"]
    out += [f"{ids[b]} {f:.6g} {c:.6g} {case.region_ids[r]}" for b, f, c, r in
            zip(case.wind_bus, case.wind_forecast, case.wind_capacity, case.wind_region)]
    out += ["", "[regions]", "# id sigma"]
    out += [f"{i} {s:.6g}" for i, s in zip(case.region_ids, case.region_sigma)]
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def bundled_case_path(name: str) -> Path:
    return Path(str(resources.files("sced_compress") / "data" / BUNDLED[name]))


def load_case(name_or_path) -> GridCase:
    """Parse a bundled case by short name (case3, case6, case118) or a file path."""
    if str(name_or_path) in BUNDLED:
        return parse_case(bundled_case_path(str(name_or_path)))
    return parse_case(name_or_path)


@dataclass(frozen=True, eq=False)
class PtdfPartition:
    H: np.ndarray
    Hg: np.ndarray
    Hd: np.ndarray
    Hw: np.ndarray


def incidence(case: GridCase) -> np.ndarray:
    C = np.zeros((case.n_line, case.n_bus))
    C[np.arange(case.n_line), case.line_from] = 1.0
    C[np.arange(case.n_line), case.line_to] = -1.0
    return C


def compute_ptdf(case: GridCase) -> PtdfPartition:
    """Line-flow sensitivities to bus injections balanced at the slack bus."""
    C = incidence(case)
    Bf = C / case.line_x[:, None]
    Bbus = C.T @ Bf
    keep = np.delete(np.arange(case.n_bus), case.slack)
    try:
        lu = lu_factor(Bbus[np.ix_(keep, keep)])
    except SingularMatrix as e:
        raise DisconnectedNetwork("reduced susceptance matrix is singular") from e
    H = np.zeros((case.n_line, case.n_bus))
    # H_red = Bf_red B_red^-1  ->  H_red^T = B_red^-T Bf_red^T, B_red symmetric
    H[:, keep] = lu_solve(lu, Bf[:, keep].T).T
    return PtdfPartition(H, H[:, case.gen_bus], H[:, case.load_bus], H[:, case.wind_bus])


def line_flows(p: PtdfPartition, g, d, w) -> np.ndarray:
    g, d, w = (np.asarray(v, float) for v in (g, d, w))
    if g.shape[-1] != p.Hg.shape[1] or d.shape[-1] != p.Hd.shape[1] or w.shape[-1] != p.Hw.shape[1]:
        raise DimensionMismatch("injection vectors do not match the PTDF partition")
    return p.Hg @ g - p.Hd @ d + p.Hw @ w
