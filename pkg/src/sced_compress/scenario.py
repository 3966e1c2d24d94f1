"""Wind forecast-error scenario sets: sampling, CSV ingestion, affine projection."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (DimensionMismatch, InvalidSigma, InvalidSplit, ParseError, SingularMatrix)
from .numerics import lu_factor


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """N scenarios of equal dimension stored as an (N, dim) array."""

    data: np.ndarray
    provenance: dict = field(default_factory=dict)
    relative: bool = False
    labels: tuple | None = None

    def __post_init__(self):
        a = np.array(self.data, dtype=float, copy=True)
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2 or a.shape[0] < 1:
            raise DimensionMismatch("a scenario set needs at least one scenario")
        if not np.all(np.isfinite(a)):
            raise ValueError("scenario entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @property
    def N(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __len__(self):
        return self.N

    def subset(self, idx) -> "ScenarioSet":
        idx = np.asarray(idx, np.int64)
        prov = dict(self.provenance, subset=len(idx))
        return ScenarioSet(self.data[idx], prov, self.relative, self.labels)


@dataclass(frozen=True, eq=False)
class AffineMap:
    """w = matrix @ z + offset, mapping m regional factors to n_w farms."""

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.matrix, float))
        o = np.asarray(self.offset, float).reshape(-1)
        if o.shape[0] != M.shape[0]:
            raise DimensionMismatch("offset length must equal the row count of matrix")
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "offset", o)

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, z) -> np.ndarray:
        return np.asarray(z, float) @ self.matrix.T + self.offset

    def has_full_column_rank(self, tol: float = 1e-10) -> bool:
        M = self.matrix
        if M.shape[0] < M.shape[1]:
            return False
        try:
            lu_factor(M.T @ M, rtol=tol)
        except SingularMatrix:
            return False
        return True

    @classmethod
    def identity(cls, dim: int) -> "AffineMap":
        return cls(np.eye(dim), np.zeros(dim))


def region_map(case) -> AffineMap:
    """Relative regional errors to farm MW: farm f gets forecast_f * z[region_f]."""
    M = np.zeros((case.n_wind, case.n_region))
    M[np.arange(case.n_wind), case.wind_region] = case.wind_forecast
    return AffineMap(M, np.zeros(case.n_wind))


def standard_normals(n: int, seed: int) -> np.ndarray:
    """Box-Muller transform of PCG64 uniforms; pairs fill the output in order."""
    rng = np.random.Generator(np.random.PCG64(seed))
    pairs = (n + 1) // 2
    u1 = 1.0 - rng.random(pairs)  # (0, 1]
    u2 = rng.random(pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(2.0 * math.pi * u2)
    z[1::2] = r * np.sin(2.0 * math.pi * u2)
    return z[:n]


def sample_gaussian_regions(sigmas, N: int, seed: int) -> ScenarioSet:
    """N i.i.d. zero-mean diagonal Gaussian draws of relative regional errors."""
    sigmas = np.atleast_1d(np.asarray(sigmas, float))
    if sigmas.size == 0 or np.any(~np.isfinite(sigmas)) or np.any(sigmas <= 0):
        raise InvalidSigma(f"standard deviations must be positive, got {sigmas}")
    if N < 1:
        raise ValueError("N must be at least 1")
    z = standard_normals(N * sigmas.size, seed).reshape(N, sigmas.size) * sigmas
    prov = {"sampler": "gaussian", "seed": int(seed), "sigmas": sigmas.tolist()}
    return ScenarioSet(z, prov, relative=True)


def sample_uniform_regions(half_widths, N: int, seed: int) -> ScenarioSet:
    """N i.i.d. draws uniform on the box [-h, h] per region."""
    h = np.atleast_1d(np.asarray(half_widths, float))
    if np.any(h <= 0):
        raise InvalidSigma("half widths must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    z = (2.0 * rng.random((N, h.size)) - 1.0) * h
    return ScenarioSet(z, {"sampler": "uniform", "seed": int(seed), "half_widths": h.tolist()},
                       relative=True)


def project_to_farms(factors: ScenarioSet, amap: AffineMap) -> ScenarioSet:
    if amap.in_dim != factors.dim:
        raise DimensionMismatch(f"map expects dim {amap.in_dim}, scenarios have {factors.dim}")
    prov = dict(factors.provenance, projected=True)
    return ScenarioSet(amap(factors.data), prov, relative=False)


def load_scenarios_csv(path, dim: int | None = None) -> ScenarioSet:
    """One scenario per row; an optional non-numeric header row is skipped.

    A comment line ``# relative`` marks the values as relative (p.u.) errors.
    """
    path = Path(path)
    rows, relative, header_seen = [], False, False
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, rec in enumerate(csv.reader(fh), 1):
            if not rec or all(not t.strip() for t in rec):
                continue
            first = rec[0].strip()
            if first.startswith("#"):
                relative |= "relative" in ",".join(rec).lower()
                continue
            try:
                vals = [float(t) for t in rec]
            except ValueError:
                if not rows and not header_seen and not any(_is_number(t) for t in rec):
                    header_seen = True
                    continue
                raise ParseError("non-numeric token in scenario row", lineno) from None
            if dim is not None and len(vals) != dim:
                raise DimensionMismatch(f"row {lineno} has {len(vals)} columns, expected {dim}")
            if rows and len(vals) != len(rows[0]):
                raise ParseError("ragged scenario rows", lineno)
            rows.append(vals)
    if not rows:
        raise ParseError(f"empty scenario file {path}")
    return ScenarioSet(np.array(rows), {"source": str(path)}, relative=relative)


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def save_scenarios_csv(s: ScenarioSet, path, header: bool = True):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if s.relative:
            fh.write("# relative\n")
        w = csv.writer(fh)
        if header:
            w.writerow([f"w{q}" for q in range(s.dim)])
        w.writerows([[repr(float(v)) for v in row] for row in s.data])


def split_holdout(s: ScenarioSet, n_train: int, seed: int) -> tuple[ScenarioSet, ScenarioSet]:
    if not 1 <= n_train < s.N:
        raise InvalidSplit(f"need 1 <= n_train < N = {s.N}, got {n_train}")
    perm = np.random.Generator(np.random.PCG64(seed)).permutation(s.N)
    return s.subset(perm[:n_train]), s.subset(perm[n_train:])
