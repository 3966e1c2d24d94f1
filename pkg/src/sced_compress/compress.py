"""Convex-hull and box compression of scenario sets.

The hull is built incrementally (beneath-beyond): start from a full-dimensional
simplex, then insert each remaining point by deleting the facets it sees and
coning the horizon ridges to it. Facets are simplices, so a polytope face with
more than ``dim`` vertices is stored as several coplanar halfspaces. This is
harmless for membership tests and for the dual robust counterpart.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput, DimensionMismatch, DimensionTooHigh, EmptyHoldout
from .scenario import ScenarioSet

MAX_DIM = 6
MEMBER_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Polytope:
    """Hull of a scenario set: vertices (members of the input) and A w <= b."""

    dim: int
    vertex_indices: np.ndarray
    vertices: np.ndarray
    A: np.ndarray
    b: np.ndarray
    n_source: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_indices)

    @property
    def n_halfspaces(self) -> int:
        return len(self.b)

    @property
    def scale(self) -> float:
        return max(1.0, float(np.abs(self.vertices).max()))

    def to_dict(self) -> dict:
        return {"type": "polytope", "dim": self.dim,
                "vertex_indices": self.vertex_indices.tolist(),
                "vertices": self.vertices.tolist(),
                "halfspaces": {"A": self.A.tolist(), "b": self.b.tolist()},
                "n_source": self.n_source}


@dataclass(frozen=True, eq=False)
class Box:
    """Componentwise [lower, upper]; ``touching[q]`` lists (argmin, argmax) index sets."""

    dim: int
    lower: np.ndarray
    upper: np.ndarray
    touching: tuple
    n_source: int = 0

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def radius(self) -> np.ndarray:
        return 0.5 * (self.upper - self.lower)

    @property
    def scale(self) -> float:
        return max(1.0, float(np.abs(np.concatenate([self.lower, self.upper])).max()))

    def corners(self) -> np.ndarray:
        pts = itertools.product(*zip(self.lower, self.upper))
        return np.array(list(pts), dtype=float)

    @property
    def touching_scenarios(self) -> list:
        return sorted({i for lo, hi in self.touching for i in (*lo, *hi)})

    def to_dict(self) -> dict:
        return {"type": "box", "dim": self.dim, "lower": self.lower.tolist(),
                "upper": self.upper.tolist(),
                "touching": [[list(lo), list(hi)] for lo, hi in self.touching],
                "compression_set": box_compression_set(self),
                "n_source": self.n_source}


def _points(s) -> np.ndarray:
    if isinstance(s, ScenarioSet):
        return s.data
    a = np.asarray(s, float)
    return a[:, None] if a.ndim == 1 else a


# convex hull ---------------------------------------------------------------

def _facet_plane(P, verts, interior):
    V = P[list(verts)]
    if len(verts) == 1:
        n = np.ones(1)
    else:
        E = V[1:] - V[0]
        n = np.linalg.svd(E)[2][-1]
    n = n / np.linalg.norm(n)
    c = float(n @ V[0])
    if n @ interior > c:
        n, c = -n, -c
    return n, c


def _initial_simplex(P, tol):
    d = P.shape[1]
    chosen = [int(np.argmin(P[:, 0]))]
    for _ in range(d):
        base = P[chosen[0]]
        E = (P[chosen[1:]] - base) if len(chosen) > 1 else np.zeros((0, d))
        R = P - base
        if len(E):
            Q = np.linalg.qr(E.T)[0]
            R = R - (R @ Q) @ Q.T
        dist = np.linalg.norm(R, axis=1)
        k = int(np.argmax(dist))
        if dist[k] <= tol:
            raise DegenerateInput("points lie in a lower-dimensional affine subspace; "
                                  "project them before computing the hull")
        chosen.append(k)
    return chosen


def _hull_1d(P):
    lo, hi = int(np.argmin(P[:, 0])), int(np.argmax(P[:, 0]))
    if P[lo, 0] == P[hi, 0]:
        raise DegenerateInput("all points coincide")
    return [lo, hi], np.array([[-1.0], [1.0]]), np.array([-P[lo, 0], P[hi, 0]])


def _beneath_beyond(P):
    N, d = P.shape
    span = float(np.ptp(P, axis=0).max())
    tol = 1e-12 * max(span, float(np.abs(P).max()), 1.0)
    simplex = _initial_simplex(P, 1e-9 * max(span, 1e-300))
    interior = P[simplex].mean(axis=0)

    facets = {}      # id -> vertex tuple
    normals, offsets = {}, {}
    ridges = {}      # frozenset(d-1 verts) -> set of facet ids
    next_id = [0]

    def add_facet(verts):
        fid = next_id[0]
        next_id[0] += 1
        verts = tuple(sorted(verts))
        n, c = _facet_plane(P, verts, interior)
        facets[fid], normals[fid], offsets[fid] = verts, n, c
        for r in itertools.combinations(verts, d - 1):
            ridges.setdefault(frozenset(r), set()).add(fid)
        return fid

    def drop_facet(fid):
        verts = facets.pop(fid)
        normals.pop(fid)
        offsets.pop(fid)
        for r in itertools.combinations(verts, d - 1):
            key = frozenset(r)
            ridges[key].discard(fid)
            if not ridges[key]:
                del ridges[key]

    for skip in range(d + 1):
        add_facet([v for k, v in enumerate(simplex) if k != skip])

    in_simplex = set(simplex)
    # farthest-first insertion keeps the intermediate hulls large
    order = np.argsort(-np.linalg.norm(P - interior, axis=1), kind="stable")
    for p in order:
        p = int(p)
        if p in in_simplex:
            continue
        ids = np.fromiter(facets.keys(), dtype=np.int64)
        Nm = np.array([normals[i] for i in ids])
        off = np.array([offsets[i] for i in ids])
        vis = ids[Nm @ P[p] - off > tol]
        if vis.size == 0:
            continue
        visible = set(vis.tolist())
        horizon = []
        for fid in visible:
            for r in itertools.combinations(facets[fid], d - 1):
                other = ridges[frozenset(r)] - {fid}
                if not (other & visible):
                    horizon.append(r)
        for fid in visible:
            drop_facet(fid)
        for r in horizon:
            add_facet((*r, p))
    verts = sorted({v for vs in facets.values() for v in vs})
    ids = list(facets)
    A = np.array([normals[i] for i in ids])
    b = np.array([offsets[i] for i in ids])
    return verts, A, b


def convex_hull(s) -> Polytope:
    """Hull vertices (indices into s) and outward facet halfspaces."""
    P = _points(s)
    N, d = P.shape
    if d > MAX_DIM:
        raise DimensionTooHigh(f"hull dimension {d} exceeds {MAX_DIM}; project first")
    if d == 1:
        verts, A, b = _hull_1d(P)
    else:
        if N < d + 1:
            raise DegenerateInput(f"need at least {d + 1} points in dimension {d}")
        verts, A, b = _beneath_beyond(P)
    verts = np.array(sorted(verts), np.int64)
    return Polytope(d, verts, P[verts].copy(), A, b, N)


# box -----------------------------------------------------------------------

def box_hull(s) -> Box:
    P = _points(s)
    if P.shape[0] == 0:
        raise EmptyHoldout("empty scenario set")
    lo, hi = P.min(axis=0), P.max(axis=0)
    touching = tuple((tuple(np.flatnonzero(P[:, q] == lo[q]).tolist()),
                      tuple(np.flatnonzero(P[:, q] == hi[q]).tolist()))
                     for q in range(P.shape[1]))
    return Box(P.shape[1], lo, hi, touching, P.shape[0])


def box_compression_set(box: Box) -> list:
    """Smallest set of scenarios attaining every bound; lexicographically first on ties."""
    need = [set(t) for pair in box.touching for t in pair]
    if all(len(s) == 1 for s in need):
        return sorted({next(iter(s)) for s in need})
    cand = sorted(set().union(*need))
    for size in range(1, len(need) + 1):
        for combo in itertools.combinations(cand, size):
            cs = set(combo)
            if all(s & cs for s in need):
                return list(combo)
    return cand


def compression_function(s, method: str) -> list:
    if method == "hull":
        return convex_hull(s).vertex_indices.tolist()
    if method == "box":
        return box_compression_set(box_hull(s))
    raise ValueError(f"unknown compression method {method!r}")


def compression_complexity(s, method: str) -> int:
    return len(compression_function(s, method))


# membership and compression risk --------------------------------------------

def contains(region, w, tol: float = MEMBER_TOL):
    """Closed-set membership; w may be a single vector or an (n, dim) array."""
    W = np.asarray(w, float)
    single = W.ndim == 1
    W = np.atleast_2d(W)
    if W.shape[1] != region.dim:
        raise DimensionMismatch(f"point dim {W.shape[1]} != set dim {region.dim}")
    t = tol * region.scale
    if isinstance(region, Box):
        inside = np.all((W >= region.lower - t) & (W <= region.upper + t), axis=1)
    else:
        inside = np.all(W @ region.A.T <= region.b + t, axis=1)
    return bool(inside[0]) if single else inside


def estimate_compression_risk(compressed, holdout) -> float:
    """Fraction of holdout scenarios that would change the compressed set.

    For hull and box compression a new point changes the compression exactly
    when it lies outside the compressed set; boundary points count as inside.
    """
    W = _points(holdout)
    if W.shape[0] == 0:
        raise EmptyHoldout("holdout set is empty")
    return float(np.mean(~contains(compressed, W)))
