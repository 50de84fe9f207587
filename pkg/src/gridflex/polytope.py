"""H-polytope machinery: feasibility, redundancy, projection, 2-D geometry.

A polytope is the set ``{x : A x <= b}`` with named dimensions.  The
operations here are exact up to LP tolerances; projection uses
Fourier-Motzkin elimination with aggressive redundancy pruning after
every step, which keeps the intermediate row counts near the minimal
representation instead of letting them explode combinatorially.

Equality constraints are always encoded as inequality pairs, so flat
sets (Chebyshev radius zero) are first-class citizens throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (InfeasibleSetError, ProjectionSizeError,
                     UnboundedSetError)
from .lp import FEASIBILITY_TOL, maximize

REDUNDANCY_TOL = 1e-7
DEFAULT_ROW_CAP = 200_000
_ZERO_ROW_TOL = 1e-12
_DUP_DECIMALS = 9


@dataclass(frozen=True)
class HPolytope:
    """Inequality description ``A x <= b`` with labeled dimensions."""

    A: np.ndarray
    b: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.A, dtype=float))
        if a.size == 0:
            a = a.reshape(0, len(self.labels))
        vec = np.asarray(self.b, dtype=float).reshape(-1)
        if a.shape[0] != vec.shape[0]:
            raise ValueError("row counts of A and b disagree")
        if a.shape[1] != len(self.labels):
            raise ValueError("column count of A disagrees with labels")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "b", vec)
        object.__setattr__(self, "labels", tuple(str(l) for l in self.labels))

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def nrows(self) -> int:
        return self.A.shape[0]

    def column(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown dimension label '{label}'")

    def select_rows(self, mask) -> "HPolytope":
        return HPolytope(self.A[mask], self.b[mask], self.labels)

    def contains_points(self, points: np.ndarray, tol: float = FEASIBILITY_TOL):
        """Boolean membership for an array of points (last axis = dim)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all(pts @ self.A.T <= self.b + tol, axis=-1)

    def to_json_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "A": [[float(v) for v in row] for row in self.A],
            "b": [float(v) for v in self.b],
        }

    @classmethod
    def from_json_dict(cls, raw: dict) -> "HPolytope":
        return cls(A=np.array(raw["A"], dtype=float),
                   b=np.array(raw["b"], dtype=float),
                   labels=tuple(raw["labels"]))

    def dump_json(self, path: str, meta: dict | None = None) -> None:
        record = {} if meta is None else {"meta": meta}
        record.update(self.to_json_dict())
        with open(path, "w") as fh:
            json.dump(record, fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load_json(cls, path: str) -> "HPolytope":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def _empty(labels) -> HPolytope:
    """Canonical empty polytope: the unsatisfiable row 0.x <= -1."""
    d = len(labels)
    return HPolytope(np.zeros((1, d)), np.array([-1.0]), tuple(labels))


def normalize_rows(poly: HPolytope, merge: bool = True) -> HPolytope:
    """Scale every row to unit norm; drop vacuous rows; merge duplicates.

    Zero rows with nonnegative offsets hold everywhere and disappear; a
    zero row with a negative offset makes the set empty and collapses
    the description to the canonical empty system.  Rows sharing one
    normal direction keep only the tightest offset.
    """
    a, b = poly.A, poly.b
    norms = np.linalg.norm(a, axis=1)
    zero = norms <= _ZERO_ROW_TOL
    if np.any(zero & (b < -_ZERO_ROW_TOL)):
        return _empty(poly.labels)
    a, b, norms = a[~zero], b[~zero], norms[~zero]
    if a.shape[0] == 0:
        return HPolytope(a.reshape(0, poly.dim), b, poly.labels)
    a = a / norms[:, None]
    b = b / norms
    if not merge:
        return HPolytope(a, b, poly.labels)
    key = np.round(a, _DUP_DECIMALS)
    order = np.lexsort(key.T[::-1])
    best: dict[bytes, int] = {}
    keep_offset = {}
    for i in order:
        tag = key[i].tobytes()
        if tag not in best or b[i] < keep_offset[tag] - 1e-15:
            best[tag] = i
            keep_offset[tag] = b[i]
    keep = np.zeros(a.shape[0], dtype=bool)
    keep[list(best.values())] = True
    return HPolytope(a[keep], b[keep], poly.labels)


def chebyshev_center(poly: HPolytope):
    """Radius and center of a largest inscribed ball.

    The radius is zero for flat but nonempty sets.  Returns
    ``(None, None)`` when the set is empty.
    """
    p = normalize_rows(poly)
    if p.nrows == 0:
        return np.inf, np.zeros(p.dim)
    a_aug = np.hstack([p.A, np.ones((p.nrows, 1))])
    c = np.zeros(p.dim + 1)
    c[-1] = 1.0
    bounds = [(None, None)] * p.dim + [(0.0, None)]
    res = maximize(c, a_aug, p.b, bounds=bounds)
    if res.status == "infeasible":
        return None, None
    if res.status == "unbounded":
        # Unbounded inscribed radius: cap it to recover a witness point.
        bounds[-1] = (0.0, 1.0)
        res = maximize(c, a_aug, p.b, bounds=bounds)
        if not res.optimal:
            return None, None
    return float(res.x[-1]), res.x[:-1]


def is_feasible(poly: HPolytope):
    """Whether the set is nonempty, plus an interior-or-boundary witness."""
    radius, center = chebyshev_center(poly)
    if radius is None:
        return False, None
    return True, center


def _bounds_from_rows(a: np.ndarray, b: np.ndarray):
    """Per-variable bounds implied by single-coefficient rows.

    Only rows of the system itself are used, so any pruning decision
    based on these bounds stays valid while those rows are present.
    """
    dim = a.shape[1]
    lo = np.full(dim, -np.inf)
    hi = np.full(dim, np.inf)
    if a.shape[0] == 0:
        return lo, hi
    support = np.abs(a) > 1e-12
    single = support.sum(axis=1) == 1
    for i in np.nonzero(single)[0]:
        j = int(np.argmax(support[i]))
        coef = a[i, j]
        if coef > 0:
            hi[j] = min(hi[j], b[i] / coef)
        else:
            lo[j] = max(lo[j], b[i] / coef)
    return lo, hi


def _box_redundant(a: np.ndarray, b: np.ndarray, lo, hi, tol: float):
    """Rows whose maximum over the row-implied box stays below ``b - tol``."""
    pos = np.clip(a, 0.0, None)
    neg = np.clip(a, None, 0.0)
    box_max = pos @ np.where(np.isfinite(hi), hi, 0.0) + \
        neg @ np.where(np.isfinite(lo), lo, 0.0)
    support = (a != 0.0).astype(float)
    unbounded = (~np.isfinite(hi) | ~np.isfinite(lo)).astype(float)
    touches_unbounded = (support @ unbounded) > 0.5
    return (~touches_unbounded) & (box_max <= b - tol)


def remove_redundant(poly: HPolytope, tol: float = REDUNDANCY_TOL) -> HPolytope:
    """Minimal representation with the feasible set unchanged.

    A row is dropped when maximizing its left-hand side over the
    remaining rows cannot exceed its offset minus ``tol``.  Cheap
    filters run first: duplicate merging during normalization, then a
    box filter against the single-variable bound rows of the system.
    The LP pass keeps a cloud of feasible points collected from LP
    optima; any row already tight at a cloud point is provably needed
    and skips its LP.
    """
    p = normalize_rows(poly)
    if p.nrows <= 1:
        feasible, _ = is_feasible(p)
        if not feasible:
            raise InfeasibleSetError("cannot reduce an empty polytope")
        return p
    feasible, witness = is_feasible(p)
    if not feasible:
        raise InfeasibleSetError("cannot reduce an empty polytope")

    a, b = p.A, p.b
    keep = np.ones(p.nrows, dtype=bool)
    lo, hi = _bounds_from_rows(a, b)
    keep[_box_redundant(a, b, lo, hi, tol)] = False

    cloud = [witness]
    for i in range(p.nrows):
        if not keep[i]:
            continue
        scores = np.array([float(a[i] @ w) for w in cloud])
        if np.any(scores > b[i] - tol):
            continue
        others = keep.copy()
        others[i] = False
        if not np.any(others):
            continue
        res = maximize(a[i], a[others], b[others])
        if res.status == "unbounded":
            continue
        if not res.optimal:
            raise InfeasibleSetError("row subsystem unexpectedly infeasible")
        if res.value <= b[i] - tol:
            keep[i] = False
        elif np.all(a[keep] @ res.x <= b[keep] + FEASIBILITY_TOL):
            cloud.append(res.x)
    return p.select_rows(keep)


def eliminate_variable(poly: HPolytope, var: str) -> HPolytope:
    """One exact Fourier-Motzkin step: project out dimension ``var``.

    Every positive-coefficient row pairs with every negative one; rows
    not involving the variable pass through.  No pruning happens here;
    :func:`project` interleaves elimination with redundancy removal.
    """
    k = poly.column(var)
    a, b = poly.A, poly.b
    col = a[:, k] if a.size else np.zeros(0)
    pos = col > _ZERO_ROW_TOL
    neg = col < -_ZERO_ROW_TOL
    zero = ~(pos | neg)
    rest = np.delete(a, k, axis=1)
    labels = poly.labels[:k] + poly.labels[k + 1:]

    blocks_a = [rest[zero]]
    blocks_b = [b[zero]]
    if np.any(pos) and np.any(neg):
        cp = col[pos]
        cn = -col[neg]
        ap, bp = rest[pos], b[pos]
        an, bn = rest[neg], b[neg]
        new_a = cp[:, None, None] * an[None, :, :] + cn[None, :, None] * ap[:, None, :]
        new_b = cp[:, None] * bn[None, :] + cn[None, :] * bp[:, None]
        blocks_a.append(new_a.reshape(-1, rest.shape[1]))
        blocks_b.append(new_b.reshape(-1))
    combined = HPolytope(np.vstack(blocks_a), np.concatenate(blocks_b), labels)
    return normalize_rows(combined)


def _pair_cost(poly: HPolytope, label: str) -> int:
    col = poly.A[:, poly.column(label)]
    pos = int(np.sum(col > _ZERO_ROW_TOL))
    neg = int(np.sum(col < -_ZERO_ROW_TOL))
    return pos * neg


def project(poly: HPolytope, keep, tol: float = REDUNDANCY_TOL,
            row_cap: int = DEFAULT_ROW_CAP) -> HPolytope:
    """Exact projection onto the ``keep`` dimensions.

    Variables are eliminated one at a time, cheapest first (smallest
    positive-times-negative row product), with redundancy removal after
    every step.  When a step would generate more rows than ``row_cap`` a
    :class:`ProjectionSizeError` is raised instead of thrashing.
    """
    keep = [str(l) for l in keep]
    for label in keep:
        if label not in poly.labels:
            raise KeyError(f"unknown dimension label '{label}'")
    current = remove_redundant(poly, tol)
    while True:
        extra = [l for l in current.labels if l not in keep]
        if not extra:
            break
        label = min(extra, key=lambda l: (_pair_cost(current, l), l))
        col = current.A[:, current.column(label)]
        pos = int(np.sum(col > _ZERO_ROW_TOL))
        neg = int(np.sum(col < -_ZERO_ROW_TOL))
        predicted = current.nrows - pos - neg + pos * neg
        if predicted > row_cap:
            raise ProjectionSizeError(
                f"eliminating '{label}' would create {predicted} rows "
                f"(cap {row_cap}); retry with a coarser redundancy tolerance "
                "or a larger row cap")
        current = remove_redundant(eliminate_variable(current, label), tol)
    order = [current.column(l) for l in keep]
    return HPolytope(current.A[:, order], current.b, tuple(keep))


@dataclass(frozen=True)
class ContainmentResult:
    contained: bool
    max_violation: float
    worst_row: int | None
    witness: np.ndarray | None

    def __bool__(self) -> bool:
        return self.contained


def contains(outer: HPolytope, inner: HPolytope,
             tol: float = 1e-6) -> ContainmentResult:
    """Whether ``inner`` is a subset of ``outer`` (both over the same labels).

    Each face of ``outer`` is pushed as far as ``inner`` allows; the
    worst overshoot is reported together with the witness point that
    achieves it.  An empty ``inner`` is an error rather than vacuously
    contained.
    """
    if outer.labels != inner.labels:
        raise ValueError("containment requires identical dimension labels")
    feasible, _ = is_feasible(inner)
    if not feasible:
        raise InfeasibleSetError("inner polytope is empty")
    p = normalize_rows(outer)
    worst = 0.0
    worst_row = None
    witness = None
    for i in range(p.nrows):
        res = maximize(p.A[i], inner.A, inner.b)
        if res.status == "unbounded":
            return ContainmentResult(False, np.inf, i, None)
        if not res.optimal:
            raise InfeasibleSetError("inner polytope is empty")
        violation = res.value - p.b[i]
        if violation > worst:
            worst, worst_row, witness = float(violation), i, res.x
    return ContainmentResult(bool(worst <= tol), float(worst), worst_row, witness)


def bounding_box(poly: HPolytope):
    """Tight per-dimension bounds via 2*dim support LPs."""
    lo = np.full(poly.dim, -np.inf)
    hi = np.full(poly.dim, np.inf)
    for j in range(poly.dim):
        c = np.zeros(poly.dim)
        c[j] = 1.0
        res = maximize(c, poly.A, poly.b)
        if res.status == "infeasible":
            raise InfeasibleSetError("cannot bound an empty polytope")
        if res.optimal:
            hi[j] = res.value
        res = maximize(-c, poly.A, poly.b)
        if res.optimal:
            lo[j] = -res.value
    return lo, hi


def vertices_2d(poly: HPolytope, tol: float = 1e-7) -> np.ndarray:
    """Counterclockwise vertices of a bounded 2-D polytope.

    Vertices come from pairwise facet intersections filtered by
    feasibility; the ordering starts at the lexicographically smallest
    vertex so repeated runs emit identical output.
    """
    if poly.dim != 2:
        raise ValueError("vertex enumeration is implemented for 2-D only")
    p = remove_redundant(poly)
    lo, hi = bounding_box(p)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise UnboundedSetError("polytope is unbounded; no vertex description")
    a, b = p.A, p.b
    points = []
    for i in range(p.nrows):
        for j in range(i + 1, p.nrows):
            m = np.array([a[i], a[j]])
            det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
            if abs(det) < 1e-12:
                continue
            v = np.linalg.solve(m, np.array([b[i], b[j]]))
            if np.all(a @ v <= b + tol):
                points.append(v)
    if not points:
        # Degenerate set with no facet intersections: report a single point.
        radius, center = chebyshev_center(p)
        return np.array([center]) if center is not None else np.zeros((0, 2))
    pts = np.array(points)
    pts = np.unique(np.round(pts, _DUP_DECIMALS), axis=0)
    if len(pts) <= 2:
        return pts
    centroid = pts.mean(axis=0)
    angles = np.arctan2(pts[:, 1] - centroid[1], pts[:, 0] - centroid[0])
    order = np.argsort(angles)
    pts = pts[order]
    start = np.lexsort((pts[:, 1], pts[:, 0]))[0]
    return np.roll(pts, -start, axis=0)


def area_2d(poly: HPolytope) -> float:
    """Polygon area by the shoelace formula over :func:`vertices_2d`."""
    verts = vertices_2d(poly)
    if len(verts) < 3:
        return 0.0
    x, y = verts[:, 0], verts[:, 1]
    return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def write_vertices_csv(path: str, vertices: np.ndarray,
                       header: str = "x,y", meta: dict | None = None) -> None:
    """Write vertex rows as CSV, with metadata as leading comments."""
    with open(path, "w") as fh:
        if meta:
            for key in sorted(meta):
                fh.write(f"# {key}={meta[key]}\n")
        fh.write(header + "\n")
        for row in np.atleast_2d(vertices):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
