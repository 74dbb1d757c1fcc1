"""Counting intersection points between polylines.

Segment crossings are found with a tolerance, merged into intersection
points (crossings closer than ``3 * tol`` are one point) and classified as
boundary points when within ``tol`` of the unit circle.  The segment test
is exactly symmetric in its two arguments, which makes the brute-force
and grid-indexed paths agree crossing for crossing.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 1e-7

# parallel segments (|sin angle| below this) are treated as non-crossing
_PARALLEL_EPS = 1e-12

# candidate segment pairs tested per vectorized batch
_BATCH_PAIRS = 2_000_000


@dataclass(frozen=True)
class IntersectionCount:
    interior: int = 0
    boundary: int = 0

    @property
    def total(self) -> int:
        return self.interior + self.boundary


def _segments(poly) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(poly, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2 or len(p) < 2:
        raise ValueError("a polyline needs at least 2 vertices of shape (k, 2)")
    a, b = p[:-1], p[1:]
    if np.any(np.all(a == b, axis=1)):
        k = int(np.flatnonzero(np.all(a == b, axis=1))[0])
        raise ValueError(f"degenerate zero-length segment at vertex {k}")
    return a, b


def segment_crossings(a0, a1, b0, b1, tol: float):
    """Test segment pairs row by row.

    Returns ``(hit, points)``; ``points`` is the crossing point for each
    row, averaged from both parametrizations so swapping the segment roles
    gives the identical answer.
    """
    r = a1 - a0
    q = b1 - b0
    d = b0 - a0
    den = r[:, 0] * q[:, 1] - r[:, 1] * q[:, 0]
    len_r = np.hypot(r[:, 0], r[:, 1])
    len_q = np.hypot(q[:, 0], q[:, 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = (d[:, 0] * q[:, 1] - d[:, 1] * q[:, 0]) / den
        tb = (d[:, 0] * r[:, 1] - d[:, 1] * r[:, 0]) / den
        ea = tol / len_r
        eb = tol / len_q
    hit = (
        (np.abs(den) > _PARALLEL_EPS * len_r * len_q)
        & (ta >= -ea) & (ta <= 1.0 + ea)
        & (tb >= -eb) & (tb <= 1.0 + eb)
    )
    ta = np.clip(ta, 0.0, 1.0)
    tb = np.clip(tb, 0.0, 1.0)
    points = 0.5 * ((a0 + ta[:, None] * r) + (b0 + tb[:, None] * q))
    return hit, points


def _cluster(points: np.ndarray, tol: float) -> IntersectionCount:
    """Merge crossing points within 3*tol and classify the clusters."""
    if len(points) == 0:
        return IntersectionCount()
    order = np.lexsort((points[:, 1], points[:, 0]))
    reps: list[np.ndarray] = []
    for p in points[order]:
        if not any(np.hypot(*(p - c)) <= 3.0 * tol for c in reps):
            reps.append(p)
    boundary = sum(1 for c in reps if abs(np.hypot(*c) - 1.0) <= tol)
    return IntersectionCount(interior=len(reps) - boundary, boundary=boundary)


def count_intersections(p1, p2, tol: float = DEFAULT_TOL) -> IntersectionCount:
    """Intersection points of two polylines, split into interior and boundary."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    a0, a1 = _segments(p1)
    b0, b1 = _segments(p2)
    na, nb = len(a0), len(b0)
    ia = np.repeat(np.arange(na), nb)
    ib = np.tile(np.arange(nb), na)
    hit, pts = segment_crossings(a0[ia], a1[ia], b0[ib], b1[ib], tol)
    return _cluster(pts[hit], tol)


@dataclass(eq=False)
class SegmentIndex:
    """Uniform grid over the disc's bounding box mapping cells to segments."""

    cell_size: float
    origin: float
    n_cells: int
    seg_start: np.ndarray
    seg_end: np.ndarray
    seg_path: np.ndarray
    # entries sorted by cell
    cells: np.ndarray
    segs: np.ndarray

    @classmethod
    def build(cls, paths, tol: float = DEFAULT_TOL) -> "SegmentIndex":
        starts, ends, owner = [], [], []
        for k, poly in enumerate(paths):
            a, b = _segments(poly)
            starts.append(a)
            ends.append(b)
            owner.append(np.full(len(a), k, dtype=np.int64))
        a = np.concatenate(starts)
        b = np.concatenate(ends)
        owner = np.concatenate(owner)
        max_len = float(np.max(np.hypot(*(b - a).T)))
        cell = 2.0 * max_len
        lo_all = np.minimum(a, b).min(axis=0) - tol
        hi_all = np.maximum(a, b).max(axis=0) + tol
        origin = float(min(lo_all.min(), -1.0)) - cell
        extent = float(max(hi_all.max(), 1.0)) + cell - origin
        n_cells = int(np.ceil(extent / cell)) + 1
        lo = np.floor((np.minimum(a, b) - tol - origin) / cell).astype(np.int64)
        hi = np.floor((np.maximum(a, b) + tol - origin) / cell).astype(np.int64)
        span = int((hi - lo).max()) + 1
        cells, segs = [], []
        seg_ids = np.arange(len(a))
        for dx in range(span):
            for dy in range(span):
                cx = lo[:, 0] + dx
                cy = lo[:, 1] + dy
                ok = (cx <= hi[:, 0]) & (cy <= hi[:, 1])
                cells.append(cx[ok] * n_cells + cy[ok])
                segs.append(seg_ids[ok])
        cells = np.concatenate(cells)
        segs = np.concatenate(segs)
        order = np.lexsort((segs, cells))
        return cls(cell, origin, n_cells, a, b, owner, cells[order], segs[order])

    def candidate_batches(self):
        """Yield arrays (seg_i, seg_j) of segment pairs sharing a cell."""
        cells = self.cells
        bounds = np.flatnonzero(np.diff(cells)) + 1
        group_start = np.concatenate([[0], bounds])
        group_end = np.concatenate([bounds, [len(cells)]])
        sizes = group_end - group_start
        keep = sizes >= 2
        group_start, group_end, sizes = group_start[keep], group_end[keep], sizes[keep]
        pairs_per_group = sizes * (sizes - 1) // 2
        g = 0
        while g < len(sizes):
            total = 0
            h = g
            while h < len(sizes) and (total == 0 or total + pairs_per_group[h] <= _BATCH_PAIRS):
                total += pairs_per_group[h]
                h += 1
            spans = zip(group_start[g:h], group_end[g:h])
            pos = np.concatenate([np.arange(s, e) for s, e in spans])
            end = np.repeat(group_end[g:h], sizes[g:h])
            after = end - pos - 1
            first = np.repeat(pos, after)
            offsets = np.cumsum(after) - after
            second = first + 1 + (np.arange(len(first)) - np.repeat(offsets, after))
            yield self.segs[first], self.segs[second]
            g = h


@dataclass(eq=False)
class PairCounts:
    """Per-pair intersection counts over all unordered pairs of paths."""

    n_paths: int
    # unordered pairs (i < j) with at least one intersection point
    pair_i: np.ndarray
    pair_j: np.ndarray
    interior: np.ndarray
    boundary: np.ndarray
    self_intersecting: list[int] = field(default_factory=list)

    @property
    def n_pairs(self) -> int:
        return self.n_paths * (self.n_paths - 1) // 2

    @property
    def interior_sum(self) -> int:
        return int(self.interior.sum())

    def histogram(self) -> np.ndarray:
        """Number of unordered pairs with 0, 1, 2, ... interior intersection points."""
        top = int(self.interior.max()) if len(self.interior) else 0
        hist = np.bincount(self.interior, minlength=max(top + 1, 2)).astype(np.int64)
        hist[0] += self.n_pairs - len(self.interior)
        return hist

    def as_dict(self) -> dict[tuple[int, int], IntersectionCount]:
        return {
            (int(i), int(j)): IntersectionCount(int(n), int(b))
            for i, j, n, b in zip(self.pair_i, self.pair_j, self.interior, self.boundary)
        }

    def row_sums(self, values) -> np.ndarray:
        """Sum ``values`` (one per listed pair) over partners of each path."""
        out = np.zeros(self.n_paths)
        np.add.at(out, self.pair_i, values)
        np.add.at(out, self.pair_j, values)
        return out


def _collect(pair_i, pair_j, points, n_paths, tol):
    """Cluster crossing points per path pair into a PairCounts."""
    if len(points) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return PairCounts(n_paths, empty, empty, empty, empty)
    key = pair_i * n_paths + pair_j
    order = np.lexsort((points[:, 1], points[:, 0], key))
    key, points = key[order], points[order]
    bounds = np.flatnonzero(np.diff(key)) + 1
    starts = np.concatenate([[0], bounds])
    ends = np.concatenate([bounds, [len(key)]])
    uniq = key[starts]
    interior = np.empty(len(uniq), dtype=np.int64)
    boundary = np.empty(len(uniq), dtype=np.int64)
    single = ends - starts == 1
    on_circle = np.abs(np.hypot(points[:, 0], points[:, 1]) - 1.0) <= tol
    b1 = on_circle[starts[single]].astype(np.int64)
    boundary[single] = b1
    interior[single] = 1 - b1
    for g in np.flatnonzero(~single):
        c = _cluster(points[starts[g]:ends[g]], tol)
        interior[g], boundary[g] = c.interior, c.boundary
    return PairCounts(n_paths, uniq // n_paths, uniq % n_paths, interior, boundary)


def count_all_pairs(paths, tol: float = DEFAULT_TOL, use_index: bool = True) -> PairCounts:
    """Intersection counts for every unordered pair of distinct paths.

    With ``use_index`` the candidate segment pairs come from one shared
    :class:`SegmentIndex`; otherwise every pair of paths is compared with
    :func:`count_intersections`.  Both give identical counts.
    """
    n = len(paths)
    if n < 2:
        raise ValueError("need at least two paths")
    if not use_index:
        rows = []
        for i in range(n):
            for j in range(i + 1, n):
                c = count_intersections(paths[i], paths[j], tol)
                if c.total:
                    rows.append((i, j, c.interior, c.boundary))
        arr = np.array(rows, dtype=np.int64).reshape(-1, 4)
        return PairCounts(n, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])

    index = SegmentIndex.build(paths, tol)
    owner = index.seg_path
    found_i, found_j, found_pts = [], [], []
    self_hits = set()
    for si, sj in index.candidate_batches():
        pi, pj = owner[si], owner[sj]
        # same-path pairs: only non-adjacent segments, for the self-crossing diagnostic
        same = pi == pj
        keep = ~same | (np.abs(si - sj) > 1)
        si, sj, pi, pj = si[keep], sj[keep], pi[keep], pj[keep]
        hit, pts = segment_crossings(
            index.seg_start[si], index.seg_end[si], index.seg_start[sj], index.seg_end[sj], tol
        )
        same = pi == pj
        if np.any(hit & same):
            self_hits.update(int(p) for p in np.unique(pi[hit & same]))
        hit &= ~same
        swap = pi > pj
        a = np.where(swap, sj, si)[hit]
        b = np.where(swap, si, sj)[hit]
        found_i.append(a)
        found_j.append(b)
        found_pts.append(pts[hit])
    seg_a = np.concatenate(found_i) if found_i else np.zeros(0, dtype=np.int64)
    seg_b = np.concatenate(found_j) if found_j else np.zeros(0, dtype=np.int64)
    pts = np.concatenate(found_pts) if found_pts else np.zeros((0, 2))
    # a segment pair sharing several cells is reported once per shared cell
    _, first = np.unique(seg_a * len(owner) + seg_b, return_index=True)
    seg_a, seg_b, pts = seg_a[first], seg_b[first], pts[first]
    counts = _collect(owner[seg_a], owner[seg_b], pts, n, tol)
    if self_hits:
        counts.self_intersecting = sorted(self_hits)
        warnings.warn(
            f"{len(self_hits)} path(s) intersect themselves, e.g. path {min(self_hits)}",
            RuntimeWarning,
            stacklevel=2,
        )
    return counts


def count_against(curve, paths, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Interior and boundary intersection counts of ``curve`` with each path.

    Only the curve's segments are gridded; each path segment looks up the
    cells its (tol-inflated) bounding box covers.  Agrees with calling
    :func:`count_intersections` for every path.
    """
    c0, c1 = _segments(curve)
    starts, ends, owner = [], [], []
    for k, poly in enumerate(paths):
        a, b = _segments(poly)
        starts.append(a)
        ends.append(b)
        owner.append(np.full(len(a), k, dtype=np.int64))
    n = len(paths)
    interior = np.zeros(n, dtype=np.int64)
    boundary = np.zeros(n, dtype=np.int64)
    if n == 0:
        return interior, boundary
    a = np.concatenate(starts)
    b = np.concatenate(ends)
    owner = np.concatenate(owner)

    cell = 2.0 * max(np.hypot(*(c1 - c0).T).max(), np.hypot(*(b - a).T).max())
    origin = float(min(np.minimum(a, b).min(), np.minimum(c0, c1).min(), -1.0)) - cell
    lo_c = np.floor((np.minimum(c0, c1) - tol - origin) / cell).astype(np.int64)
    hi_c = np.floor((np.maximum(c0, c1) + tol - origin) / cell).astype(np.int64)
    lo_p = np.floor((np.minimum(a, b) - tol - origin) / cell).astype(np.int64)
    hi_p = np.floor((np.maximum(a, b) + tol - origin) / cell).astype(np.int64)
    width = int(max(hi_c.max(), hi_p.max())) + 2

    def expand(lo, hi):
        span = int((hi - lo).max()) + 1
        ids = np.arange(len(lo))
        cells, segs = [], []
        for dx in range(span):
            for dy in range(span):
                cx, cy = lo[:, 0] + dx, lo[:, 1] + dy
                ok = (cx <= hi[:, 0]) & (cy <= hi[:, 1])
                cells.append(cx[ok] * width + cy[ok])
                segs.append(ids[ok])
        return np.concatenate(cells), np.concatenate(segs)

    c_cells, c_segs = expand(lo_c, hi_c)
    order = np.argsort(c_cells, kind="stable")
    c_cells, c_segs = c_cells[order], c_segs[order]
    p_cells, p_segs = expand(lo_p, hi_p)
    left = np.searchsorted(c_cells, p_cells, side="left")
    right = np.searchsorted(c_cells, p_cells, side="right")
    hits = right - left
    keep = hits > 0
    p_segs, left, hits = p_segs[keep], left[keep], hits[keep]
    q = np.repeat(p_segs, hits)
    offsets = np.cumsum(hits) - hits
    c = c_segs[np.repeat(left, hits) + (np.arange(len(q)) - np.repeat(offsets, hits))]
    # a segment pair sharing several cells appears once per shared cell
    key = np.unique(q * len(c0) + c)
    q, c = key // len(c0), key % len(c0)
    hit, pts = segment_crossings(c0[c], c1[c], a[q], b[q], tol)
    counts = _collect(np.zeros(int(hit.sum()), dtype=np.int64), owner[q[hit]] + 1,
                      pts[hit], n + 1, tol)
    interior[counts.pair_j - 1] = counts.interior
    boundary[counts.pair_j - 1] = counts.boundary
    return interior, boundary
