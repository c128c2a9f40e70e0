"""Morton-ordered BVH over 2-D scratch segments.

The tree is built once per pattern: leaf order comes from sorting 16-bit
per-axis Morton codes of the (padded) segment AABB centers, internal
nodes are emitted depth-first with skip offsets, so queries walk a flat
array without a stack.  Very long segments are covered by several
sub-range AABBs that share one segment id, which keeps boxes tight for
diagonal scratches.

Queries are conservative AABB-vs-disc culls followed by an exact
point-to-centerline distance test, so the result is exactly the set of
segment ids whose centerline passes within the query radius.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# A segment whose own AABB diagonal exceeds this multiple of the mean
# segment length gets covered by multiple sub-AABBs.
SPLIT_DIAGONAL_FACTOR = 4.0
MAX_CHUNKS_PER_SEGMENT = 8


def point_segment_distance(points, p0, p1):
    """Distance from points (..., 2) to segments p0/p1 (..., 2), broadcast."""
    points = np.asarray(points, dtype=np.float64)
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    d = p1 - p0
    len2 = np.sum(d * d, axis=-1)
    t = np.sum((points - p0) * d, axis=-1) / np.where(len2 > 0.0, len2, 1.0)
    t = np.clip(t, 0.0, 1.0)
    closest = p0 + t[..., None] * d
    return np.hypot(*np.moveaxis(points - closest, -1, 0))


def _spread_bits16(v):
    # 16-bit value -> even bit positions of a 32-bit word
    v = v.astype(np.uint32)
    v = (v | (v << 8)) & np.uint32(0x00FF00FF)
    v = (v | (v << 4)) & np.uint32(0x0F0F0F0F)
    v = (v | (v << 2)) & np.uint32(0x33333333)
    v = (v | (v << 1)) & np.uint32(0x55555555)
    return v


def morton_codes_2d(points, lo, hi):
    """16-bit-per-axis Morton codes of points within bounds [lo, hi]."""
    points = np.asarray(points, dtype=np.float64)
    span = np.maximum(np.asarray(hi) - np.asarray(lo), 1e-300)
    q = np.clip((points - lo) / span * 65535.0, 0.0, 65535.0).astype(np.uint32)
    return (_spread_bits16(q[..., 1]) << np.uint32(1)) | _spread_bits16(q[..., 0])


@dataclass
class SegmentBvh:
    """Flat depth-first node array with skip offsets.

    node_seg[i] >= 0 marks a leaf holding that segment id; internal
    nodes have -1.  On an AABB miss the traversal jumps to
    node_skip[i], on a hit it advances to i + 1.
    """

    node_lo: np.ndarray
    node_hi: np.ndarray
    node_skip: np.ndarray
    node_seg: np.ndarray
    seg_p0: np.ndarray
    seg_p1: np.ndarray
    bounds_lo: np.ndarray
    bounds_hi: np.ndarray

    def __post_init__(self):
        # python-list mirrors keep the scalar traversal loop cheap
        self._lox = self.node_lo[:, 0].tolist()
        self._loy = self.node_lo[:, 1].tolist()
        self._hix = self.node_hi[:, 0].tolist()
        self._hiy = self.node_hi[:, 1].tolist()
        self._skip = self.node_skip.tolist()
        self._seg = self.node_seg.tolist()

    @property
    def node_count(self) -> int:
        return len(self.node_skip)

    @property
    def segment_count(self) -> int:
        return len(self.seg_p0)


def _leaf_boxes(segments):
    """Per-leaf AABBs (padded by width/2) and owning segment ids."""
    p0 = np.array([s.p0 for s in segments])
    p1 = np.array([s.p1 for s in segments])
    width = np.array([s.width for s in segments])
    length = np.hypot(*(p1 - p0).T)
    mean_len = float(np.mean(length))
    los, his, ids = [], [], []
    for k in range(len(segments)):
        pad = 0.5 * width[k]
        lo_k = np.minimum(p0[k], p1[k])
        hi_k = np.maximum(p0[k], p1[k])
        diag = float(np.hypot(*(hi_k - lo_k + 2.0 * pad)))
        if mean_len > 0.0 and diag > SPLIT_DIAGONAL_FACTOR * mean_len:
            chunks = min(MAX_CHUNKS_PER_SEGMENT,
                         int(np.ceil(diag / (SPLIT_DIAGONAL_FACTOR * mean_len))))
        else:
            chunks = 1
        ts = np.linspace(0.0, 1.0, chunks + 1)
        for a, b in zip(ts[:-1], ts[1:]):
            qa = p0[k] + a * (p1[k] - p0[k])
            qb = p0[k] + b * (p1[k] - p0[k])
            los.append(np.minimum(qa, qb) - pad)
            his.append(np.maximum(qa, qb) + pad)
            ids.append(k)
    return np.array(los), np.array(his), np.array(ids), p0, p1


def build_bvh(segments) -> SegmentBvh:
    """Build the BVH.  Deterministic: stable sort on Morton codes."""
    if not segments:
        raise ValueError("cannot build a BVH over an empty pattern")
    lo, hi, ids, p0, p1 = _leaf_boxes(segments)
    bounds_lo = lo.min(axis=0)
    bounds_hi = hi.max(axis=0)
    centers = 0.5 * (lo + hi)
    codes = morton_codes_2d(centers, bounds_lo, bounds_hi)
    order = np.argsort(codes, kind="stable")
    codes = codes[order]
    lo, hi, ids = lo[order], hi[order], ids[order]

    node_lo, node_hi, node_seg, node_skip = [], [], [], []

    def emit(a: int, b: int) -> None:
        # half-open leaf range [a, b)
        idx = len(node_skip)
        node_lo.append(lo[a:b].min(axis=0))
        node_hi.append(hi[a:b].max(axis=0))
        if b - a == 1:
            node_seg.append(int(ids[a]))
            node_skip.append(idx + 1)
            return
        node_seg.append(-1)
        node_skip.append(0)  # patched after the subtree is emitted
        split = _find_split(codes, a, b)
        emit(a, split)
        emit(split, b)
        node_skip[idx] = len(node_skip)

    import sys
    depth_need = 2 * int(np.ceil(np.log2(max(2, len(ids))))) + 64
    if sys.getrecursionlimit() < depth_need + 100:
        sys.setrecursionlimit(depth_need + 100)
    emit(0, len(ids))

    return SegmentBvh(np.array(node_lo), np.array(node_hi),
                      np.array(node_skip, dtype=np.int64),
                      np.array(node_seg, dtype=np.int64),
                      p0, p1, bounds_lo, bounds_hi)


def _find_split(codes, a: int, b: int) -> int:
    """First index in [a+1, b) where the top differing Morton bit flips."""
    first, last = int(codes[a]), int(codes[b - 1])
    if first == last:
        return (a + b) // 2
    split_bit = (first ^ last).bit_length() - 1
    threshold = (last >> split_bit) << split_bit
    split = int(np.searchsorted(codes[a:b], threshold, side="left")) + a
    return min(max(split, a + 1), b - 1)


def query_disc(bvh: SegmentBvh, center, radius: float) -> np.ndarray:
    """Ids of segments whose centerline lies within radius of center.

    Sorted, duplicate-free.  Radius must be >= 0.
    """
    if radius < 0.0:
        raise ValueError("radius must be >= 0")
    cx, cy = float(center[0]), float(center[1])
    cand = _collect_candidates(bvh, cx, cy, radius)
    if not cand:
        return np.empty(0, dtype=np.int64)
    ids = np.fromiter(cand, dtype=np.int64)
    dist = point_segment_distance(np.array([cx, cy]), bvh.seg_p0[ids], bvh.seg_p1[ids])
    return np.sort(ids[dist <= radius])


def query_disc_union(bvh: SegmentBvh, centers, radius: float) -> np.ndarray:
    """Superset query for a batch: ids within radius of ANY center.

    Used by the renderer to fetch candidates per pixel tile; per-point
    culling happens during BRDF evaluation.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    mid = 0.5 * (centers.min(axis=0) + centers.max(axis=0))
    r_union = float(np.max(np.hypot(*(centers - mid).T))) + radius
    cand = _collect_candidates(bvh, float(mid[0]), float(mid[1]), r_union)
    if not cand:
        return np.empty(0, dtype=np.int64)
    ids = np.fromiter(cand, dtype=np.int64)
    dist = point_segment_distance(centers[:, None, :], bvh.seg_p0[ids], bvh.seg_p1[ids])
    return np.sort(ids[np.any(dist <= radius, axis=0)])


def _collect_candidates(bvh: SegmentBvh, cx: float, cy: float, radius: float) -> set:
    lox, loy, hix, hiy = bvh._lox, bvh._loy, bvh._hix, bvh._hiy
    skip, seg = bvh._skip, bvh._seg
    n = len(skip)
    r2 = radius * radius
    out = set()
    i = 0
    while i < n:
        dx = lox[i] - cx if cx < lox[i] else (cx - hix[i] if cx > hix[i] else 0.0)
        dy = loy[i] - cy if cy < loy[i] else (cy - hiy[i] if cy > hiy[i] else 0.0)
        if dx * dx + dy * dy <= r2:
            s = seg[i]
            if s >= 0:
                out.add(s)
            i += 1
        else:
            i = skip[i]
    return out
