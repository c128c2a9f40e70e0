"""Scratch pattern representation and procedural generators.

A pattern is a list of straight :class:`ScratchSegment` lying in the
surface plane (2-D pattern coordinates, meters).  Each segment carries a
cross-section profile: a rectangular groove of constant depth, or a
triangular (V) groove.  Curved scratches are represented as polylines of
short segments; ``generate_concentric`` shows the sagitta-bound rule used
to pick the segment count.

Per-scratch frames: ``tangent`` points from p0 to p1, ``bitangent`` is
the tangent rotated +90 degrees, so (tangent, bitangent) is right-handed
in the pattern plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class ProfileKind(Enum):
    RECT = "rect"
    TRIANGLE = "tri"


@dataclass(frozen=True, eq=False)
class ScratchSegment:
    """One straight scratch piece in pattern coordinates (meters).

    width is the full footprint width across the groove; depth is the
    maximum depth below the surrounding surface (rect: everywhere, tri:
    at the centerline).
    """

    p0: np.ndarray
    p1: np.ndarray
    width: float
    depth: float
    profile: ProfileKind = ProfileKind.RECT

    def __post_init__(self):
        object.__setattr__(self, "p0", np.asarray(self.p0, dtype=np.float64))
        object.__setattr__(self, "p1", np.asarray(self.p1, dtype=np.float64))
        if self.p0.shape != (2,) or self.p1.shape != (2,):
            raise ValueError("segment endpoints must be 2-D points")
        if not (np.all(np.isfinite(self.p0)) and np.all(np.isfinite(self.p1))):
            raise ValueError("segment endpoints must be finite")
        if float(np.hypot(*(self.p1 - self.p0))) == 0.0:
            raise ValueError("degenerate segment: zero length")
        if not (self.width > 0.0 and math.isfinite(self.width)):
            raise ValueError(f"segment width must be positive, got {self.width}")
        if not (self.depth >= 0.0 and math.isfinite(self.depth)):
            raise ValueError(f"segment depth must be >= 0, got {self.depth}")

    @property
    def length(self) -> float:
        return float(np.hypot(*(self.p1 - self.p0)))

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.p0 + self.p1)


@dataclass(frozen=True)
class ScratchFrame:
    """Orthonormal 2-D frame of a segment: origin at the midpoint."""

    origin: np.ndarray
    tangent: np.ndarray
    bitangent: np.ndarray
    length: float


def scratch_frame(segment: ScratchSegment) -> ScratchFrame:
    d = segment.p1 - segment.p0
    length = float(np.hypot(*d))
    t = d / length
    b = np.array([-t[1], t[0]])
    return ScratchFrame(segment.midpoint, t, b, length)


def to_frame_vector(frame: ScratchFrame, v):
    """Rotate pattern-plane vectors into (tangent, bitangent) components.

    v: array (..., 2).  Returns array (..., 2) of (v.t, v.b).
    """
    v = np.asarray(v, dtype=np.float64)
    return np.stack([v @ frame.tangent, v @ frame.bitangent], axis=-1)


def from_frame_vector(frame: ScratchFrame, tb):
    tb = np.asarray(tb, dtype=np.float64)
    return tb[..., :1] * frame.tangent + tb[..., 1:2] * frame.bitangent


def to_frame_point(frame: ScratchFrame, p):
    """Pattern-plane points -> frame coordinates relative to the midpoint."""
    return to_frame_vector(frame, np.asarray(p, dtype=np.float64) - frame.origin)


# ---------------------------------------------------------------------------
# generators


def generate_grating(count: int, spacing: float, length: float, width: float,
                     depth: float, profile: ProfileKind = ProfileKind.RECT,
                     center=(0.0, 0.0), direction=(1.0, 0.0)) -> list[ScratchSegment]:
    """Parallel equally spaced scratches.

    Scratches run along ``direction``; centerlines are offset along the
    perpendicular by multiples of ``spacing``, recentered so the offsets
    have zero mean around ``center``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if spacing <= 0.0 or length <= 0.0:
        raise ValueError("spacing and length must be positive")
    center = np.asarray(center, dtype=np.float64)
    t = np.asarray(direction, dtype=np.float64)
    norm = float(np.hypot(*t))
    if norm == 0.0:
        raise ValueError("direction must be nonzero")
    t = t / norm
    b = np.array([-t[1], t[0]])
    offsets = (np.arange(count) - (count - 1) / 2.0) * spacing
    segs = []
    for off in offsets:
        mid = center + off * b
        segs.append(ScratchSegment(mid - 0.5 * length * t, mid + 0.5 * length * t,
                                   width, depth, profile))
    return segs


def generate_random(bounds, density: float, length_range, width_range, depth_range,
                    rng: np.random.Generator,
                    profile: ProfileKind = ProfileKind.RECT) -> list[ScratchSegment]:
    """Poisson-distributed random scratches over a rectangle.

    Args:
        bounds: ((xmin, ymin), (xmax, ymax)) pattern rectangle, meters.
        density: expected scratch count per square meter.
        length_range, width_range, depth_range: (lo, hi) uniform ranges.
        rng: seeded generator; output is a pure function of its state.

    The scratch count is Poisson(density * area); midpoints are uniform
    over the rectangle and orientations uniform in [0, pi).
    """
    (xmin, ymin), (xmax, ymax) = bounds
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("bounds rectangle must have positive area")
    if density < 0.0:
        raise ValueError("density must be >= 0")
    area = (xmax - xmin) * (ymax - ymin)
    n = int(rng.poisson(density * area))
    segs = []
    for _ in range(n):
        mid = np.array([rng.uniform(xmin, xmax), rng.uniform(ymin, ymax)])
        ang = rng.uniform(0.0, math.pi)
        t = np.array([math.cos(ang), math.sin(ang)])
        length = rng.uniform(*length_range)
        w = rng.uniform(*width_range)
        d = rng.uniform(*depth_range)
        segs.append(ScratchSegment(mid - 0.5 * length * t, mid + 0.5 * length * t,
                                   w, d, profile))
    return segs


def generate_concentric(center, radii, width: float, depth: float,
                        profile: ProfileKind = ProfileKind.RECT,
                        sagitta_tol: float = 1e-7) -> list[ScratchSegment]:
    """Concentric circles as closed segment loops.

    Each radius r is approximated by n chords with sagitta <= sagitta_tol,
    n = max(3, ceil(pi / sqrt(2*tol/r))) from the small-angle sagitta
    bound r*(1 - cos(pi/n)) <= r*(pi/n)^2/2.
    """
    if sagitta_tol <= 0.0:
        raise ValueError("sagitta_tol must be positive")
    center = np.asarray(center, dtype=np.float64)
    segs = []
    for r in radii:
        if r <= 0.0:
            raise ValueError(f"radius must be positive, got {r}")
        ratio = min(2.0, sagitta_tol / r)
        n = max(3, math.ceil(math.pi / math.sqrt(2.0 * ratio)))
        ang = 2.0 * math.pi * np.arange(n + 1) / n
        pts = center + r * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        for a, b in zip(pts[:-1], pts[1:]):
            segs.append(ScratchSegment(a, b, width, depth, profile))
    return segs


# ---------------------------------------------------------------------------
# along-scratch parameter variation

_GRAD2 = np.array([
    (1, 1), (-1, 1), (1, -1), (-1, -1),
    (1, 0), (-1, 0), (0, 1), (0, -1),
], dtype=np.float64)

_F2 = 0.5 * (math.sqrt(3.0) - 1.0)
_G2 = (3.0 - math.sqrt(3.0)) / 6.0


class SimplexNoise2D:
    """Seeded 2-D simplex gradient noise, output clipped to [-1, 1]."""

    def __init__(self, seed: int):
        perm = np.random.default_rng(seed).permutation(256)
        self._perm = np.concatenate([perm, perm]).astype(np.int64)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        s = (x + y) * _F2
        i = np.floor(x + s)
        j = np.floor(y + s)
        t = (i + j) * _G2
        x0 = x - (i - t)
        y0 = y - (j - t)
        i1 = (x0 > y0).astype(np.int64)
        j1 = 1 - i1
        x1 = x0 - i1 + _G2
        y1 = y0 - j1 + _G2
        x2 = x0 - 1.0 + 2.0 * _G2
        y2 = y0 - 1.0 + 2.0 * _G2
        ii = i.astype(np.int64) & 255
        jj = j.astype(np.int64) & 255
        perm = self._perm
        g0 = perm[ii + perm[jj]] & 7
        g1 = perm[ii + i1 + perm[jj + j1]] & 7
        g2 = perm[ii + 1 + perm[jj + 1]] & 7
        total = np.zeros_like(x0)
        for g, cx, cy in ((g0, x0, y0), (g1, x1, y1), (g2, x2, y2)):
            falloff = 0.5 - cx * cx - cy * cy
            dot = _GRAD2[g, 0] * cx + _GRAD2[g, 1] * cy
            total += np.where(falloff > 0.0, falloff ** 4 * dot, 0.0)
        return np.clip(70.0 * total, -1.0, 1.0)


# Width floor when variation drives the nominal width toward zero.
MIN_VARIED_WIDTH = 1e-8


@dataclass(frozen=True)
class VariationSpec:
    """Along-arc width/depth modulation.

    amplitude_width / amplitude_depth: peak deviation, meters.
    frequency: noise cycles per meter of arc length.
    seed: noise table seed; width and depth use decorrelated channels.
    """

    amplitude_width: float = 0.0
    amplitude_depth: float = 0.0
    frequency: float = 1e4
    seed: int = 0

    def __post_init__(self):
        if self.amplitude_width < 0.0 or self.amplitude_depth < 0.0:
            raise ValueError("variation amplitudes must be >= 0")
        if self.frequency <= 0.0:
            raise ValueError("variation frequency must be positive")

    @property
    def noise(self) -> SimplexNoise2D:
        return _noise_for_seed(self.seed)


_NOISE_CACHE: dict[int, SimplexNoise2D] = {}


def _noise_for_seed(seed: int) -> SimplexNoise2D:
    if seed not in _NOISE_CACHE:
        _NOISE_CACHE[seed] = SimplexNoise2D(seed)
    return _NOISE_CACHE[seed]


def _channel_row(segment_index, channel: int):
    # distinct, deterministic noise row per (segment, channel)
    k = np.asarray(segment_index, dtype=np.uint64)
    h = (k * np.uint64(2654435761) + np.uint64(97 + 131 * channel)) & np.uint64(0xFFFF)
    return h.astype(np.float64) * 0.61803398875


def vary_parameters(segment_index, arc_pos, width, depth, spec: VariationSpec):
    """Width and depth at arc positions along a scratch.

    Args:
        segment_index: scratch id(s); distinct ids get decorrelated noise.
        arc_pos: arc length from the segment start, meters.
        width, depth: nominal values, meters.
        spec: modulation parameters.

    Returns:
        (width_at, depth_at) arrays.  Width is floored at 10 nm, depth
        at zero, so varied segments stay geometrically valid.
    """
    arc = np.asarray(arc_pos, dtype=np.float64)
    xs = arc * spec.frequency
    noise = spec.noise
    nw = noise(xs, _channel_row(segment_index, 0))
    nd = noise(xs, _channel_row(segment_index, 1))
    w = np.maximum(np.asarray(width) + spec.amplitude_width * nw, MIN_VARIED_WIDTH)
    d = np.maximum(np.asarray(depth) + spec.amplitude_depth * nd, 0.0)
    return w, d


def pattern_bounds(segments) -> tuple[np.ndarray, np.ndarray]:
    """Tight AABB of all segment footprints (centerline +- width/2)."""
    if not segments:
        raise ValueError("empty pattern has no bounds")
    pts = np.array([[*s.p0, s.width] for s in segments] +
                   [[*s.p1, s.width] for s in segments])
    lo = np.min(pts[:, :2] - 0.5 * pts[:, 2:3], axis=0)
    hi = np.max(pts[:, :2] + 0.5 * pts[:, 2:3], axis=0)
    return lo, hi
