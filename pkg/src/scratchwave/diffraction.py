"""Closed-form wave-optical BRDF of scratched planar surfaces.

The surface reflectance is treated in scalar non-paraxial diffraction:
the outgoing radiance at spatial frequency xi (the sum of incident and
outgoing direction cosines over the wavelength) is proportional to the
squared magnitude of the Fourier transform of the surface transfer
function, windowed by a Gaussian coherence kernel around the shading
point.  The unscratched plane contributes a closed-form Gaussian lobe;
each scratch contributes the product of a cross-section profile
transform and a windowed line integral along its length, also closed
form.  Contributions superpose coherently, so nearby scratches
interfere, which is the source of the rendered iridescence.

Conventions used throughout:

* directions are unit vectors (alpha, beta, gamma) with gamma > 0,
  both incident and outgoing stored pointing away from the surface;
* xi = (omega_o + omega_i) / lambda componentwise, so the mirror
  direction has in-plane frequency xi_perp = (xi1, xi2) = 0;
* Fourier transforms use exp(-2*pi*i*x*xi);
* groove depth D shifts phase by exp(-4*pi*i*D/lambda);
* all lengths are meters.

The per-pair math (point x shading candidate) is vectorized; the heavy
path evaluates the Faddeeva function once per pair.  A short Gauss-
Legendre fallback covers the short-segment regime where the closed-form
erf difference cancels catastrophically; the two regimes overlap
nowhere near the accuracy floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import wofz

from .accel import point_segment_distance
from .scratch import ProfileKind, VariationSpec, vary_parameters

TWO_PI = 2.0 * math.pi

_SQRT_HALF_PI = math.sqrt(0.5 * math.pi)
_SQRT2 = math.sqrt(2.0)

# Gauss-Legendre fallback for eta when the segment is so short that the
# erf difference loses precision; inside the threshold the integrand's
# total phase + envelope variation stays < 0.5 rad, where 24 nodes are
# exact to machine precision.
_ETA_GL_NODES, _ETA_GL_WEIGHTS = leggauss(24)
_ETA_GL_THRESHOLD = 0.5

# series switch distance for the triangle profile transform
_TRI_SERIES_CUTOFF = 1e-4


def _unit_check(v, name: str):
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != 3:
        raise ValueError(f"{name} must have 3 components")
    n = np.linalg.norm(v, axis=-1)
    if np.any(np.abs(n - 1.0) > 1e-6):
        raise ValueError(f"{name} must be unit length")
    return v


def compute_xi(omega_i, omega_o, lam: float):
    """Spatial frequency vector (xi1, xi2, xi3) of a direction pair.

    Args:
        omega_i, omega_o: unit directions away from the surface,
            broadcastable (..., 3); gamma (z) must be positive.
        lam: wavelength, meters.

    Returns:
        Array (..., 3).  xi_perp = 0 exactly when omega_o mirrors
        omega_i about the normal.
    """
    wi = _unit_check(omega_i, "omega_i")
    wo = _unit_check(omega_o, "omega_o")
    if np.any(wi[..., 2] <= 0.0) or np.any(wo[..., 2] <= 0.0):
        raise ValueError("directions must lie above the horizon (gamma > 0)")
    if not lam > 0.0:
        raise ValueError("wavelength must be positive")
    return (wo + wi) / lam


@dataclass(frozen=True)
class CoherenceKernel:
    """Gaussian coherence window exp(-|x - x0|^2 / (2 sigma^2))."""

    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def coherence_diameter(self) -> float:
        return 6.0 * self.sigma

    @property
    def shading_area(self) -> float:
        """Effective area pi*sigma^2 (the L2 norm of the window)."""
        return math.pi * self.sigma ** 2

    @property
    def window_integral(self) -> float:
        """L1 norm 2*pi*sigma^2; peak value of the flat-field response."""
        return TWO_PI * self.sigma ** 2

    @property
    def influence_radius(self) -> float:
        """Default candidate cutoff; beyond 3 sigma the window weight
        is below exp(-4.5) and scratch contributions are negligible."""
        return 3.0 * self.sigma

    def window(self, points, center):
        d = np.asarray(points, dtype=np.float64) - np.asarray(center, dtype=np.float64)
        return np.exp(-np.sum(d * d, axis=-1) / (2.0 * self.sigma ** 2))


@dataclass(frozen=True)
class MaterialParams:
    """Scalar reflection amplitudes and Fresnel normal reflectance.

    amplitude_base applies to the unscratched plane, amplitude_mask to
    the strip subtracted under each scratch, amplitude_scratch to the
    groove itself.  For roughness blending set amplitude_base = 0 and
    keep mask = scratch = 1.
    """

    amplitude_base: float = 1.0
    amplitude_mask: float = 1.0
    amplitude_scratch: float = 1.0
    f0: float = 1.0

    def __post_init__(self):
        for name in ("amplitude_base", "amplitude_mask", "amplitude_scratch"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not (0.0 <= self.f0 <= 1.0):
            raise ValueError(f"f0 must lie in [0, 1], got {self.f0}")

    def fresnel(self, cos_i):
        """Schlick reflectance at the incidence cosine."""
        c = np.clip(cos_i, 0.0, 1.0)
        return self.f0 + (1.0 - self.f0) * (1.0 - c) ** 5


def base_response(xi1, xi2, kernel: CoherenceKernel, amplitude: float = 1.0):
    """Flat-plane response: amplitude * 2*pi*sigma^2 * exp(-2*pi^2*sigma^2*|xi_perp|^2).

    Real valued; the Fourier pair of the coherence window.
    """
    s2 = kernel.sigma ** 2
    r2 = np.square(xi1) + np.square(xi2)
    return amplitude * TWO_PI * s2 * np.exp(-2.0 * math.pi ** 2 * s2 * r2)


# ---------------------------------------------------------------------------
# eta: Gaussian-windowed line integral along a scratch


def _scaled_w_pos(x, y):
    # exp(-x^2) * exp(-2ixy) * wofz(-y + ix); finite for all real x >= 0, y
    return np.exp(-np.square(x)) * np.exp(-2.0j * x * y) * wofz(-y + 1.0j * x)


def _scaled_w_neg(x, y):
    # mirror branch for x < 0 so the wofz argument keeps Im >= 0
    return np.exp(-np.square(x)) * np.exp(-2.0j * x * y) * wofz(y - 1.0j * x)


def eta(xi1p, xi2p, r0_tan, r0_bit, length, sigma):
    """Coherence-windowed scratch line integral, closed form.

    Evaluates, in the scratch frame (tangent t, bitangent b),

        eta = integral over t in [-L/2, L/2] of
              exp(-((r1+t)^2 + r2^2) / (2 sigma^2))
              * exp(-2 pi i ((r1 + t) xi1' + r2 xi2'))
              ... with the tangential offset phase folded in,

    equal to sqrt(pi/2)*sigma * exp(-r2^2/(2 sigma^2))
             * exp(-2 pi i r2 xi2') * [erf(zB) - erf(zA)]
             * exp(-q^2/2) absorbed into the scaled erf,
    zA,B = (r1 -+ L/2 + 2 pi i sigma^2 xi1') / (sigma sqrt(2)).

    Args:
        xi1p, xi2p: frequency components along tangent / bitangent, 1/m.
        r0_tan, r0_bit: scratch midpoint relative to the shading point,
            frame components, meters.
        length: segment length, meters (> 0).
        sigma: coherence kernel parameter, meters.

    All arguments broadcast.  Stable for |2 pi sigma xi1'| up to 1e4 and
    beyond: the growing erf of a complex argument is evaluated as a
    scaled Faddeeva function so the Gaussian envelope cancels
    analytically, and nearly-equal erf pairs (short segments) fall back
    to direct Gauss-Legendre integration.
    """
    xi1p, xi2p, r0_tan, r0_bit, length, sigma = np.broadcast_arrays(
        *(np.asarray(a, dtype=np.float64)
          for a in (xi1p, xi2p, r0_tan, r0_bit, length, sigma)))
    if np.any(length <= 0.0):
        raise ValueError("segment length must be positive")
    if np.any(sigma <= 0.0):
        raise ValueError("sigma must be positive")

    p = r0_tan / sigma
    q = TWO_PI * sigma * xi1p
    h = 0.5 * length / sigma

    out = np.empty(p.shape, dtype=np.complex128)
    gl = 2.0 * h * (np.abs(p) + h + np.abs(q)) < _ETA_GL_THRESHOLD

    if np.any(gl):
        s = (r0_tan[gl][..., None]
             + 0.5 * length[gl][..., None] * _ETA_GL_NODES)
        ph = np.exp(-np.square(s) / (2.0 * np.square(sigma[gl][..., None]))
                    - TWO_PI * 1.0j * s * xi1p[gl][..., None])
        out[gl] = 0.5 * length[gl] * (ph @ _ETA_GL_WEIGHTS)

    cf = ~gl
    if np.any(cf):
        pc, qc, hc = p[cf], q[cf], h[cf]
        y = qc / _SQRT2
        xa = (pc - hc) / _SQRT2
        xb = (pc + hc) / _SQRT2
        diff = np.empty(pc.shape, dtype=np.complex128)
        both_pos = xa >= 0.0  # then xb >= xa >= 0
        both_neg = xb < 0.0
        mixed = ~(both_pos | both_neg)
        if np.any(both_pos):
            diff[both_pos] = (_scaled_w_pos(xa[both_pos], y[both_pos])
                              - _scaled_w_pos(xb[both_pos], y[both_pos]))
        if np.any(both_neg):
            diff[both_neg] = (_scaled_w_neg(xb[both_neg], y[both_neg])
                              - _scaled_w_neg(xa[both_neg], y[both_neg]))
        if np.any(mixed):
            diff[mixed] = (2.0 * np.exp(-np.square(y[mixed]))
                           - _scaled_w_pos(xb[mixed], y[mixed])
                           - _scaled_w_neg(xa[mixed], y[mixed]))
        out[cf] = _SQRT_HALF_PI * sigma[cf] * diff

    out *= np.exp(-np.square(r0_bit) / (2.0 * np.square(sigma))
                  - TWO_PI * 1.0j * r0_bit * xi2p)
    return out


# ---------------------------------------------------------------------------
# cross-section profile transforms


def mask_ft(xi2p, width, amplitude=1.0):
    """Transform of the flat strip removed under a scratch:
    amplitude * W * sinc(pi W xi2')."""
    return amplitude * width * np.sinc(width * np.asarray(xi2p, dtype=np.float64))


def profile_ft_rect(xi2p, width, depth, lam, amplitude=1.0):
    """Rectangular groove of constant depth: the mask transform times
    the depth phase exp(-4 pi i D / lambda).

    Vanishes against an equal-amplitude mask when D is a multiple of
    lambda / 2 (the groove becomes invisible), and has zeros at
    xi2' = m / W like the mask itself.
    """
    phase = np.exp(-2.0j * TWO_PI * np.asarray(depth, dtype=np.float64) / lam)
    return mask_ft(xi2p, width, amplitude) * phase


def _expi_ratio(x):
    """E(x) = (exp(ix) - 1) / (ix), E(0) = 1, stable near zero."""
    x = np.asarray(x, dtype=np.float64)
    small = np.abs(x) < _TRI_SERIES_CUTOFF
    xs = np.where(small, 0.0, x)
    with np.errstate(invalid="ignore", divide="ignore"):
        exact = (np.exp(1.0j * xs) - 1.0) / (1.0j * xs)
    series = (1.0 + 1.0j * x / 2.0 - np.square(x) / 6.0
              - 1.0j * x ** 3 / 24.0 + x ** 4 / 120.0)
    return np.where(small, series, exact)


def profile_ft_triangle(xi2p, width, depth, lam, amplitude=1.0):
    """V groove, depth D at the centerline tapering to 0 at the edges:

        F(xi2') = (A W / 2) * exp(-i c) * [E(c + a) + E(c - a)],
        a = pi W xi2',  c = 4 pi D / lambda,  E(x) = (exp(ix) - 1)/(ix).

    The removable singularities at xi2' = -+ 4 D / (W lambda) are
    bridged by the series expansion of E.  D = 0 reduces exactly to the
    mask transform.
    """
    a = math.pi * np.asarray(width, dtype=np.float64) * np.asarray(xi2p, dtype=np.float64)
    c = 2.0 * TWO_PI * np.asarray(depth, dtype=np.float64) / lam
    return (0.5 * amplitude * width * np.exp(-1.0j * c)
            * (_expi_ratio(c + a) + _expi_ratio(c - a)))


def profile_minus_mask(xi2p, width, depth, lam, profile_code, material: MaterialParams):
    """mask_ft - scratch_ft per candidate, profile chosen by code
    (0 = rect, 1 = triangle).  All arguments broadcast, lam included."""
    xi2p, width, depth, lam, code = np.broadcast_arrays(
        np.asarray(xi2p, dtype=np.float64), np.asarray(width, dtype=np.float64),
        np.asarray(depth, dtype=np.float64), np.asarray(lam, dtype=np.float64),
        np.asarray(profile_code))
    shape = xi2p.shape
    xi2p, width, depth, lam, code = (a.ravel() for a in (xi2p, width, depth, lam, code))
    out = mask_ft(xi2p, width, material.amplitude_mask).astype(np.complex128)
    rect = code == 0
    tri = ~rect
    if np.any(rect):
        out[rect] -= profile_ft_rect(xi2p[rect], width[rect], depth[rect],
                                     lam[rect], material.amplitude_scratch)
    if np.any(tri):
        out[tri] -= profile_ft_triangle(xi2p[tri], width[tri], depth[tri],
                                        lam[tri], material.amplitude_scratch)
    return out.reshape(shape)


# ---------------------------------------------------------------------------
# evaluation tables and the coherent sum

_PROFILE_CODE = {ProfileKind.RECT: 0, ProfileKind.TRIANGLE: 1}


@dataclass
class PatternTables:
    """Pattern flattened to arrays, ready for pairwise evaluation.

    Scratches with parameter variation are pre-subdivided into short
    sub-segments with locally constant width/depth; ``sub_of`` maps each
    sub-segment back to its owning scratch and ``sub_start`` is the CSR
    index of each scratch's sub-range.  Without variation sub-segments
    equal the input segments.  Splitting a segment never changes the
    coherent sum (the line integral is additive over the partition).
    """

    seg_p0: np.ndarray
    seg_p1: np.ndarray
    sub_start: np.ndarray
    sub_mid: np.ndarray
    sub_tan: np.ndarray
    sub_len: np.ndarray
    sub_width: np.ndarray
    sub_depth: np.ndarray
    sub_profile: np.ndarray
    sub_of: np.ndarray

    @property
    def segment_count(self) -> int:
        return len(self.seg_p0)

    @property
    def sub_count(self) -> int:
        return len(self.sub_mid)


def build_tables(segments, variation: VariationSpec | None = None,
                 kernel: CoherenceKernel | None = None) -> PatternTables:
    """Prepare a pattern for evaluation.

    With ``variation`` a kernel is required: each scratch is subdivided
    at arc step min(sigma, L/8) and width/depth are sampled per
    sub-segment midpoint.
    """
    if variation is not None and kernel is None:
        raise ValueError("parameter variation requires the coherence kernel")
    n = len(segments)
    if n == 0:
        raise ValueError("pattern is empty")
    p0 = np.array([s.p0 for s in segments])
    p1 = np.array([s.p1 for s in segments])
    length = np.hypot(*(p1 - p0).T)
    tan = (p1 - p0) / length[:, None]
    width = np.array([s.width for s in segments])
    depth = np.array([s.depth for s in segments])
    profile = np.array([_PROFILE_CODE[s.profile] for s in segments], dtype=np.uint8)

    if variation is None:
        sub_start = np.arange(n + 1, dtype=np.int64)
        return PatternTables(p0, p1, sub_start, 0.5 * (p0 + p1), tan, length,
                             width, depth, profile,
                             np.arange(n, dtype=np.int64))

    counts = np.maximum(8, np.ceil(length / kernel.sigma).astype(np.int64))
    sub_start = np.concatenate([[0], np.cumsum(counts)])
    sub_of = np.repeat(np.arange(n, dtype=np.int64), counts)
    # fractional midpoint of each sub-segment along its parent
    local = (np.arange(sub_start[-1]) - sub_start[sub_of] + 0.5) / counts[sub_of]
    sub_mid = p0[sub_of] + local[:, None] * (p1[sub_of] - p0[sub_of])
    sub_len = length[sub_of] / counts[sub_of]
    arc = local * length[sub_of]
    sub_w, sub_d = vary_parameters(sub_of, arc, width[sub_of], depth[sub_of], variation)
    return PatternTables(p0, p1, sub_start, sub_mid, tan[sub_of], sub_len,
                         sub_w, sub_d, profile[sub_of], sub_of)


def pair_terms(tables: PatternTables, kernel: CoherenceKernel,
               material: MaterialParams, lam: float,
               points, xi1, xi2, sub_idx):
    """Complex contribution of each (shading point, sub-segment) pair.

    points, xi1, xi2: per-pair shading point (K, 2) and frequency
    components; sub_idx: per-pair sub-segment index (K,).
    """
    t = tables.sub_tan[sub_idx]
    mid = tables.sub_mid[sub_idx]
    # bitangent = tangent rotated +90 degrees; the response is invariant
    # under flipping it, so the segment orientation does not matter
    xi1p = xi1 * t[:, 0] + xi2 * t[:, 1]
    xi2p = -xi1 * t[:, 1] + xi2 * t[:, 0]
    d = mid - points
    r_tan = d[:, 0] * t[:, 0] + d[:, 1] * t[:, 1]
    r_bit = -d[:, 0] * t[:, 1] + d[:, 1] * t[:, 0]
    prof = profile_minus_mask(xi2p, tables.sub_width[sub_idx],
                              tables.sub_depth[sub_idx], lam,
                              tables.sub_profile[sub_idx], material)
    return prof * eta(xi1p, xi2p, r_tan, r_bit, tables.sub_len[sub_idx], kernel.sigma)


def _expand_candidates(tables: PatternTables, point_idx, seg_idx):
    """(point, scratch) pairs -> (point, sub-segment) pairs via CSR."""
    counts = tables.sub_start[seg_idx + 1] - tables.sub_start[seg_idx]
    pt = np.repeat(point_idx, counts)
    base = np.repeat(tables.sub_start[seg_idx], counts)
    offs = np.arange(len(pt), dtype=np.int64) - np.repeat(
        np.concatenate([[0], np.cumsum(counts)[:-1]]), counts)
    return pt, base + offs


def scratch_response(tables: PatternTables, kernel: CoherenceKernel,
                     material: MaterialParams, lam: float,
                     x0, xi1, xi2, ids=None, per_scratch: bool = False):
    """Coherent scratch sum S at one shading point.

    Args:
        x0: shading point in the pattern plane (2,).
        xi1, xi2: in-plane frequency components (scalars).
        ids: candidate scratch ids; defaults to every scratch.
        per_scratch: also return each scratch's own complex term.

    Candidates farther than the kernel influence radius (3 sigma) from
    x0 contribute below exp(-4.5) of their peak and are culled, so the
    result does not depend on how generous the candidate set is.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if ids is None:
        ids = np.arange(tables.segment_count, dtype=np.int64)
    else:
        ids = np.asarray(ids, dtype=np.int64)
    if len(ids) == 0:
        zero = np.complex128(0.0)
        return (zero, np.empty(0, dtype=np.complex128)) if per_scratch else zero
    dist = point_segment_distance(x0, tables.seg_p0[ids], tables.seg_p1[ids])
    ids = ids[dist <= kernel.influence_radius]
    if len(ids) == 0:
        zero = np.complex128(0.0)
        return (zero, np.empty(0, dtype=np.complex128)) if per_scratch else zero
    pt, sub = _expand_candidates(tables, np.zeros(len(ids), dtype=np.int64), ids)
    terms = pair_terms(tables, kernel, material, lam,
                       np.broadcast_to(x0, (len(sub), 2)),
                       np.full(len(sub), float(xi1)), np.full(len(sub), float(xi2)),
                       sub)
    if per_scratch:
        # sub-segments of one scratch always sum coherently
        owner = np.searchsorted(np.cumsum(
            tables.sub_start[ids + 1] - tables.sub_start[ids]),
            np.arange(len(sub)), side="right")
        per = np.bincount(owner, weights=terms.real, minlength=len(ids)) + \
            1.0j * np.bincount(owner, weights=terms.imag, minlength=len(ids))
        return np.sum(per), per
    return np.sum(terms)


def eval_brdf(x0, omega_i, omega_o, lam: float, tables: PatternTables | None,
              kernel: CoherenceKernel, material: MaterialParams,
              ids=None, coherent: bool = True) -> float:
    """BRDF value (1/sr) at a single shading point and direction pair.

    f_r = gamma_i * F / (pi sigma^2 lambda^2) * |B - S|^2, with B the
    flat-plane response and S the coherent scratch sum.  ``coherent``
    False replaces |B - S|^2 by |B|^2 + sum_k |S_k|^2 (mutual
    interference discarded, single-scratch diffraction kept).

    Mirror reflection with no scratches and unit amplitudes peaks at
    4 pi sigma^2 / lambda^2.
    """
    xi = compute_xi(omega_i, omega_o, lam)
    x0 = np.asarray(x0, dtype=np.float64)
    b = base_response(xi[0], xi[1], kernel, material.amplitude_base)
    if tables is None:
        s = 0.0
        per = np.empty(0, dtype=np.complex128)
    else:
        s, per = scratch_response(tables, kernel, material, lam, x0,
                                  float(xi[0]), float(xi[1]), ids, per_scratch=True)
    gamma_i = float(np.asarray(omega_i, dtype=np.float64)[..., 2])
    scale = gamma_i * float(material.fresnel(gamma_i)) / (kernel.shading_area * lam ** 2)
    if coherent:
        return scale * float(np.abs(b - s) ** 2)
    return scale * float(np.abs(b) ** 2 + np.sum(np.abs(per) ** 2))


def eval_brdf_batch(points, omega_i, omega_o, lam,
                    tables: PatternTables | None, kernel: CoherenceKernel,
                    material: MaterialParams, candidate_ids=None):
    """Vectorized BRDF over P shading points / direction pairs.

    Args:
        points: (P, 2) pattern-plane shading points.
        omega_i: (3,) or (P, 3) incident directions (away from surface).
        omega_o: (P, 3) outgoing directions.
        lam: wavelength, scalar or per-point (P,).
        candidate_ids: shared candidate scratch ids for the whole batch
            (e.g. a BVH query over the batch footprint); None = all.

    Returns:
        f_r values (P,).  Per-point candidates are culled at the kernel
        influence radius, so sharing one generous candidate list across
        the batch gives identical results to per-point queries.
    """
    points = np.asarray(points, dtype=np.float64)
    wi = np.broadcast_to(_unit_check(omega_i, "omega_i"), (len(points), 3))
    wo = _unit_check(omega_o, "omega_o")
    lam = np.broadcast_to(np.asarray(lam, dtype=np.float64), (len(points),))
    xi = (wo + wi) / lam[:, None]
    b = base_response(xi[:, 0], xi[:, 1], kernel, material.amplitude_base)
    s = np.zeros(len(points), dtype=np.complex128)
    if tables is not None:
        if candidate_ids is None:
            candidate_ids = np.arange(tables.segment_count, dtype=np.int64)
        else:
            candidate_ids = np.asarray(candidate_ids, dtype=np.int64)
        if len(candidate_ids):
            dist = point_segment_distance(points[:, None, :],
                                          tables.seg_p0[candidate_ids],
                                          tables.seg_p1[candidate_ids])
            pt_idx, cand_idx = np.nonzero(dist <= kernel.influence_radius)
            if len(pt_idx):
                pt, sub = _expand_candidates(tables, pt_idx, candidate_ids[cand_idx])
                terms = pair_terms(tables, kernel, material, lam[pt], points[pt],
                                   xi[pt, 0], xi[pt, 1], sub)
                s = (np.bincount(pt, weights=terms.real, minlength=len(points))
                     + 1.0j * np.bincount(pt, weights=terms.imag, minlength=len(points)))
    gamma_i = wi[:, 2]
    scale = gamma_i * material.fresnel(gamma_i) / (kernel.shading_area * lam ** 2)
    return scale * np.abs(b - s) ** 2
