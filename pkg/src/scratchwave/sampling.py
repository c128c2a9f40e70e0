"""Direction sampling for the wave BRDF and the microfacet base.

Three strategies, each a (sample, pdf) pair consistent in solid-angle
measure and broadcasting over leading batch axes:

* base lobe: Gaussian in the transverse frequency offset (the image of
  the coherence window); draws that would be evanescent are rejected,
  so the strategy deliberately integrates to the acceptance rate.
* scratch lobe: specular cone about the scratch tangent (theta_o =
  pi - theta_i, uniform azimuth), perturbed by a von Mises-Fisher
  offset, mirrored into the upper hemisphere with doubled density.
* microfacet: Trowbridge-Reitz half-vector sampling for blended patches.

Samplers accept a numpy Generator or pre-drawn uniforms ``u`` (for
stateless per-pixel streams); each consumes a fixed number per draw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import i0e

from .diffraction import CoherenceKernel, eta
from .scratch import scratch_frame


@dataclass(frozen=True)
class VmfParams:
    """Concentration of the scratch-lobe perturbation."""

    kappa: float = 2000.0

    def __post_init__(self):
        if not (np.isfinite(self.kappa) and self.kappa > 0):
            raise ValueError("kappa must be finite and > 0")


@dataclass(frozen=True)
class GgxParams:
    """Trowbridge-Reitz roughness."""

    alpha: float = 0.3

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and 0 < self.alpha <= 1):
            raise ValueError("alpha must be in (0, 1]")


@dataclass(frozen=True)
class SampleRecord:
    """One batched draw: direction, its density, and a validity mask.

    Invalid entries (evanescent base draws, horizon-grazing scratch
    draws) carry pdf 0 and must be skipped by the caller.
    """

    omega_o: np.ndarray
    pdf: np.ndarray
    strategy: str
    valid: np.ndarray


def _uniforms(rng, u, shape, count):
    if u is not None:
        u = np.asarray(u, dtype=np.float64)
        if u.shape != shape + (count,):
            raise ValueError(f"u must have shape {shape + (count,)}, got {u.shape}")
        if np.any(u < 0) or np.any(u >= 1):
            raise ValueError("u must lie in [0, 1)")
        return u
    if rng is None:
        raise ValueError("provide rng or pre-drawn u")
    return rng.uniform(size=shape + (count,))


def _check_incident(omega_i):
    omega_i = np.asarray(omega_i, dtype=np.float64)
    if omega_i.shape[-1] != 3:
        raise ValueError("directions are 3-vectors")
    if np.any(omega_i[..., 2] <= 0):
        raise ValueError("incident direction below the horizon")
    return omega_i


def _onb(v):
    # branchless frame (Duff et al.) valid for every unit v
    s = np.where(v[..., 2] >= 0.0, 1.0, -1.0)
    a = -1.0 / (s + v[..., 2])
    b = v[..., 0] * v[..., 1] * a
    e1 = np.stack([1.0 + s * v[..., 0] ** 2 * a, s * b, -s * v[..., 0]], axis=-1)
    e2 = np.stack([b, s + v[..., 1] ** 2 * a, -v[..., 1]], axis=-1)
    return e1, e2


# ---------------------------------------------------------------------------
# base lobe


def _base_std(kernel, lam):
    # |base response|^2 is Gaussian in the transverse frequency offset;
    # in direction-cosine units the per-axis std is lambda/(sqrt 8 pi sigma)
    return lam / (np.sqrt(8.0) * np.pi * kernel.sigma)


def sample_base(omega_i, kernel: CoherenceKernel, lam, rng=None, u=None):
    """Draw the outgoing direction from the base lobe around the mirror."""
    omega_i = _check_incident(omega_i)
    shape = omega_i.shape[:-1]
    uu = _uniforms(rng, u, shape, 2)
    # Box-Muller; u0 = 0 maps to the mode, never log(0)
    r = np.sqrt(-2.0 * np.log1p(-uu[..., 0]))
    ang = 2.0 * np.pi * uu[..., 1]
    std = _base_std(kernel, lam)
    s1 = std * r * np.cos(ang)
    s2 = std * r * np.sin(ang)
    alpha_o = s1 - omega_i[..., 0]
    beta_o = s2 - omega_i[..., 1]
    rsq = alpha_o ** 2 + beta_o ** 2
    valid = rsq < 1.0
    gamma_o = np.sqrt(np.maximum(1.0 - rsq, 0.0))
    omega_o = np.stack([alpha_o, beta_o, gamma_o], axis=-1)
    dens = np.exp(-(s1 ** 2 + s2 ** 2) / (2.0 * std ** 2)) / (2.0 * np.pi * std ** 2)
    pdf = np.where(valid, dens * gamma_o, 0.0)
    return SampleRecord(omega_o, pdf, "base", valid)


def pdf_base(omega_i, omega_o, kernel: CoherenceKernel, lam):
    """Solid-angle density of sample_base; zero below the horizon."""
    omega_i = _check_incident(omega_i)
    omega_o = np.asarray(omega_o, dtype=np.float64)
    std = _base_std(kernel, lam)
    s1 = omega_o[..., 0] + omega_i[..., 0]
    s2 = omega_o[..., 1] + omega_i[..., 1]
    gamma_o = omega_o[..., 2]
    dens = np.exp(-(s1 ** 2 + s2 ** 2) / (2.0 * std ** 2)) / (2.0 * np.pi * std ** 2)
    return np.where(gamma_o > 0.0, dens * gamma_o, 0.0)


# ---------------------------------------------------------------------------
# scratch lobe


def _check_tangent(tangent):
    tangent = np.asarray(tangent, dtype=np.float64)
    if tangent.shape[-1] != 3:
        raise ValueError("tangent is a 3-vector")
    nrm = np.linalg.norm(tangent, axis=-1)
    if np.any(np.abs(nrm - 1.0) > 1e-6):
        raise ValueError("tangent must be unit length")
    if np.any(np.abs(tangent[..., 2]) > 1e-9):
        raise ValueError("tangent must lie in the surface plane")
    return tangent


def scratch_cone_density(cos_ti, cos_to, kappa):
    """Azimuth-uniform density on the sphere, peaked on the reflected
    cone cos(theta_o) = -cos(theta_i) about the tangent.

    Written with scaled Bessel/exp factors so it stays finite for any
    kappa; the exponent -kappa (1 + cos(theta_i + theta_o)) is <= 0.
    """
    cos_ti = np.asarray(cos_ti, dtype=np.float64)
    cos_to = np.asarray(cos_to, dtype=np.float64)
    sin_ti = np.sqrt(np.maximum(1.0 - cos_ti ** 2, 0.0))
    sin_to = np.sqrt(np.maximum(1.0 - cos_to ** 2, 0.0))
    pref = kappa / (2.0 * np.pi * -np.expm1(-2.0 * kappa))
    expo = -kappa * (1.0 + cos_ti * cos_to - sin_ti * sin_to)
    return pref * i0e(kappa * sin_ti * sin_to) * np.exp(expo)


def sample_scratch(omega_i, tangent, vmf: VmfParams, rng=None, u=None):
    """Draw from the mirrored scratch lobe about ``tangent``."""
    omega_i = _check_incident(omega_i)
    tangent = _check_tangent(tangent)
    shape = np.broadcast_shapes(omega_i.shape[:-1], tangent.shape[:-1])
    uu = _uniforms(rng, u, shape, 3)
    kappa = vmf.kappa

    cos_ti = np.sum(omega_i * tangent, axis=-1)
    sin_ti = np.sqrt(np.maximum(1.0 - cos_ti ** 2, 0.0))
    b1, b2 = _onb(tangent)
    phi_c = 2.0 * np.pi * uu[..., 0]
    axis = (-cos_ti[..., None] * tangent
            + (sin_ti * np.cos(phi_c))[..., None] * b1
            + (sin_ti * np.sin(phi_c))[..., None] * b2)

    # vMF polar component by inverse CDF, safe across the whole kappa range
    w = 1.0 + np.log1p((uu[..., 1] - 1.0) * -np.expm1(-2.0 * kappa)) / kappa
    w = np.clip(np.nan_to_num(w, nan=-1.0, neginf=-1.0), -1.0, 1.0)
    psi = 2.0 * np.pi * uu[..., 2]
    e1, e2 = _onb(axis)
    root = np.sqrt(np.maximum(1.0 - w ** 2, 0.0))
    omega_o = (w[..., None] * axis
               + (root * np.cos(psi))[..., None] * e1
               + (root * np.sin(psi))[..., None] * e2)
    # fold into the upper hemisphere; theta_o is unchanged because the
    # tangent has no normal component
    omega_o[..., 2] = np.abs(omega_o[..., 2])
    valid = omega_o[..., 2] > 0.0
    pdf = pdf_scratch(omega_i, omega_o, tangent, vmf)
    return SampleRecord(omega_o, np.where(valid, pdf, 0.0), "scratch", valid)


def pdf_scratch(omega_i, omega_o, tangent, vmf: VmfParams):
    """Solid-angle density of sample_scratch: the cone density doubled
    on the upper hemisphere, zero below."""
    omega_i = _check_incident(omega_i)
    tangent = _check_tangent(tangent)
    omega_o = np.asarray(omega_o, dtype=np.float64)
    cos_ti = np.sum(omega_i * tangent, axis=-1)
    cos_to = np.sum(omega_o * tangent, axis=-1)
    dens = 2.0 * scratch_cone_density(cos_ti, cos_to, vmf.kappa)
    return np.where(omega_o[..., 2] > 0.0, dens, 0.0)


# ---------------------------------------------------------------------------
# microfacet base


def eval_ggx(omega_i, omega_o, ggx: GgxParams, f0=1.0):
    """Trowbridge-Reitz reflectance with Smith height-correlated
    masking-shadowing and a Schlick factor at the half vector."""
    omega_i = np.asarray(omega_i, dtype=np.float64)
    omega_o = np.asarray(omega_o, dtype=np.float64)
    gi = omega_i[..., 2]
    go = omega_o[..., 2]
    up = (gi > 0.0) & (go > 0.0)
    h = omega_i + omega_o
    hn = np.linalg.norm(h, axis=-1)
    h = h / np.where(hn > 0.0, hn, 1.0)[..., None]
    nh = h[..., 2]
    ih = np.abs(np.sum(omega_i * h, axis=-1))
    a2 = ggx.alpha ** 2
    d = a2 / (np.pi * (nh ** 2 * (a2 - 1.0) + 1.0) ** 2)
    vis = 0.5 / (go * np.sqrt(a2 + (1.0 - a2) * gi ** 2)
                 + gi * np.sqrt(a2 + (1.0 - a2) * go ** 2)
                 + 1e-300)
    fres = f0 + (1.0 - f0) * (1.0 - ih) ** 5
    out = d * vis * fres
    return np.where(up & (hn > 0.0), out, 0.0)


def sample_ggx(omega_i, ggx: GgxParams, rng=None, u=None):
    """Half-vector draw proportional to the Trowbridge-Reitz lobe."""
    omega_i = _check_incident(omega_i)
    shape = omega_i.shape[:-1]
    uu = _uniforms(rng, u, shape, 2)
    a2 = ggx.alpha ** 2
    cos_h = np.sqrt((1.0 - uu[..., 0]) / (1.0 + uu[..., 0] * (a2 - 1.0)))
    sin_h = np.sqrt(np.maximum(1.0 - cos_h ** 2, 0.0))
    phi = 2.0 * np.pi * uu[..., 1]
    h = np.stack([sin_h * np.cos(phi), sin_h * np.sin(phi), cos_h], axis=-1)
    ih = np.sum(omega_i * h, axis=-1)
    omega_o = 2.0 * ih[..., None] * h - omega_i
    valid = (omega_o[..., 2] > 0.0) & (ih > 0.0)
    d = a2 / (np.pi * (cos_h ** 2 * (a2 - 1.0) + 1.0) ** 2)
    pdf = np.where(valid, d * cos_h / (4.0 * np.abs(ih) + 1e-300), 0.0)
    return SampleRecord(omega_o, pdf, "ggx", valid)


def pdf_ggx(omega_i, omega_o, ggx: GgxParams):
    """Solid-angle density of sample_ggx."""
    omega_i = _check_incident(omega_i)
    omega_o = np.asarray(omega_o, dtype=np.float64)
    h = omega_i + omega_o
    hn = np.linalg.norm(h, axis=-1)
    h = h / np.where(hn > 0.0, hn, 1.0)[..., None]
    nh = h[..., 2]
    ih = np.abs(np.sum(omega_i * h, axis=-1))
    a2 = ggx.alpha ** 2
    d = a2 / (np.pi * (nh ** 2 * (a2 - 1.0) + 1.0) ** 2)
    pdf = d * nh / (4.0 * ih + 1e-300)
    return np.where((omega_o[..., 2] > 0.0) & (hn > 0.0), pdf, 0.0)


# ---------------------------------------------------------------------------
# combination


def combine_mis(f_values, pdfs):
    """Balance-heuristic combination at one sampled direction.

    ``pdfs`` holds every strategy's density at that direction along the
    last axis.  Returns (estimate, weights): weights w_i = pdf_i / sum_j
    pdf_j, and estimate = f / sum_j pdf_j, which equals w_g * f / pdf_g
    for whichever strategy g generated the sample.

    Raises ValueError where every pdf vanishes.
    """
    f = np.asarray(f_values, dtype=np.float64)
    p = np.asarray(pdfs, dtype=np.float64)
    if np.any(p < 0.0):
        raise ValueError("pdfs must be nonnegative")
    tot = np.sum(p, axis=-1)
    if np.any(tot <= 0.0):
        raise ValueError("all strategy pdfs are zero")
    return f / tot, p / tot[..., None]


def blend_weight(candidates, kernel: CoherenceKernel, x0):
    """Gaussian-weighted scratch coverage of the window at x0, in [0, 1].

    Sum over candidate scratches of width times the window line
    integral, normalized by the window's full integral; the microfacet
    base is faded out by this amount.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    total = 0.0
    for seg in candidates:
        frame = scratch_frame(seg)
        d = seg.midpoint - x0
        r_tan = float(d @ frame.tangent)
        r_bit = float(d @ frame.bitangent)
        line = eta(0.0, 0.0, r_tan, r_bit, seg.length, kernel.sigma).real
        total += seg.width * line
    return float(np.clip(total / kernel.window_integral, 0.0, 1.0))
