import math

import numpy as np
import pytest
from scipy.stats import chisquare, norm

from scratchwave.diffraction import CoherenceKernel
from scratchwave.sampling import (GgxParams, SampleRecord, VmfParams,
                                  blend_weight, combine_mis, eval_ggx,
                                  pdf_base, pdf_ggx, pdf_scratch, sample_base,
                                  sample_ggx, sample_scratch,
                                  scratch_cone_density)
from scratchwave.scratch import ProfileKind, ScratchSegment

SIGMA = 10e-6
LAM = 0.5e-6
KERNEL = CoherenceKernel(SIGMA)
UP = np.array([0.0, 0.0, 1.0])
TAN = np.array([1.0, 0.0, 0.0])


def from_ab(a, b):
    return np.array([a, b, math.sqrt(1.0 - a * a - b * b)])


def test_param_validation():
    with pytest.raises(ValueError):
        VmfParams(0.0)
    with pytest.raises(ValueError):
        GgxParams(0.0)
    with pytest.raises(ValueError):
        GgxParams(1.5)
    VmfParams(1e6)
    GgxParams(1.0)


# ---------------------------------------------------------------------------
# base lobe


def test_base_huge_sigma_collapses_to_mirror():
    kernel = CoherenceKernel(1e6 * LAM)
    wi = from_ab(0.3, -0.2)
    rec = sample_base(np.broadcast_to(wi, (1000, 3)), kernel, LAM,
                      rng=np.random.default_rng(0))
    mirror = np.array([-0.3, 0.2, wi[2]])
    assert np.all(rec.valid)
    assert np.max(np.linalg.norm(rec.omega_o - mirror, axis=-1)) < 1e-4


def test_base_sample_mean_is_centered():
    n = 100_000
    rec = sample_base(np.broadcast_to(UP, (n, 3)), KERNEL, LAM,
                      rng=np.random.default_rng(1))
    std = LAM / (math.sqrt(8.0) * math.pi * SIGMA)
    se = std / math.sqrt(n)
    assert abs(np.mean(rec.omega_o[:, 0])) < 3 * se
    assert abs(np.mean(rec.omega_o[:, 1])) < 3 * se


def test_base_chi_square_against_target_gaussian():
    n = 100_000
    rec = sample_base(np.broadcast_to(UP, (n, 3)), KERNEL, LAM,
                      rng=np.random.default_rng(2))
    assert np.all(rec.valid)
    std = LAM / (math.sqrt(8.0) * math.pi * SIGMA)
    # at normal incidence the frequency offsets equal the direction
    # cosines; 32 equiprobable strata per axis
    edges = norm.ppf(np.linspace(0.0, 1.0, 33), scale=std)
    ix = np.clip(np.searchsorted(edges, rec.omega_o[:, 0]) - 1, 0, 31)
    iy = np.clip(np.searchsorted(edges, rec.omega_o[:, 1]) - 1, 0, 31)
    counts = np.bincount(ix * 32 + iy, minlength=1024)
    _, p = chisquare(counts)
    assert p > 0.001


def test_base_pdf_peaks_at_mirror_and_vanishes_below():
    wi = from_ab(0.2, 0.1)
    mirror = from_ab(-0.2, -0.1)
    p_mirror = pdf_base(wi, mirror, KERNEL, LAM)
    rng = np.random.default_rng(3)
    for _ in range(50):
        wo = from_ab(*rng.uniform(-0.5, 0.5, 2))
        assert pdf_base(wi, wo, KERNEL, LAM) <= p_mirror
    below = np.array([0.1, 0.1, -0.99])
    assert pdf_base(wi, below, KERNEL, LAM) == 0.0


def test_base_pdf_integrates_to_acceptance_rate():
    # wide lobe at grazing incidence loses real evanescent mass
    kernel = CoherenceKernel(2e-6)
    lam = 0.7e-6
    wi = from_ab(0.995, 0.0)
    rec = sample_base(np.broadcast_to(wi, (200_000, 3)), kernel, lam,
                      rng=np.random.default_rng(4))
    acceptance = float(np.mean(rec.valid))
    assert 0.2 < acceptance < 0.9

    rng = np.random.default_rng(5)
    m = 640
    gw = (np.arange(m)[:, None] + rng.random((m, m))) / m
    gp = (np.arange(m)[None, :] + rng.random((m, m))) / m * 2.0 * np.pi
    w = gw.ravel()
    root = np.sqrt(1.0 - w ** 2)
    omega = np.stack([root * np.cos(gp.ravel()), root * np.sin(gp.ravel()), w],
                     axis=-1)
    integral = float(np.mean(pdf_base(wi, omega, kernel, lam))) * 2.0 * np.pi
    assert integral == pytest.approx(acceptance, abs=0.01)


def test_base_record_pdf_matches_pdf_fn():
    wi = from_ab(0.4, 0.1)
    rec = sample_base(np.broadcast_to(wi, (500, 3)), KERNEL, LAM,
                      rng=np.random.default_rng(6))
    ref = pdf_base(wi, rec.omega_o, KERNEL, LAM)
    assert np.allclose(rec.pdf[rec.valid], ref[rec.valid], rtol=1e-12)
    assert rec.strategy == "base"


# ---------------------------------------------------------------------------
# scratch lobe


def test_scratch_high_kappa_sticks_to_cone():
    wi = from_ab(0.6, 0.2)
    theta_cone = math.pi - math.acos(wi @ TAN)
    rec = sample_scratch(np.broadcast_to(wi, (1000, 3)), TAN, VmfParams(1e6),
                         rng=np.random.default_rng(7))
    theta_o = np.arccos(np.clip(rec.omega_o @ TAN, -1, 1))
    assert np.max(np.abs(theta_o - theta_cone)) < 1e-2
    assert np.all(rec.omega_o[:, 2] >= 0.0)


def test_cone_density_normalizes_on_sphere():
    rng = np.random.default_rng(8)
    m = 1024
    w = ((np.arange(m)[:, None] + rng.random((m, m))) / m * 2.0 - 1.0).ravel()
    cos_ti = math.cos(1.1)
    for kappa in (0.5, 50.0, 2000.0):
        dens = scratch_cone_density(cos_ti, w, kappa)
        integral = float(np.mean(dens)) * 4.0 * np.pi
        assert integral == pytest.approx(1.0, abs=0.005)


def test_cone_density_reference_value():
    # kappa/(4 pi sinh kappa) exp(-kappa/4) I0(3 kappa/4) at kappa = 50,
    # both angles pi/3; reference from a 40-digit evaluation
    got = float(scratch_cone_density(0.5, 0.5, 50.0))
    assert got == pytest.approx(7.224204484569749e-12, rel=1e-9)


def test_cone_density_uniform_limit():
    assert float(scratch_cone_density(0.3, -0.8, 1e-9)) == pytest.approx(
        1.0 / (4.0 * math.pi), rel=1e-6)


def test_scratch_pdf_axisymmetric_and_folded():
    wi = from_ab(0.5, 0.0)
    vmf = VmfParams(200.0)
    cos_to = 0.3
    vals = []
    for psi in (0.1, 1.0, 2.0, 3.0):
        sin_to = math.sqrt(1 - cos_to ** 2)
        wo = np.array([cos_to, sin_to * math.cos(psi), sin_to * math.sin(psi)])
        if wo[2] <= 0:
            continue
        vals.append(float(pdf_scratch(wi, wo, TAN, vmf)))
    assert np.allclose(vals, vals[0], rtol=1e-12)
    below = np.array([0.3, 0.2, -0.93])
    below /= np.linalg.norm(below)
    assert float(pdf_scratch(wi, below, TAN, vmf)) == 0.0
    # I0(0) path stays finite when the incident direction rides the axis
    assert np.isfinite(scratch_cone_density(1.0, 0.2, 500.0))


def test_scratch_histogram_matches_density():
    n = 100_000
    wi = from_ab(0.5, 0.3)
    vmf = VmfParams(50.0)
    rec = sample_scratch(np.broadcast_to(wi, (n, 3)), TAN, vmf,
                         rng=np.random.default_rng(9))
    assert np.all(rec.valid)
    cos_ti = float(wi @ TAN)

    # the tangent marginal is 2 pi p(x); equiprobable edges from its CDF
    xg = np.linspace(-1.0, 1.0, 20001)
    q = 2.0 * np.pi * scratch_cone_density(cos_ti, xg, vmf.kappa)
    cdf = np.concatenate([[0.0], np.cumsum((q[1:] + q[:-1]) * 0.5 * np.diff(xg))])
    cdf /= cdf[-1]
    nx, npsi = 16, 8
    edges = np.interp(np.linspace(0.0, 1.0, nx + 1), cdf, xg)

    x = rec.omega_o @ TAN
    # azimuth about the tangent, folded to (0, pi) by construction
    psi = np.arctan2(rec.omega_o[:, 2], rec.omega_o[:, 1])
    ix = np.clip(np.searchsorted(edges, x) - 1, 0, nx - 1)
    ipsi = np.clip((psi / np.pi * npsi).astype(int), 0, npsi - 1)
    counts = np.bincount(ix * npsi + ipsi, minlength=nx * npsi)
    _, p = chisquare(counts)
    assert p > 0.001


def test_scratch_record_pdf_matches_pdf_fn():
    wi = from_ab(0.2, -0.4)
    tan = np.array([0.6, 0.8, 0.0])
    rec = sample_scratch(np.broadcast_to(wi, (300, 3)), tan, VmfParams(),
                         rng=np.random.default_rng(10))
    ref = pdf_scratch(wi, rec.omega_o, tan, VmfParams())
    assert np.allclose(rec.pdf[rec.valid], ref[rec.valid], rtol=1e-12)
    assert rec.strategy == "scratch"


def test_scratch_tangent_validation():
    wi = from_ab(0.1, 0.1)
    with pytest.raises(ValueError, match="unit"):
        pdf_scratch(wi, UP, np.array([2.0, 0.0, 0.0]), VmfParams())
    with pytest.raises(ValueError, match="plane"):
        pdf_scratch(wi, UP, np.array([0.0, 0.6, 0.8]), VmfParams())


# ---------------------------------------------------------------------------
# microfacet


def test_ggx_normal_incidence_value():
    ggx = GgxParams(0.1)
    got = float(eval_ggx(UP, UP, ggx, f0=1.0))
    assert got == pytest.approx(1.0 / (4.0 * math.pi * 0.01), rel=1e-12)


def test_ggx_matches_independent_reference():
    # D * G / (4 gi go) with Smith lambda terms, written separately
    def reference(wi, wo, alpha):
        h = wi + wo
        h = h / np.linalg.norm(h)
        a2 = alpha * alpha
        d = a2 / (math.pi * (h[2] ** 2 * (a2 - 1.0) + 1.0) ** 2)

        def lam_smith(c):
            t2 = (1.0 - c * c) / (c * c)
            return 0.5 * (math.sqrt(1.0 + a2 * t2) - 1.0)

        g = 1.0 / (1.0 + lam_smith(wi[2]) + lam_smith(wo[2]))
        return d * g / (4.0 * wi[2] * wo[2])

    rng = np.random.default_rng(11)
    for alpha in (0.1, 0.4, 1.0):
        for _ in range(40):
            wi = from_ab(*rng.uniform(-0.6, 0.6, 2))
            wo = from_ab(*rng.uniform(-0.6, 0.6, 2))
            got = float(eval_ggx(wi, wo, GgxParams(alpha), f0=1.0))
            assert got == pytest.approx(reference(wi, wo, alpha), rel=1e-9)


def test_ggx_below_horizon_is_zero():
    wi = from_ab(0.2, 0.0)
    below = np.array([0.3, 0.1, -0.5])
    assert float(eval_ggx(wi, below, GgxParams(0.3))) == 0.0
    grazing = np.array([1.0, 0.0, 0.0])
    assert float(eval_ggx(wi, grazing, GgxParams(0.3))) == 0.0


def test_ggx_white_furnace():
    rng = np.random.default_rng(12)
    m = 640
    gw = ((np.arange(m)[:, None] + rng.random((m, m))) / m).ravel()
    gp = ((np.arange(m)[None, :] + rng.random((m, m))) / m * 2 * np.pi).ravel()
    root = np.sqrt(1.0 - gw ** 2)
    omega = np.stack([root * np.cos(gp), root * np.sin(gp), gw], axis=-1)
    wi = from_ab(0.25, 0.0)
    for alpha in (0.1, 0.5):
        f = eval_ggx(wi, omega, GgxParams(alpha), f0=1.0)
        integral = float(np.mean(f * gw)) * 2.0 * np.pi
        assert 0.6 < integral <= 1.002


def test_ggx_sampler_consistency():
    wi = from_ab(0.3, -0.1)
    ggx = GgxParams(0.35)
    rec = sample_ggx(np.broadcast_to(wi, (200_000, 3)), ggx,
                     rng=np.random.default_rng(13))
    ref = pdf_ggx(wi, rec.omega_o, ggx)
    assert np.allclose(rec.pdf[rec.valid], ref[rec.valid], rtol=1e-10)
    # E[gamma_o / pdf] over accepted draws estimates the projected
    # hemisphere area pi
    est = np.where(rec.valid, rec.omega_o[:, 2] / np.where(rec.pdf > 0, rec.pdf, 1.0),
                   0.0)
    assert float(np.mean(est)) == pytest.approx(math.pi, rel=0.03)


# ---------------------------------------------------------------------------
# combination


def test_combine_mis_examples():
    est, w = combine_mis(2.0, [0.5, 0.0])
    assert np.allclose(w, [1.0, 0.0])
    assert est == pytest.approx(4.0)
    est, w = combine_mis(1.0, [0.7, 0.7])
    assert np.allclose(w, [0.5, 0.5])
    rng = np.random.default_rng(14)
    pdfs = rng.uniform(0.0, 3.0, (100, 4)) + 1e-9
    _, w = combine_mis(np.ones(100), pdfs)
    assert np.allclose(np.sum(w, axis=-1), 1.0)
    with pytest.raises(ValueError):
        combine_mis(1.0, [0.0, 0.0])
    with pytest.raises(ValueError):
        combine_mis(1.0, [-0.1, 0.5])


def test_combine_mis_matches_generator_weighting():
    # f / sum(p) must equal w_g * f / p_g for the generating strategy
    f, pdfs = 3.0, np.array([0.2, 0.6, 1.2])
    est, w = combine_mis(f, pdfs)
    for g in range(3):
        assert est == pytest.approx(w[g] * f / pdfs[g])


def test_blend_weight_cases():
    assert blend_weight([], KERNEL, [0.0, 0.0]) == 0.0
    long = ScratchSegment((-2e-3, 0.0), (2e-3, 0.0), 1e-6, 0.1e-6,
                          ProfileKind.RECT)
    got = blend_weight([long], KERNEL, [0.0, 0.0])
    assert got == pytest.approx(1e-6 / (math.sqrt(2 * math.pi) * SIGMA),
                                rel=1e-6)
    far = ScratchSegment((-2e-3, 1e-3), (2e-3, 1e-3), 1e-6, 0.1e-6,
                         ProfileKind.RECT)
    assert blend_weight([far], KERNEL, [0.0, 0.0]) < 1e-12
    dense = [ScratchSegment((-1e-3, k * 1e-6 - 3e-5), (1e-3, k * 1e-6 - 3e-5),
                            1.5e-6, 0.1e-6, ProfileKind.RECT)
             for k in range(61)]
    assert blend_weight(dense, KERNEL, [0.0, 0.0]) == 1.0


def test_sample_record_fields():
    rec = SampleRecord(UP, np.float64(1.0), "base", np.bool_(True))
    assert rec.strategy == "base"
