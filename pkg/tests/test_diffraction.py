import math

import numpy as np
import pytest

from oracles import (agreement_error, eta_line_quadrature,
                     profile_ft_quadrature)
from scratchwave.diffraction import (CoherenceKernel, MaterialParams,
                                     base_response, build_tables, compute_xi,
                                     eta, eval_brdf, eval_brdf_batch, mask_ft,
                                     profile_ft_rect, profile_ft_triangle,
                                     profile_minus_mask, scratch_response)
from scratchwave.scratch import ProfileKind, ScratchSegment, VariationSpec

SIGMA = 10e-6
LAM = 0.5e-6
KERNEL = CoherenceKernel(SIGMA)
MAT = MaterialParams()


def norm_dir(a, b):
    return np.array([a, b, math.sqrt(1.0 - a * a - b * b)])


# ---------------------------------------------------------------------------
# xi and kernel


def test_xi_zero_at_mirror():
    wi = norm_dir(0.3, -0.4)
    wo = norm_dir(-0.3, 0.4)
    xi = compute_xi(wi, wo, LAM)
    assert xi[0] == 0.0 and xi[1] == 0.0
    assert xi[2] == pytest.approx(2 * wi[2] / LAM)


def test_xi_validation():
    up = np.array([0, 0, 1.0])
    with pytest.raises(ValueError, match="unit"):
        compute_xi([0, 0, 2.0], up, LAM)
    with pytest.raises(ValueError, match="horizon"):
        compute_xi([0, 0, -1.0], up, LAM)
    with pytest.raises(ValueError, match="wavelength"):
        compute_xi(up, up, 0.0)


def test_kernel_derived_quantities():
    assert KERNEL.coherence_diameter == pytest.approx(60e-6)
    assert KERNEL.shading_area == pytest.approx(math.pi * SIGMA ** 2)
    assert KERNEL.window_integral == pytest.approx(2 * math.pi * SIGMA ** 2)
    assert KERNEL.influence_radius == pytest.approx(30e-6)
    assert KERNEL.window([[0, 0], [3 * SIGMA, 0]], [0, 0]) == pytest.approx(
        [1.0, math.exp(-4.5)])
    with pytest.raises(ValueError):
        CoherenceKernel(0.0)


# ---------------------------------------------------------------------------
# base response


def test_base_peak_is_window_integral():
    assert base_response(0.0, 0.0, KERNEL) == pytest.approx(2 * math.pi * SIGMA ** 2)


def test_base_falloff_matches_sigma():
    # exponent -2 pi^2 sigma^2 |xi|^2: at |xi| = 1/(2 pi sigma) the
    # response drops by exactly e^{-1/2}
    xi = 1.0 / (2 * math.pi * SIGMA)
    ratio = base_response(xi, 0.0, KERNEL) / base_response(0.0, 0.0, KERNEL)
    assert ratio == pytest.approx(math.exp(-0.5), rel=1e-12)


def test_base_amplitude_scaling():
    assert base_response(1e5, 2e5, KERNEL, amplitude=0.25) == pytest.approx(
        0.25 * base_response(1e5, 2e5, KERNEL))


# ---------------------------------------------------------------------------
# eta


def test_eta_centered_segment_reference_value():
    # centered segment spanning the window, xi' = 0: the integral is
    # sqrt(2 pi) sigma erf(3 / sqrt 2)
    v = eta(0.0, 0.0, 0.0, 0.0, 6 * SIGMA, SIGMA)
    assert v.imag == 0.0
    assert v.real / SIGMA == pytest.approx(2.49986088, rel=1e-8)


def test_eta_long_segment_gaussian_envelope():
    xi1 = 1.0 / (2 * math.pi * SIGMA)
    v = eta(xi1, 0.0, 0.0, 0.0, 600 * SIGMA, SIGMA)
    assert abs(v) / (math.sqrt(2 * math.pi) * SIGMA) == pytest.approx(
        math.exp(-0.5), rel=1e-10)


def test_eta_bitangential_offset_bound():
    v = eta(0.0, 0.0, 0.0, 5 * SIGMA, 6 * SIGMA, SIGMA)
    assert abs(v) <= math.exp(-12.5) * math.sqrt(2 * math.pi) * SIGMA


def test_eta_against_quadrature_sample():
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(300):
        sigma = rng.uniform(2e-6, 20e-6)
        xi1p = rng.uniform(-300, 300) / (2 * math.pi * sigma)
        xi2p = rng.uniform(-4e6, 4e6)
        rt = rng.uniform(-3, 3) * sigma
        rb = rng.uniform(-3, 3) * sigma
        length = rng.uniform(2e-6, 100e-6)
        got = complex(eta(xi1p, xi2p, rt, rb, length, sigma))
        want, floor = eta_line_quadrature(xi1p, xi2p, rt, rb, length, sigma)
        worst = max(worst, agreement_error(got, want, floor))
    assert worst < 1e-6


def test_eta_short_segment_branch_against_quadrature():
    rng = np.random.default_rng(19)
    for _ in range(200):
        sigma = rng.uniform(2e-6, 20e-6)
        xi1p = rng.uniform(-300, 300) / (2 * math.pi * sigma)
        rt = rng.uniform(-2, 2) * sigma
        length = sigma * 10 ** rng.uniform(-6, -0.5)
        got = complex(eta(xi1p, 0.0, rt, 0.0, length, sigma))
        want, floor = eta_line_quadrature(xi1p, 0.0, rt, 0.0, length, sigma)
        assert agreement_error(got, want, floor, rel_tol=1e-8) < 1e-8


def test_eta_additive_under_subdivision():
    # splitting the segment cannot change the integral
    xi1p, xi2p = 3e5, -2e5
    rt, rb = 4e-6, -6e-6
    length = 5e-5
    whole = eta(xi1p, xi2p, rt, rb, length, SIGMA)
    thirds = 0.0
    for k in range(3):
        mid_k = rt - length / 2 + (k + 0.5) * length / 3
        thirds += eta(xi1p, xi2p, mid_k, rb, length / 3, SIGMA)
    assert abs(whole - thirds) / abs(whole) < 1e-12


def test_eta_broadcasts():
    xi1 = np.linspace(-1e6, 1e6, 7)
    out = eta(xi1, 0.0, 0.0, 0.0, 4e-5, SIGMA)
    assert out.shape == (7,)
    assert complex(out[3]) == pytest.approx(complex(eta(xi1[3], 0.0, 0.0, 0.0, 4e-5, SIGMA)))


def test_eta_validation():
    with pytest.raises(ValueError):
        eta(0.0, 0.0, 0.0, 0.0, 0.0, SIGMA)
    with pytest.raises(ValueError):
        eta(0.0, 0.0, 0.0, 0.0, 1e-5, -SIGMA)


# ---------------------------------------------------------------------------
# profile transforms


def test_mask_ft_dc_and_zeros():
    w = 1e-6
    assert mask_ft(0.0, w) == pytest.approx(w)
    for m in (1, 2, 3):
        assert abs(mask_ft(m / w, w)) < 1e-22
    # zeros scale with 1/W independent of wavelength by construction
    assert abs(mask_ft(2 / (3 * w), 3 * w)) < 1e-21


def test_rect_profile_is_mask_times_depth_phase():
    w, d = 1e-6, 0.2e-6
    xi = np.linspace(-3e6, 3e6, 11)
    got = profile_ft_rect(xi, w, d, LAM)
    assert np.allclose(got, mask_ft(xi, w) * np.exp(-4j * np.pi * d / LAM))


def test_rect_invisibility_at_half_wavelength_depth():
    xi = np.linspace(-4e6, 4e6, 33)
    diff = mask_ft(xi, 1e-6) - profile_ft_rect(xi, 1e-6, LAM / 2, LAM)
    assert np.max(np.abs(diff)) < 1e-21


def test_triangle_reduces_to_mask_at_zero_depth():
    xi = np.linspace(-4e6, 4e6, 33)
    assert np.allclose(profile_ft_triangle(xi, 1e-6, 0.0, LAM),
                       mask_ft(xi, 1e-6), rtol=1e-14, atol=1e-22)


def test_profile_fts_match_quadrature():
    rng = np.random.default_rng(23)
    for _ in range(150):
        w = rng.uniform(0.2e-6, 5e-6)
        d = rng.uniform(0.0, 1.5e-6)
        lam = rng.uniform(380e-9, 720e-9)
        xi = rng.uniform(-4 / lam, 4 / lam)
        for kind, fn in (("rect", profile_ft_rect), ("tri", profile_ft_triangle)):
            got = complex(fn(xi, w, d, lam))
            want = profile_ft_quadrature(xi, w, d, lam, kind)
            assert abs(got - want) <= 1e-8 * max(abs(want), 1e-3 * w)


def test_triangle_series_bridges_singular_points():
    w, d = 1e-6, 0.3e-6
    xi_s = 4 * d / (w * LAM)
    vals = profile_ft_triangle(xi_s * (1 + np.array([-1e-7, 0.0, 1e-7])), w, d, LAM)
    assert abs(vals[1] - vals[0]) / abs(vals[1]) < 1e-6
    assert abs(vals[1] - vals[2]) / abs(vals[1]) < 1e-6
    want = profile_ft_quadrature(xi_s, w, d, LAM, "tri")
    assert abs(complex(vals[1]) - want) / abs(want) < 1e-10


def test_profile_minus_mask_mixes_profiles():
    xi = np.array([1e5, 2e5, 3e5])
    w = np.full(3, 1e-6)
    d = np.full(3, 0.2e-6)
    code = np.array([0, 1, 0], dtype=np.uint8)
    out = profile_minus_mask(xi, w, d, LAM, code, MAT)
    assert out[0] == pytest.approx(complex(mask_ft(xi[0], w[0])
                                           - profile_ft_rect(xi[0], w[0], d[0], LAM)))
    assert out[1] == pytest.approx(complex(mask_ft(xi[1], w[1])
                                           - profile_ft_triangle(xi[1], w[1], d[1], LAM)))


# ---------------------------------------------------------------------------
# tables, scratch response, brdf


def centered_scratch(length=4e-5, width=1e-6, depth=0.125e-6, offset=0.0,
                     kind=ProfileKind.RECT):
    return ScratchSegment((-length / 2, offset), (length / 2, offset),
                          width, depth, kind)


def test_tables_without_variation_one_to_one():
    tabs = build_tables([centered_scratch(), centered_scratch(offset=5e-6)])
    assert tabs.sub_count == 2
    assert np.array_equal(tabs.sub_start, [0, 1, 2])
    assert np.allclose(tabs.sub_len, 4e-5)


def test_tables_variation_subdivides():
    spec = VariationSpec(0.3e-6, 0.05e-6, 1e5, seed=4)
    tabs = build_tables([centered_scratch(length=8e-5)], spec, KERNEL)
    assert tabs.sub_count >= 8
    assert np.sum(tabs.sub_len) == pytest.approx(8e-5)
    assert np.all(tabs.sub_width >= 0.7e-6 - 1e-15)
    assert np.all(tabs.sub_width <= 1.3e-6 + 1e-15)


def test_scratch_sum_invariant_under_forced_subdivision():
    # zero-amplitude variation still subdivides; the coherent sum must
    # agree with the unsubdivided evaluation to near machine precision
    seg = centered_scratch(length=7e-5, depth=0.2e-6)
    plain = build_tables([seg])
    forced = build_tables([seg], VariationSpec(0.0, 0.0, 1e5, seed=0), KERNEL)
    assert forced.sub_count > plain.sub_count
    for xi1, xi2 in ((0.0, 0.0), (2e5, -1e5), (1.2e6, 2.1e6)):
        a = scratch_response(plain, KERNEL, MAT, LAM, [1e-6, -2e-6], xi1, xi2)
        b = scratch_response(forced, KERNEL, MAT, LAM, [1e-6, -2e-6], xi1, xi2)
        assert abs(a - b) <= 1e-10 * max(abs(a), 1e-30)


def test_scratch_response_matches_closed_sum():
    # one centered scratch through the window at xi' = 0: the response
    # is (mask - rect) * sqrt(2 pi) sigma erf(L / (2 sqrt 2 sigma))
    seg = centered_scratch()
    tabs = build_tables([seg])
    s = scratch_response(tabs, KERNEL, MAT, LAM, [0.0, 0.0], 0.0, 0.0)
    strip = 1e-6 * (1 - np.exp(-4j * np.pi * 0.125e-6 / LAM))
    want = strip * math.sqrt(2 * math.pi) * SIGMA * math.erf(
        4e-5 / (2 * math.sqrt(2) * SIGMA))
    assert complex(s) == pytest.approx(complex(want), rel=1e-12)


def test_two_slit_interference():
    delta = 4e-6
    pair = build_tables([centered_scratch(offset=-delta / 2),
                         centered_scratch(offset=delta / 2)])
    single = build_tables([centered_scratch()])
    for xi2 in (0.0, 0.25 / delta, 1.0 / delta):
        s2 = scratch_response(pair, KERNEL, MAT, LAM, [0, 0], 0.0, xi2)
        s1 = scratch_response(single, KERNEL, MAT, LAM, [0, 0], 0.0, xi2)
        pred = (abs(s1) ** 2 * 4 * math.cos(math.pi * delta * xi2) ** 2
                * math.exp(-delta ** 2 / (4 * SIGMA ** 2)))
        assert abs(s2) ** 2 == pytest.approx(pred, rel=1e-9)


def test_response_independent_of_candidate_superset():
    segs = [centered_scratch(), centered_scratch(offset=2e-3)]  # far one
    tabs = build_tables(segs)
    a = scratch_response(tabs, KERNEL, MAT, LAM, [0, 0], 1e5, 2e5, ids=[0])
    b = scratch_response(tabs, KERNEL, MAT, LAM, [0, 0], 1e5, 2e5)
    assert a == b


def test_per_scratch_terms_sum_to_total():
    tabs = build_tables([centered_scratch(offset=-3e-6),
                         centered_scratch(offset=0.0),
                         centered_scratch(offset=3e-6)])
    total, per = scratch_response(tabs, KERNEL, MAT, LAM, [0, 0], 3e5, -2e5,
                                  per_scratch=True)
    assert len(per) == 3
    assert complex(np.sum(per)) == pytest.approx(complex(total))


def test_mirror_peak_value():
    up = np.array([0, 0, 1.0])
    fr = eval_brdf([0, 0], up, up, LAM, None, KERNEL, MAT)
    assert fr == pytest.approx(4 * math.pi * SIGMA ** 2 / LAM ** 2, rel=1e-12)
    wi = norm_dir(0.3, -0.2)
    wo = norm_dir(-0.3, 0.2)
    fr2 = eval_brdf([0, 0], wi, wo, LAM, None, KERNEL, MAT)
    assert fr2 == pytest.approx(wi[2] * 4 * math.pi * SIGMA ** 2 / LAM ** 2, rel=1e-12)


def test_fresnel_scales_value():
    up = np.array([0, 0, 1.0])
    mat = MaterialParams(f0=0.04)
    fr = eval_brdf([0, 0], up, up, LAM, None, KERNEL, mat)
    assert fr == pytest.approx(0.04 * 4 * math.pi * SIGMA ** 2 / LAM ** 2, rel=1e-12)


def test_incoherent_mode_drops_cross_terms():
    tabs = build_tables([centered_scratch(offset=-2e-6),
                         centered_scratch(offset=2e-6)])
    wi = norm_dir(0.0, 0.05)
    wo = norm_dir(0.0, 0.0521)
    co = eval_brdf([0, 0], wi, wo, LAM, tabs, KERNEL, MAT)
    inco = eval_brdf([0, 0], wi, wo, LAM, tabs, KERNEL, MAT, coherent=False)
    xi = compute_xi(wi, wo, LAM)
    b = base_response(xi[0], xi[1], KERNEL)
    total, per = scratch_response(tabs, KERNEL, MAT, LAM, [0, 0],
                                  float(xi[0]), float(xi[1]), per_scratch=True)
    scale = wi[2] / (KERNEL.shading_area * LAM ** 2)
    assert co == pytest.approx(scale * abs(b - total) ** 2, rel=1e-12)
    assert inco == pytest.approx(scale * (abs(b) ** 2 + np.sum(np.abs(per) ** 2)),
                                 rel=1e-12)


def test_batch_matches_single_point():
    rng = np.random.default_rng(31)
    segs = [centered_scratch(offset=off) for off in (-4e-6, 1e-6, 6e-6)]
    tabs = build_tables(segs)
    pts = rng.uniform(-1e-5, 1e-5, (10, 2))
    wi = norm_dir(0.1, 0.2)
    wo = np.stack([norm_dir(a, b) for a, b in rng.uniform(-0.3, 0.3, (10, 2))])
    batch = eval_brdf_batch(pts, wi, wo, LAM, tabs, KERNEL, MAT)
    for i in range(10):
        single = eval_brdf(pts[i], wi, wo[i], LAM, tabs, KERNEL, MAT)
        assert batch[i] == pytest.approx(single, rel=1e-12)


def test_material_validation():
    with pytest.raises(ValueError):
        MaterialParams(amplitude_base=1.5)
    with pytest.raises(ValueError):
        MaterialParams(f0=-0.1)
