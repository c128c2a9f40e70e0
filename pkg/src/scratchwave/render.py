"""Tile-based spectral renderer over planar scratched patches.

Radiometry: the reflectance model already carries its incidence-cosine
factor, so a directional light of perpendicular irradiance E arriving
from omega_L contributes f * E * (omega_L . n), and the uniform
environment integral is taken against the incident cosine as usual.

Determinism: every random number is a pure hash of
(seed, pixel index, sample index, dimension), so the image is a
function of the scene alone; threads only partition tiles, and each
pixel is accumulated by exactly one worker in sample order.

Direct lighting at a hit combines, per light type:

* delta lights (directional / point): single shadowed evaluation;
* uniform environment: one-sample-per-strategy balance heuristic over
  cosine hemisphere sampling plus the material's own lobes (flat base
  or microfacet, and a per-pixel mixture over candidate scratches).

Depth counts surface hits; levels past the first are reached by
sampling one continuation direction from the lobe mixture.  Rays that
leave the scene at those levels add nothing: the environment was
already integrated at the previous vertex.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .accel import build_bvh, point_segment_distance, query_disc
from .diffraction import MaterialParams, build_tables, eta, eval_brdf_batch
from .sampling import (eval_ggx, pdf_base, pdf_ggx, pdf_scratch, sample_base,
                       sample_ggx, sample_scratch)
from .scene import (DirectionalLight, EnvironmentLight, PointLight,
                    SceneDescription)
from .spectral import accumulate_xyz, xyz_to_linear_srgb

TILE = 16
RGB_LAMBDAS = np.array([700e-9, 520e-9, 440e-9])
SPECTRAL_STRATA = 16
_LAMBDA_MIN_NM = 380.0
_LAMBDA_SPAN_NM = 340.0

# per-bounce random-dimension layout; one block per path level
_DIM_BLOCK = 24
_D_PIXEL = 0          # 2: pixel jitter (level 0 only)
_D_LAMBDA = 2         # 1: spectral stratum jitter (level 0 only)
_D_COSINE = 3         # 2
_D_LOBE = 5           # 2: base or microfacet draw
_D_SCRATCH = 7        # 4: candidate pick + vMF draw
_D_BOUNCE = 11        # 5: strategy pick + widest budget

_RAY_EPS = 1e-9


# ---------------------------------------------------------------------------
# stateless RNG


_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix(x):
    # uint64 wraparound is the point here
    with np.errstate(over="ignore"):
        x = (x + _GOLDEN) & _MASK
        x = ((x ^ (x >> np.uint64(30))) * _MIX1) & _MASK
        x = ((x ^ (x >> np.uint64(27))) * _MIX2) & _MASK
        return x ^ (x >> np.uint64(31))


def rand01(seed, pixel, sample, dim):
    """Uniform [0, 1) as a pure function of its four keys; broadcasts."""
    seed = np.asarray(seed, dtype=np.uint64)
    pixel = np.asarray(pixel, dtype=np.uint64)
    sample = np.asarray(sample, dtype=np.uint64)
    dim = np.asarray(dim, dtype=np.uint64)
    h = _splitmix(seed)
    h = _splitmix(h ^ pixel)
    h = _splitmix(h ^ sample)
    h = _splitmix(h ^ dim)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def _draws(seed, pixels, sample, level, slot, count):
    """(P, count) uniforms at consecutive dimensions of a level block."""
    dims = np.uint64(level * _DIM_BLOCK + slot) + np.arange(count, dtype=np.uint64)
    return rand01(seed, np.asarray(pixels, dtype=np.uint64)[:, None], sample,
                  dims[None, :])


# ---------------------------------------------------------------------------
# scene preparation


@dataclass
class _PatchPrep:
    patch: object
    frame: np.ndarray          # rows u_hat, v_hat, normal
    half_u: float
    half_v: float
    tables: object = None
    bvh: object = None
    tangents: np.ndarray = None
    seg_p0: np.ndarray = None
    seg_p1: np.ndarray = None
    widths: np.ndarray = None
    lengths: np.ndarray = None
    scratch_material: MaterialParams = None


def _prepare_patch(patch) -> _PatchPrep:
    prep = _PatchPrep(patch, patch.frame(),
                      0.5 * float(np.linalg.norm(patch.span_u)),
                      0.5 * float(np.linalg.norm(patch.span_v)))
    segs = patch.segments
    if segs:
        prep.tables = build_tables(segs)
        prep.bvh = build_bvh(segs)
        prep.tangents = np.array([(s.p1 - s.p0) / s.length for s in segs])
        prep.seg_p0 = np.array([s.p0 for s in segs])
        prep.seg_p1 = np.array([s.p1 for s in segs])
        prep.widths = np.array([s.width for s in segs])
        prep.lengths = np.array([s.length for s in segs])
    else:
        prep.tangents = np.empty((0, 2))
        prep.seg_p0 = prep.seg_p1 = np.empty((0, 2))
        prep.widths = prep.lengths = np.empty(0)
    prep.scratch_material = MaterialParams(0.0, 1.0, 1.0, patch.material.f0)
    return prep


# ---------------------------------------------------------------------------
# geometry


def _camera_rays(camera, settings, px, py):
    """World-space unit directions through image-plane points given in
    pixel units."""
    right, up, fwd = camera.basis()
    th = math.tan(math.radians(camera.vfov_deg) / 2.0)
    aspect = settings.width / settings.height
    x = (2.0 * px / settings.width - 1.0) * th * aspect
    y = (1.0 - 2.0 * py / settings.height) * th
    d = fwd[None, :] + x[:, None] * right[None, :] + y[:, None] * up[None, :]
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def _plane_hits(prep: _PatchPrep, origins, dirs):
    """Ray / patch-plane intersection without the inside test; returns
    t (inf where parallel or behind) and pattern coordinates."""
    n = prep.frame[2]
    denom = dirs @ n
    offs = (prep.patch.origin - origins) @ n
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(np.abs(denom) > 1e-300, offs / denom, np.inf)
        t = np.where(t > _RAY_EPS, t, np.inf)
        # t = inf rows produce NaN coordinates, which fail every
        # inside test downstream
        p = origins + t[..., None] * dirs
        rel = p - prep.patch.origin
        x = rel @ prep.frame[0] - prep.half_u
        y = rel @ prep.frame[1] - prep.half_v
    return t, x, y


def _intersect(preps, origins, dirs):
    """Nearest patch per ray: (patch index or -1, t, pattern x, y)."""
    n = dirs.shape[0]
    best = np.full(n, np.inf)
    idx = np.full(n, -1, dtype=np.int64)
    bx = np.zeros(n)
    by = np.zeros(n)
    for k, prep in enumerate(preps):
        t, x, y = _plane_hits(prep, origins, dirs)
        closer = ((np.abs(x) <= prep.half_u) & (np.abs(y) <= prep.half_v)
                  & (t < best))
        best = np.where(closer, t, best)
        idx = np.where(closer, k, idx)
        bx = np.where(closer, x, bx)
        by = np.where(closer, y, by)
    return idx, best, bx, by


def _occluded(preps, origins, dirs, tmax):
    blocked = np.zeros(dirs.shape[0], dtype=bool)
    for prep in preps:
        t, x, y = _plane_hits(prep, origins, dirs)
        inside = (np.abs(x) <= prep.half_u) & (np.abs(y) <= prep.half_v)
        blocked |= inside & (t < tmax - _RAY_EPS)
    return blocked


@dataclass(frozen=True)
class PixelFootprint:
    """Pattern-plane extent one pixel covers around its hit point."""

    x0: np.ndarray
    extent_u: float
    extent_v: float

    def __post_init__(self):
        if not (self.extent_u > 0 and self.extent_v > 0):
            raise ValueError("footprint extents must be > 0")


def compute_footprint(camera, settings, pixel, patch) -> PixelFootprint:
    """Ray-differential footprint of pixel (ix, iy) on a patch plane.

    The reflectance never sees these extents; scratch queries always
    use the coherence radius.  The extents only describe the pixel's
    area, whose integration render() realizes by intra-pixel jitter.
    """
    prep = patch if isinstance(patch, _PatchPrep) else _prepare_patch(patch)
    ix, iy = pixel
    px = np.array([ix + 0.5, ix + 1.5, ix + 0.5])
    py = np.array([iy + 0.5, iy + 0.5, iy + 1.5])
    dirs = _camera_rays(camera, settings, px, py)
    t, x, y = _plane_hits(prep, camera.position[None, :], dirs)
    if not np.all(np.isfinite(t)):
        raise ValueError("pixel rays do not reach the patch plane")
    du = math.hypot(x[1] - x[0], y[1] - y[0])
    dv = math.hypot(x[2] - x[0], y[2] - y[0])
    return PixelFootprint(np.array([x[0], y[0]]), du, dv)


# ---------------------------------------------------------------------------
# material evaluation


def _candidate_ids(prep: _PatchPrep, x0s):
    """Scratch ids possibly interfering at any of the points, via one
    BVH disc query over their bounding circle plus the 3 sigma reach."""
    if prep.bvh is None or len(x0s) == 0:
        return np.empty(0, dtype=np.int64)
    center = 0.5 * (x0s.min(axis=0) + x0s.max(axis=0))
    spread = float(np.max(np.linalg.norm(x0s - center, axis=1)))
    return query_disc(prep.bvh, center,
                      spread + prep.patch.kernel.influence_radius)


def _blend_coverage(prep: _PatchPrep, x0s, cand):
    """Gaussian-weighted scratch coverage per point, shared candidates."""
    kernel = prep.patch.kernel
    w = np.zeros(len(x0s))
    for k in cand:
        d = 0.5 * (prep.seg_p0[k] + prep.seg_p1[k]) - x0s
        tan = prep.tangents[k]
        r_tan = d @ tan
        r_bit = d @ np.array([-tan[1], tan[0]])
        line = eta(0.0, 0.0, r_tan, r_bit, prep.lengths[k], kernel.sigma).real
        w += prep.widths[k] * line
    return np.clip(w / kernel.window_integral, 0.0, 1.0)


def _eval_material(prep: _PatchPrep, x0s, wi, wo, lam, cand, coverage):
    """Reflectance (P,) at pattern points for surface-frame directions.

    Blend mode fades the microfacet base against the scratch-only model
    by the coverage weight; wave mode is the full coherent evaluation.
    """
    patch = prep.patch
    if patch.blend is None:
        return eval_brdf_batch(x0s, wi, wo, lam, prep.tables, patch.kernel,
                               patch.material, candidate_ids=cand)
    ggx = eval_ggx(wi, wo, patch.blend, patch.material.f0)
    out = np.broadcast_to(ggx, (len(x0s),)) * (1.0 - coverage)
    hit = coverage > 0.0
    if np.any(hit):
        wi_b = np.broadcast_to(wi, (len(x0s), 3))
        lam_b = np.broadcast_to(np.asarray(lam, dtype=np.float64), (len(x0s),))
        scratch = eval_brdf_batch(x0s[hit], wi_b[hit], wo[hit], lam_b[hit],
                                  prep.tables, patch.kernel,
                                  prep.scratch_material, candidate_ids=cand)
        out = out.copy()
        out[hit] += coverage[hit] * scratch
    return out


# ---------------------------------------------------------------------------
# sampling strategies at one group of hits


class _Lobes:
    """Incident-direction strategies for MIS at a group of hit points.

    Directions live in the surface frame; ``view`` is the fixed
    outgoing direction, and each strategy draws the incident one.  The
    lobe shapes peak about the view mirror, which is where the
    reflectance peaks as a function of the incident direction too.
    """

    def __init__(self, prep: _PatchPrep, view, near, near_ids, lam):
        self.prep = prep
        self.view = view
        self.near = near
        self.near_ids = near_ids
        self.lam = lam
        self.names = ["cosine",
                      "base" if prep.patch.blend is None else "ggx"]
        if near.shape[1] and near.any():
            self.names.append("scratch")

    def draw(self, name, u):
        """One direction per point from strategy ``name``; u is (P, 2)
        for the single lobes, (P, 4) for the scratch mixture."""
        P = self.view.shape[0]
        if name == "cosine":
            r = np.sqrt(u[:, 0])
            ph = 2.0 * np.pi * u[:, 1]
            z = np.sqrt(np.maximum(1.0 - u[:, 0], 0.0))
            omega = np.stack([r * np.cos(ph), r * np.sin(ph), z], axis=-1)
            return omega, z > 0.0
        if name == "base":
            rec = sample_base(self.view, self.prep.patch.kernel, self.lam,
                              u=u[:, :2])
            return rec.omega_o, rec.valid
        if name == "ggx":
            rec = sample_ggx(self.view, self.prep.patch.blend, u=u[:, :2])
            return rec.omega_o, rec.valid
        counts = self.near.sum(axis=1)
        active = counts > 0
        omega = np.zeros((P, 3))
        ok = np.zeros(P, dtype=bool)
        if not active.any():
            return omega, ok
        pick = np.minimum((u[:, 0] * np.maximum(counts, 1)).astype(np.int64),
                          np.maximum(counts - 1, 0))
        # rank of each true cell along its row; the first cell at the
        # picked rank is always a true one
        rank = np.cumsum(self.near, axis=1) - 1
        chosen = np.argmax(rank == pick[:, None], axis=1)
        t3 = np.zeros((P, 3))
        t3[:, :2] = self.prep.tangents[self.near_ids[chosen]]
        rec = sample_scratch(self.view[active], t3[active],
                             self.prep.patch.vmf, u=u[active, 1:])
        omega[active] = rec.omega_o
        ok[active] = rec.valid
        return omega, ok

    def pdf(self, name, omega):
        if name == "cosine":
            return np.maximum(omega[:, 2], 0.0) / np.pi
        if name == "base":
            return pdf_base(self.view, omega, self.prep.patch.kernel, self.lam)
        if name == "ggx":
            return pdf_ggx(self.view, omega, self.prep.patch.blend)
        P, K = self.near.shape
        counts = self.near.sum(axis=1)
        total = np.zeros(P)
        t3 = np.zeros(3)
        for k in range(K):
            rows = self.near[:, k]
            if not rows.any():
                continue
            t3 = np.array([*self.prep.tangents[self.near_ids[k]], 0.0])
            total[rows] += pdf_scratch(self.view[rows], omega[rows], t3,
                                       self.prep.patch.vmf)
        return np.where(counts > 0, total / np.maximum(counts, 1), 0.0)

    def total_pdf(self, omega):
        out = np.zeros(omega.shape[0])
        for name in self.names:
            out += self.pdf(name, omega)
        return out

    def mixture_pdf(self, omega):
        return self.total_pdf(omega) / len(self.names)


# ---------------------------------------------------------------------------
# shading


def _env_radiance(scene):
    for light in scene.lights:
        if isinstance(light, EnvironmentLight):
            return light.radiance
    return 0.0


def _shade(scene, preps, origins, dirs, lambdas, seed, pixels, sample,
           level, out):
    """Add radiance along rays into ``out`` (N, C).

    lambdas: (C,) wavelengths shared by all rays, or (N, 1) per-ray in
    spectral mode.
    """
    idx, t, px, py = _intersect(preps, origins, dirs)
    env = _env_radiance(scene)
    if env > 0.0 and level == 0:
        # primary rays that leave the scene see the environment; deeper
        # levels already integrated it at their vertex
        out[idx < 0] += env
    settings = scene.settings
    per_ray = lambdas.ndim == 2

    for k, prep in enumerate(preps):
        rows = np.nonzero(idx == k)[0]
        if len(rows) == 0:
            continue
        frame = prep.frame
        view = -dirs[rows] @ frame.T
        front = view[:, 2] > 1e-9
        rows, view = rows[front], view[front]
        if len(rows) == 0:
            continue
        x0s = np.stack([px[rows], py[rows]], axis=-1)
        hitp = origins[rows] + t[rows, None] * dirs[rows]
        lams = lambdas[rows] if per_ray else lambdas
        pix = pixels[rows]

        cand = _candidate_ids(prep, x0s)
        near = _pixel_candidates(prep, x0s, cand)
        coverage = (_blend_coverage(prep, x0s, cand)
                    if prep.patch.blend is not None else None)
        # lobe shapes use the per-ray wavelength when there is one
        lam_shape = lams[:, 0] if per_ray else float(lams[1])
        lobes = _Lobes(prep, view, near, cand, lam_shape)

        def eval_f(wi_s, mask):
            """(R, C) reflectance at the masked hit points; incident
            directions wi_s are already masked."""
            x = x0s[mask]
            cov = None if coverage is None else coverage[mask]
            wo = view[mask]
            if per_ray:
                v = _eval_material(prep, x, wi_s, wo, lams[mask, 0], cand, cov)
                return v[:, None]
            return np.stack([_eval_material(prep, x, wi_s, wo, lam, cand, cov)
                             for lam in lams], axis=-1)

        # delta lights
        for light in scene.lights:
            if isinstance(light, DirectionalLight):
                wi_w = np.broadcast_to(light.direction, (len(rows), 3))
                e_perp = np.full(len(rows), light.irradiance)
                tmax = np.full(len(rows), np.inf)
            elif isinstance(light, PointLight):
                dvec = light.position[None, :] - hitp
                dist = np.linalg.norm(dvec, axis=-1)
                wi_w = dvec / dist[:, None]
                e_perp = light.intensity / dist ** 2
                tmax = dist
            else:
                continue
            wi_s = wi_w @ frame.T
            lit = wi_s[:, 2] > 1e-9
            if lit.any():
                lit &= ~_occluded(preps, hitp + _RAY_EPS * wi_w, wi_w, tmax)
            if not lit.any():
                continue
            f = eval_f(wi_s[lit], lit)
            out[rows[lit]] += f * (e_perp[lit] * wi_s[lit, 2])[:, None]

        # uniform environment, one sample per strategy
        if env > 0.0:
            for name in lobes.names:
                u = _draws(seed, pix, sample, level, _strategy_slot(name),
                           4 if name == "scratch" else 2)
                omega, ok = lobes.draw(name, u)
                if not ok.any():
                    continue
                denom = lobes.total_pdf(omega)
                ok &= denom > 0.0
                wi_w = omega @ frame
                if ok.any():
                    ok &= ~_occluded(preps, hitp + _RAY_EPS * wi_w, wi_w,
                                     np.full(len(rows), np.inf))
                if not ok.any():
                    continue
                f = eval_f(omega[ok], ok)
                out[rows[ok]] += f * (env * omega[ok, 2] / denom[ok])[:, None]

        # continuation bounce from the lobe mixture
        if settings.depth - level > 1:
            u5 = _draws(seed, pix, sample, level, _D_BOUNCE, 5)
            pick = np.minimum((u5[:, 0] * len(lobes.names)).astype(np.int64),
                              len(lobes.names) - 1)
            omega = np.zeros((len(rows), 3))
            ok = np.zeros(len(rows), dtype=bool)
            for s, name in enumerate(lobes.names):
                sel = pick == s
                if not sel.any():
                    continue
                sub = _Lobes(prep, view[sel], near[sel], cand,
                             lam_shape[sel] if per_ray else lam_shape)
                om, valid = sub.draw(name, u5[sel, 1:])
                omega[sel] = om
                ok[sel] = valid
            mix = lobes.mixture_pdf(omega)
            ok &= mix > 0.0
            if ok.any():
                f = eval_f(omega[ok], ok)
                wi_w = omega[ok] @ frame
                sub_out = np.zeros((int(ok.sum()), out.shape[1]))
                _shade(scene, preps, hitp[ok] + _RAY_EPS * wi_w, wi_w,
                       lams[ok] if per_ray else lambdas,
                       seed, pix[ok], sample, level + 1, sub_out)
                out[rows[ok]] += f * sub_out * (omega[ok, 2] / mix[ok])[:, None]


def _strategy_slot(name):
    return {"cosine": _D_COSINE, "base": _D_LOBE, "ggx": _D_LOBE,
            "scratch": _D_SCRATCH}[name]


def _pixel_candidates(prep: _PatchPrep, x0s, cand):
    """(P, K) mask of shared candidates within the influence radius of
    each point; the scratch strategy mixes only over these."""
    if len(cand) == 0:
        return np.zeros((len(x0s), 0), dtype=bool)
    dist = point_segment_distance(x0s[:, None, :], prep.seg_p0[cand],
                                  prep.seg_p1[cand])
    return dist <= prep.patch.kernel.influence_radius


# ---------------------------------------------------------------------------
# image assembly


def _render_tile(scene, preps, tx, ty):
    settings = scene.settings
    x0, x1 = tx * TILE, min((tx + 1) * TILE, settings.width)
    y0, y1 = ty * TILE, min((ty + 1) * TILE, settings.height)
    ix, iy = np.meshgrid(np.arange(x0, x1), np.arange(y0, y1))
    ix, iy = ix.ravel(), iy.ravel()
    pixels = (iy * settings.width + ix).astype(np.uint64)
    n = len(pixels)
    seed = np.uint64(settings.seed)
    spectral = settings.mode.startswith("spectral")
    acc = np.zeros((n, 3))
    origin = np.broadcast_to(scene.camera.position, (n, 3))

    for s in range(settings.spp):
        sample = np.uint64(s)
        jit = _draws(seed, pixels, sample, 0, _D_PIXEL, 2)
        dirs = _camera_rays(scene.camera, settings,
                            ix + jit[:, 0], iy + jit[:, 1])
        if spectral:
            # one wavelength per camera sample, stratified over the
            # sample index with a per-pixel stratum scramble
            uj = _draws(seed, pixels, sample, 0, _D_LAMBDA, 1)[:, 0]
            scramble = (rand01(seed, pixels, np.uint64(0xC0FFEE), 2)
                        * SPECTRAL_STRATA).astype(np.int64)
            stratum = (s + scramble) % SPECTRAL_STRATA
            lam_nm = _LAMBDA_MIN_NM + (stratum + uj) * (_LAMBDA_SPAN_NM
                                                        / SPECTRAL_STRATA)
            lambdas = lam_nm[:, None] * 1e-9
            radiance = np.zeros((n, 1))
            _shade(scene, preps, origin, dirs, lambdas, seed, pixels,
                   sample, 0, radiance)
            acc += accumulate_xyz(lam_nm[:, None], 1.0, radiance)
        else:
            radiance = np.zeros((n, 3))
            _shade(scene, preps, origin, dirs, RGB_LAMBDAS, seed, pixels,
                   sample, 0, radiance)
            acc += radiance

    acc /= settings.spp
    if spectral:
        acc = xyz_to_linear_srgb(acc)
    return (slice(y0, y1), slice(x0, x1)), acc.reshape(y1 - y0, x1 - x0, 3)


def render(scene: SceneDescription, threads: int = 1) -> np.ndarray:
    """Render to a linear-RGB image (height, width, 3) float32.

    rgb mode stores the three fixed-wavelength radiances directly as
    channels; spectral mode accumulates XYZ per sample and converts at
    the end.  The result is independent of ``threads``.
    """
    preps = [_prepare_patch(p) for p in scene.patches]
    settings = scene.settings
    img = np.zeros((settings.height, settings.width, 3), dtype=np.float32)
    tiles = [(tx, ty)
             for ty in range(-(-settings.height // TILE))
             for tx in range(-(-settings.width // TILE))]
    if threads <= 1:
        results = [_render_tile(scene, preps, tx, ty) for tx, ty in tiles]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda xy: _render_tile(scene, preps, *xy), tiles))
    for region, block in results:
        img[region] = block.astype(np.float32)
    return img
