"""FFT brute-force reference for the analytic scratch model.

Pipeline: rasterize scratches into a heightfield on a regular grid,
form the complex transfer function, multiply by the coherence window,
zero-pad, FFT, and scale the squared spectrum into radiance over the
transverse-frequency plane.  ``analytic_radiance`` evaluates the
closed-form model on the same frequency bins so the two routes can be
compared bin for bin.

Grids of 2048+ cells default to single-precision complex; the padded
4096-cell default stays near a gigabyte of working set.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .accel import point_segment_distance
from .diffraction import (CoherenceKernel, MaterialParams, PatternTables,
                          base_response, pair_terms)
from .scratch import ProfileKind, scratch_frame


@dataclass(frozen=True)
class GridSpec:
    """Square rasterization grid centered on the pattern origin."""

    resolution: int = 4096
    extent: float = 120e-6

    def __post_init__(self):
        if self.resolution < 16:
            raise ValueError("resolution must be >= 16")
        if not (np.isfinite(self.extent) and self.extent > 0):
            raise ValueError("extent must be finite and > 0")

    @property
    def cell(self) -> float:
        return self.extent / self.resolution

    def coords(self) -> np.ndarray:
        n = self.resolution
        return (np.arange(n) - (n - 1) / 2.0) * self.cell


@dataclass(frozen=True)
class HeightfieldGrid:
    spec: GridSpec
    heights: np.ndarray
    covered: np.ndarray


@dataclass(frozen=True)
class TransferGrid:
    spec: GridSpec
    values: np.ndarray


@dataclass(frozen=True)
class RadianceGrid:
    """Radiance over frequency bins; values[i, j] sits at (xi1[i], xi2[j])."""

    values: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    evanescent: np.ndarray
    lam: float
    omega_i: np.ndarray
    spectrum: np.ndarray | None = None


@dataclass(frozen=True)
class ErrorReport:
    l2_rel: float
    max_rel: float
    cells: int
    evanescent_excluded: int


def rasterize(segments, spec: GridSpec) -> HeightfieldGrid:
    """Sample each scratch profile at cell centers; overlaps keep the
    deepest height."""
    n = spec.resolution
    heights = np.zeros((n, n))
    covered = np.zeros((n, n), dtype=bool)
    coords = spec.coords()
    margin = spec.cell
    for seg in segments:
        frame = scratch_frame(seg)
        half_w = 0.5 * seg.width
        lo = np.minimum(seg.p0, seg.p1) - half_w - margin
        hi = np.maximum(seg.p0, seg.p1) + half_w + margin
        i0, i1 = np.searchsorted(coords, [lo[0], hi[0]])
        j0, j1 = np.searchsorted(coords, [lo[1], hi[1]])
        if i0 >= i1 or j0 >= j1:
            continue
        dx = coords[i0:i1, None] - frame.origin[0]
        dy = coords[None, j0:j1] - frame.origin[1]
        t = dx * frame.tangent[0] + dy * frame.tangent[1]
        b = dx * frame.bitangent[0] + dy * frame.bitangent[1]
        inside = (np.abs(t) <= 0.5 * seg.length) & (np.abs(b) <= half_w)
        if seg.profile is ProfileKind.TRIANGLE:
            h = -seg.depth * (1.0 - np.abs(2.0 * b / seg.width))
        else:
            h = np.full(inside.shape, -seg.depth)
        patch = heights[i0:i1, j0:j1]
        np.minimum(patch, np.where(inside, h, 0.0), out=patch)
        covered[i0:i1, j0:j1] |= inside
    return HeightfieldGrid(spec, heights, covered)


def transfer_function(heightfield: HeightfieldGrid, lam,
                      material: MaterialParams | None = None,
                      dtype=None) -> TransferGrid:
    """Complex transfer A(x) e^{i 4 pi h / lambda} per cell."""
    if lam <= 0:
        raise ValueError("wavelength must be > 0")
    spec = heightfield.spec
    if spec.cell > lam / 4.0:
        warnings.warn(f"cell {spec.cell:.3g} m exceeds lambda/4; "
                      "heightfield undersamples the phase", stacklevel=2)
    if material is None:
        material = MaterialParams()
    if dtype is None:
        dtype = np.complex64 if spec.resolution >= 2048 else np.complex128
    phase = np.exp((4j * np.pi / lam) * heightfield.heights).astype(dtype)
    values = np.where(heightfield.covered,
                      material.amplitude_scratch * phase
                      - material.amplitude_mask + material.amplitude_base,
                      material.amplitude_base).astype(dtype)
    return TransferGrid(spec, values)


def fft_radiance(transfer: TransferGrid, kernel: CoherenceKernel, x0,
                 omega_i, lam, pad_factor=2,
                 keep_spectrum=False) -> RadianceGrid:
    """Windowed-FFT radiance over the frequency plane.

    Multiplies the transfer grid by the coherence window at x0,
    zero-pads by pad_factor, and maps |cell^2 FFT|^2 through the
    radiance normalization.  Bins whose outgoing direction cosines
    leave the unit disc are flagged evanescent.
    """
    spec = transfer.spec
    omega_i = np.asarray(omega_i, dtype=np.float64)
    if abs(np.linalg.norm(omega_i) - 1.0) > 1e-6 or omega_i[2] <= 0:
        raise ValueError("omega_i must be a unit vector above the horizon")
    if pad_factor < 2:
        raise ValueError("pad_factor must be >= 2")
    x0 = np.asarray(x0, dtype=np.float64)
    sigma = kernel.sigma
    if sigma < 4.0 * spec.cell:
        raise ValueError("coherence sigma under 4 cells; refine the grid")
    if spec.extent < 8.0 * sigma or np.max(np.abs(x0)) + 4.0 * sigma > spec.extent / 2.0:
        raise ValueError("window truncation: extent too small for sigma at x0")

    real_dtype = np.float32 if transfer.values.dtype == np.complex64 else np.float64
    coords = spec.coords()
    gx = np.exp(-(coords - x0[0]) ** 2 / (2.0 * sigma ** 2)).astype(real_dtype)
    gy = np.exp(-(coords - x0[1]) ** 2 / (2.0 * sigma ** 2)).astype(real_dtype)
    windowed = transfer.values * gx[:, None]
    windowed *= gy[None, :]

    npad = pad_factor * spec.resolution
    spectrum = scipy.fft.fft2(windowed, s=(npad, npad))
    del windowed
    spectrum = np.fft.fftshift(spectrum)
    xi = np.fft.fftshift(np.fft.fftfreq(npad, d=spec.cell))

    gamma_i = omega_i[2]
    scale = gamma_i * spec.cell ** 4 / (kernel.shading_area * lam ** 2)
    values = (np.abs(spectrum) ** 2 * scale).astype(real_dtype)

    alpha_o = lam * xi - omega_i[0]
    beta_o = lam * xi - omega_i[1]
    evanescent = (alpha_o ** 2)[:, None] + (beta_o ** 2)[None, :] > 1.0
    return RadianceGrid(values, xi.copy(), xi.copy(), evanescent, float(lam),
                        omega_i, spectrum if keep_spectrum else None)


def extract_slices(radiance: RadianceGrid, axis: int):
    """1-D slice through the zero-frequency bin.

    axis 0 varies xi1 (tangential for an x-aligned scratch) at xi2 = 0;
    axis 1 varies xi2 at xi1 = 0.  Returns (xi, values).
    """
    i0 = int(np.argmin(np.abs(radiance.xi1)))
    j0 = int(np.argmin(np.abs(radiance.xi2)))
    if axis == 0:
        return radiance.xi1, radiance.values[:, j0]
    if axis == 1:
        return radiance.xi2, radiance.values[i0, :]
    raise ValueError("axis must be 0 or 1")


def region_box(radiance: RadianceGrid, xi1_range, xi2_range) -> np.ndarray:
    """Boolean bin mask for a rectangle in frequency space."""
    in1 = (radiance.xi1 >= xi1_range[0]) & (radiance.xi1 <= xi1_range[1])
    in2 = (radiance.xi2 >= xi2_range[0]) & (radiance.xi2 <= xi2_range[1])
    return in1[:, None] & in2[None, :]


def compare(analytic, radiance: RadianceGrid, region: np.ndarray) -> ErrorReport:
    """Relative L2 and max deviation of the analytic evaluator from the
    numeric radiance over the (non-evanescent part of the) region.

    ``analytic`` maps broadcastable (xi1, xi2) arrays to radiance.
    """
    region = np.asarray(region, dtype=bool)
    if region.shape != radiance.values.shape:
        raise ValueError("region mask must match the radiance grid")
    usable = region & ~radiance.evanescent
    excluded = int(np.count_nonzero(region) - np.count_nonzero(usable))
    ii, jj = np.nonzero(usable)
    if ii.size == 0:
        raise ValueError("region holds no usable bins")
    num = radiance.values[ii, jj].astype(np.float64)
    ana = np.asarray(analytic(radiance.xi1[ii], radiance.xi2[jj]), dtype=np.float64)
    diff = ana - num
    l2 = float(np.sqrt(np.sum(diff ** 2) / np.sum(num ** 2)))
    peak = float(np.max(num))
    return ErrorReport(l2, float(np.max(np.abs(diff)) / peak), ii.size, excluded)


def analytic_radiance(tables: PatternTables | None, kernel: CoherenceKernel,
                      material: MaterialParams, lam, x0, omega_i, xi1, xi2,
                      coherent=True):
    """Closed-form radiance on arbitrary frequency bins at one window
    position; the analytic side of every oracle comparison."""
    omega_i = np.asarray(omega_i, dtype=np.float64)
    gamma_i = omega_i[2]
    if gamma_i <= 0:
        raise ValueError("omega_i must be above the horizon")
    x0 = np.asarray(x0, dtype=np.float64)
    xi1, xi2 = np.broadcast_arrays(np.asarray(xi1, dtype=np.float64),
                                   np.asarray(xi2, dtype=np.float64))
    shape = xi1.shape
    q1 = xi1.ravel()[:, None]
    q2 = xi2.ravel()[:, None]
    b = base_response(q1[:, 0], q2[:, 0], kernel, material.amplitude_base)

    if tables is not None and tables.sub_count:
        p0 = tables.sub_mid - tables.sub_tan * (0.5 * tables.sub_len)[:, None]
        p1 = tables.sub_mid + tables.sub_tan * (0.5 * tables.sub_len)[:, None]
        near = point_segment_distance(x0, p0, p1) <= kernel.influence_radius
        sub_idx = np.nonzero(near)[0]
    else:
        sub_idx = np.array([], dtype=np.intp)

    if sub_idx.size:
        pts = np.broadcast_to(x0, (sub_idx.size, 2))
        terms = pair_terms(tables, kernel, material, lam, pts, q1, q2, sub_idx)
        if coherent:
            field = b - np.sum(terms, axis=-1)
            power = np.abs(field) ** 2
        else:
            owner = tables.sub_of[sub_idx]
            power = np.abs(b) ** 2
            for k in np.unique(owner):
                power += np.abs(np.sum(terms[:, owner == k], axis=-1)) ** 2
    else:
        power = np.abs(b) ** 2

    fres = material.fresnel(gamma_i)
    out = gamma_i * fres / (kernel.shading_area * lam ** 2) * power
    return out.reshape(shape)
