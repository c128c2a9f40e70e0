"""Wave-optical shading for scratched surfaces.

Closed-form single-scattering diffraction from narrow surface scratches,
coherently superposed inside a Gaussian coherence window, with sampling
strategies, an FFT reference pipeline, and a small spectral renderer.
"""

from .accel import build_bvh, query_disc, query_disc_union
from .diffraction import (CoherenceKernel, MaterialParams, build_tables,
                          eval_brdf, eval_brdf_batch)
from .imgio import read_pfm, write_image, write_pfm, write_png
from .oracle import (GridSpec, RadianceGrid, analytic_radiance, compare,
                     extract_slices, fft_radiance, rasterize,
                     transfer_function)
from .patternio import parse_pattern, parse_svg_pattern, write_pattern
from .render import PixelFootprint, compute_footprint, rand01, render
from .sampling import (GgxParams, VmfParams, blend_weight, combine_mis,
                       eval_ggx, pdf_base, pdf_ggx, pdf_scratch, sample_base,
                       sample_ggx, sample_scratch)
from .scene import (Camera, DirectionalLight, EnvironmentLight, Patch,
                    PointLight, RenderSettings, SceneDescription, SceneError,
                    build_scene, load_scene)
from .scratch import (ProfileKind, ScratchSegment, VariationSpec,
                      generate_concentric, generate_grating, generate_random,
                      vary_parameters)
from .spectral import (accumulate_xyz, sample_wavelengths,
                       xyz_to_linear_srgb)

__version__ = "0.1.0"

__all__ = [
    "Camera", "CoherenceKernel", "DirectionalLight", "EnvironmentLight",
    "GgxParams", "GridSpec", "MaterialParams", "Patch", "PixelFootprint",
    "PointLight", "ProfileKind", "RadianceGrid", "RenderSettings",
    "SceneDescription", "SceneError", "ScratchSegment", "VariationSpec",
    "VmfParams", "accumulate_xyz", "analytic_radiance", "blend_weight",
    "build_bvh", "build_scene", "build_tables", "combine_mis", "compare",
    "compute_footprint", "eval_brdf", "eval_brdf_batch", "eval_ggx",
    "extract_slices", "fft_radiance", "generate_concentric",
    "generate_grating", "generate_random", "load_scene", "parse_pattern",
    "parse_svg_pattern", "pdf_base", "pdf_ggx", "pdf_scratch", "query_disc",
    "query_disc_union", "rand01", "rasterize", "read_pfm", "render",
    "sample_base", "sample_ggx", "sample_scratch", "sample_wavelengths",
    "transfer_function", "vary_parameters", "write_image", "write_pattern",
    "write_pfm", "write_png", "xyz_to_linear_srgb",
]
