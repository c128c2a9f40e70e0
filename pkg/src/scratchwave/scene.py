"""Scene files for the renderer.

A scene is a YAML document with four top-level keys:

* ``camera``: pinhole camera (``position``, ``look_at``, ``vfov_deg``,
  optional ``up``).
* ``render``: image settings (``width``, ``height``, ``spp``, ``mode``,
  ``depth``, ``seed``), all optional with defaults.
* ``patches``: list of planar parallelograms.  Each carries ``origin``,
  ``span_u``, ``span_v`` (world meters, spans orthogonal), ``sigma``
  (coherence radius), optional ``material`` amplitudes, optional
  ``blend: {alpha: ...}`` switching the base to a microfacet lobe,
  optional ``kappa``, and a ``pattern`` (file, svg, inline segment
  list, or generator).
* ``lights``: list of ``directional`` / ``point`` / ``env`` entries.

Pattern coordinates sit in the patch plane with the origin at the patch
center and axes along span_u / span_v, so generated patterns centered
on (0, 0) land in the middle of the patch.

Validation never stops at the first problem: every offending field is
collected and reported in one SceneError.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .diffraction import CoherenceKernel, MaterialParams
from .patternio import parse_pattern, parse_svg_pattern
from .sampling import GgxParams, VmfParams
from .scratch import (ProfileKind, ScratchSegment, generate_concentric,
                      generate_grating, generate_random)


class SceneError(ValueError):
    """Invalid scene description; ``fields`` names every offender."""

    def __init__(self, fields):
        self.fields = list(fields)
        super().__init__("invalid scene: " + "; ".join(self.fields))


@dataclass(frozen=True)
class Camera:
    position: np.ndarray
    look_at: np.ndarray
    vfov_deg: float
    up: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def basis(self):
        """Right-handed (right, up, forward) frame; raises on a
        degenerate up direction."""
        fwd = self.look_at - self.position
        n = np.linalg.norm(fwd)
        if n == 0.0:
            raise SceneError(["camera.look_at coincides with camera.position"])
        fwd = fwd / n
        right = np.cross(fwd, self.up)
        rn = np.linalg.norm(right)
        if rn < 1e-12:
            raise SceneError(["camera.up is parallel to the view direction"])
        right = right / rn
        return right, np.cross(right, fwd), fwd


@dataclass(frozen=True)
class DirectionalLight:
    """Collimated source; direction points from the surface toward the
    light, irradiance is measured perpendicular to the beam."""

    direction: np.ndarray
    irradiance: float


@dataclass(frozen=True)
class PointLight:
    position: np.ndarray
    intensity: float


@dataclass(frozen=True)
class EnvironmentLight:
    radiance: float


@dataclass(frozen=True)
class RenderSettings:
    width: int = 128
    height: int = 128
    spp: int = 16
    mode: str = "rgb"
    depth: int = 2
    seed: int = 0


@dataclass(frozen=True)
class Patch:
    origin: np.ndarray
    span_u: np.ndarray
    span_v: np.ndarray
    segments: list
    kernel: CoherenceKernel
    material: MaterialParams
    blend: GgxParams | None = None
    vmf: VmfParams = field(default_factory=VmfParams)

    @property
    def normal(self):
        n = np.cross(self.span_u, self.span_v)
        return n / np.linalg.norm(n)

    def frame(self):
        """(u_hat, v_hat, normal) orthonormal rows; pattern x runs along
        u_hat, pattern y along v_hat."""
        u = self.span_u / np.linalg.norm(self.span_u)
        v = self.span_v / np.linalg.norm(self.span_v)
        return np.stack([u, v, self.normal])


@dataclass(frozen=True)
class SceneDescription:
    patches: list
    lights: list
    camera: Camera
    settings: RenderSettings


def _vec3(node, key, errors, path):
    v = node.get(key)
    if (not isinstance(v, (list, tuple)) or len(v) != 3
            or not all(isinstance(c, (int, float)) for c in v)):
        errors.append(f"{path}.{key} must be a list of 3 numbers")
        return np.zeros(3)
    return np.asarray(v, dtype=np.float64)


def _number(node, key, errors, path, default=None, positive=False):
    v = node.get(key, default)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        errors.append(f"{path}.{key} must be a number")
        return 0.0
    if positive and not v > 0:
        errors.append(f"{path}.{key} must be > 0")
    return float(v)


def _integer(node, key, errors, path, default, minimum):
    v = node.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool):
        errors.append(f"{path}.{key} must be an integer")
        return minimum
    if v < minimum:
        errors.append(f"{path}.{key} must be >= {minimum}")
        return minimum
    return v


_GENERATORS = {"random", "grating", "concentric"}


def _build_pattern(node, base_dir: Path, errors, path) -> list:
    if node is None:
        return []
    if not isinstance(node, dict):
        errors.append(f"{path} must be a mapping")
        return []
    keys = {"file", "svg", "segments", "generator"} & node.keys()
    if len(keys) != 1:
        errors.append(f"{path} needs exactly one of file/svg/segments/generator")
        return []
    kind = keys.pop()
    try:
        if kind == "file":
            return parse_pattern(base_dir / str(node["file"]))
        if kind == "svg":
            kwargs = {k: float(node[src]) for k, src in
                      (("default_width", "width"), ("default_depth", "depth"))
                      if src in node}
            return parse_svg_pattern(base_dir / str(node["svg"]), **kwargs)
        if kind == "segments":
            segs = []
            for i, row in enumerate(node["segments"]):
                segs.append(ScratchSegment(
                    row[0:2], row[2:4], float(row[4]), float(row[5]),
                    ProfileKind(row[6]) if len(row) > 6 else ProfileKind.RECT))
            return segs
        return _run_generator(node, errors, path)
    except (OSError, ValueError, TypeError, KeyError, IndexError) as exc:
        errors.append(f"{path}: {exc}")
        return []


def _run_generator(node, errors, path) -> list:
    name = node["generator"]
    if name not in _GENERATORS:
        errors.append(f"{path}.generator must be one of {sorted(_GENERATORS)}")
        return []
    profile = ProfileKind(node.get("profile", "rect"))
    if name == "grating":
        return generate_grating(
            int(node["count"]), float(node["spacing"]), float(node["length"]),
            float(node["width"]), float(node["depth"]), profile,
            center=node.get("center", (0.0, 0.0)),
            direction=node.get("direction", (1.0, 0.0)))
    if name == "concentric":
        return generate_concentric(
            node.get("center", (0.0, 0.0)), [float(r) for r in node["radii"]],
            float(node["width"]), float(node["depth"]), profile)
    bounds = node["bounds"]
    return generate_random(
        ((float(bounds[0][0]), float(bounds[0][1])),
         (float(bounds[1][0]), float(bounds[1][1]))),
        float(node["density"]),
        tuple(float(x) for x in node["length_range"]),
        tuple(float(x) for x in node["width_range"]),
        tuple(float(x) for x in node["depth_range"]),
        np.random.default_rng(int(node.get("seed", 0))), profile)


def _build_patch(node, base_dir: Path, errors, path) -> Patch | None:
    origin = _vec3(node, "origin", errors, path)
    span_u = _vec3(node, "span_u", errors, path)
    span_v = _vec3(node, "span_v", errors, path)
    nu, nv = np.linalg.norm(span_u), np.linalg.norm(span_v)
    if nu == 0.0:
        errors.append(f"{path}.span_u must be nonzero")
    if nv == 0.0:
        errors.append(f"{path}.span_v must be nonzero")
    if nu > 0 and nv > 0 and abs(span_u @ span_v) > 1e-9 * nu * nv:
        errors.append(f"{path}.span_v must be orthogonal to span_u")
    sigma = _number(node, "sigma", errors, path, positive=True)

    mat_node = node.get("material", {})
    material = MaterialParams()
    if not isinstance(mat_node, dict):
        errors.append(f"{path}.material must be a mapping")
    else:
        try:
            material = MaterialParams(
                amplitude_base=float(mat_node.get("base", 1.0)),
                amplitude_mask=float(mat_node.get("mask", 1.0)),
                amplitude_scratch=float(mat_node.get("scratch", 1.0)),
                f0=float(mat_node.get("f0", 1.0)))
        except (ValueError, TypeError) as exc:
            errors.append(f"{path}.material: {exc}")

    blend = None
    if "blend" in node:
        try:
            blend = GgxParams(alpha=float(node["blend"]["alpha"]))
        except (ValueError, TypeError, KeyError) as exc:
            errors.append(f"{path}.blend: {exc}")

    vmf = VmfParams()
    if "kappa" in node:
        try:
            vmf = VmfParams(kappa=float(node["kappa"]))
        except (ValueError, TypeError) as exc:
            errors.append(f"{path}.kappa: {exc}")

    segments = _build_pattern(node.get("pattern"), base_dir, errors,
                              f"{path}.pattern")
    if errors:
        return None
    return Patch(origin, span_u, span_v, segments, CoherenceKernel(sigma),
                 material, blend, vmf)


def _build_light(node, errors, path):
    if not isinstance(node, dict) or "type" not in node:
        errors.append(f"{path}.type is required")
        return None
    kind = node["type"]
    if kind == "directional":
        d = _vec3(node, "direction", errors, path)
        e = _number(node, "irradiance", errors, path, positive=True)
        n = np.linalg.norm(d)
        if n == 0.0:
            errors.append(f"{path}.direction must be nonzero")
            return None
        return DirectionalLight(d / n, e)
    if kind == "point":
        p = _vec3(node, "position", errors, path)
        i = _number(node, "intensity", errors, path, positive=True)
        return PointLight(p, i)
    if kind == "env":
        return EnvironmentLight(_number(node, "radiance", errors, path,
                                        positive=True))
    errors.append(f"{path}.type must be directional, point, or env")
    return None


_MODES = ("rgb", "spectral16")


def build_scene(doc: dict, base_dir) -> SceneDescription:
    """Validate a parsed scene document; raises SceneError listing every
    offending field."""
    errors: list[str] = []
    if not isinstance(doc, dict):
        raise SceneError(["scene must be a mapping"])
    base_dir = Path(base_dir)

    cam_node = doc.get("camera")
    camera = None
    if not isinstance(cam_node, dict):
        errors.append("camera is required")
    else:
        pos = _vec3(cam_node, "position", errors, "camera")
        look = _vec3(cam_node, "look_at", errors, "camera")
        vfov = _number(cam_node, "vfov_deg", errors, "camera", positive=True)
        if not 0.0 < vfov < 180.0:
            errors.append("camera.vfov_deg must lie in (0, 180)")
        up = np.array([0.0, 0.0, 1.0])
        if "up" in cam_node:
            up = _vec3(cam_node, "up", errors, "camera")
        camera = Camera(pos, look, vfov, up)

    rnode = doc.get("render", {})
    settings = RenderSettings()
    if not isinstance(rnode, dict):
        errors.append("render must be a mapping")
    else:
        mode = rnode.get("mode", "rgb")
        if mode not in _MODES:
            errors.append(f"render.mode must be one of {_MODES}")
            mode = "rgb"
        settings = RenderSettings(
            width=_integer(rnode, "width", errors, "render", 128, 1),
            height=_integer(rnode, "height", errors, "render", 128, 1),
            spp=_integer(rnode, "spp", errors, "render", 16, 1),
            mode=mode,
            depth=_integer(rnode, "depth", errors, "render", 2, 1),
            seed=_integer(rnode, "seed", errors, "render", 0, 0))

    patches = []
    pnodes = doc.get("patches")
    if not isinstance(pnodes, list) or not pnodes:
        errors.append("patches must be a nonempty list")
    else:
        for i, node in enumerate(pnodes):
            if not isinstance(node, dict):
                errors.append(f"patches[{i}] must be a mapping")
                continue
            p = _build_patch(node, base_dir, errors, f"patches[{i}]")
            if p is not None:
                patches.append(p)

    lights = []
    lnodes = doc.get("lights")
    if not isinstance(lnodes, list) or not lnodes:
        errors.append("lights must be a nonempty list")
    else:
        for i, node in enumerate(lnodes):
            lt = _build_light(node, errors, f"lights[{i}]")
            if lt is not None:
                lights.append(lt)

    if errors:
        raise SceneError(errors)
    if camera is not None:
        camera.basis()
    return SceneDescription(patches, lights, camera, settings)


def load_scene(path) -> SceneDescription:
    """Read and validate a YAML scene file."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise SceneError([f"cannot read {path}: {exc}"]) from exc
    except yaml.YAMLError as exc:
        raise SceneError([f"{path}: {exc}"]) from exc
    return build_scene(doc, path.parent)
