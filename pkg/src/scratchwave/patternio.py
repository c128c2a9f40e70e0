"""Scratch pattern file I/O.

Two formats:

* native text: one scratch per line, ``x0 y0 x1 y1 width depth profile``
  in meters, ``#`` starts a comment, blank lines ignored.
* SVG subset: ``line``, ``polyline``, and ``path`` elements (absolute
  M/L/Z commands only).  The root element must carry
  ``data-meters-per-unit``; elements may carry ``data-width``,
  ``data-depth`` and ``data-profile`` overriding the parser defaults.
  SVG coordinates are used as-is (scaled), no axis flip.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

from .scratch import ProfileKind, ScratchSegment


class PatternParseError(ValueError):
    """Malformed pattern input; message carries line or byte position."""


class UnsupportedSvgFeature(ValueError):
    """Input uses SVG features outside the supported subset."""


def _profile_from_token(tok: str, where: str) -> ProfileKind:
    try:
        return ProfileKind(tok)
    except ValueError:
        raise PatternParseError(
            f"{where}: unknown profile {tok!r} (expected 'rect' or 'tri')") from None


def parse_pattern(path) -> list[ScratchSegment]:
    """Read a native pattern file."""
    segs = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 7:
            raise PatternParseError(
                f"line {lineno}: expected 7 fields, got {len(fields)}")
        try:
            vals = [float(tok) for tok in fields[:6]]
        except ValueError as exc:
            raise PatternParseError(f"line {lineno}: {exc}") from None
        profile = _profile_from_token(fields[6], f"line {lineno}")
        try:
            segs.append(ScratchSegment(vals[0:2], vals[2:4], vals[4], vals[5], profile))
        except ValueError as exc:
            raise PatternParseError(f"line {lineno}: {exc}") from None
    return segs


def write_pattern(path, segments) -> None:
    lines = ["# x0 y0 x1 y1 width depth profile (meters)"]
    for s in segments:
        lines.append(f"{s.p0[0]:.9e} {s.p0[1]:.9e} {s.p1[0]:.9e} {s.p1[1]:.9e} "
                     f"{s.width:.9e} {s.depth:.9e} {s.profile.value}")
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# SVG subset

_NUMBER_RE = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")
_PATH_TOKEN_RE = re.compile(r"([A-Za-z])|(" + _NUMBER_RE.pattern + ")")


def _local_tag(el) -> str:
    return el.tag.rsplit("}", 1)[-1]


def _byte_offset(data: bytes, line: int, column: int) -> int:
    # ET.ParseError.position is (1-based line, 0-based column)
    rows = data.split(b"\n")
    return sum(len(r) + 1 for r in rows[:line - 1]) + column


def _parse_points(text: str, where: str) -> np.ndarray:
    nums = [float(m.group(0)) for m in _NUMBER_RE.finditer(text)]
    if len(nums) < 4 or len(nums) % 2:
        raise PatternParseError(f"{where}: expected an even list of >= 4 coordinates")
    return np.array(nums, dtype=np.float64).reshape(-1, 2)


def _parse_path(d: str, where: str) -> list[np.ndarray]:
    """Absolute M/L/Z subset -> list of polylines (arrays (k, 2))."""
    tokens = _PATH_TOKEN_RE.findall(d)
    polylines: list[list[np.ndarray]] = []
    current: list[np.ndarray] = []
    start = None
    i = 0

    def take_pair(cmd):
        nonlocal i
        if i + 1 >= len(tokens) or tokens[i][0] or tokens[i + 1][0]:
            raise PatternParseError(f"{where}: path command '{cmd}' needs x,y")
        p = np.array([float(tokens[i][1]), float(tokens[i + 1][1])])
        i += 2
        return p

    while i < len(tokens):
        cmd = tokens[i][0]
        if not cmd:
            raise PatternParseError(f"{where}: coordinate without a path command")
        i += 1
        if cmd == "M":
            if len(current) > 1:
                polylines.append(current)
            start = take_pair(cmd)
            current = [start]
            # subsequent pairs after M are implicit absolute L
            while i < len(tokens) and not tokens[i][0]:
                current.append(take_pair(cmd))
        elif cmd == "L":
            if start is None:
                raise PatternParseError(f"{where}: 'L' before any 'M'")
            current.append(take_pair(cmd))
            while i < len(tokens) and not tokens[i][0]:
                current.append(take_pair(cmd))
        elif cmd == "Z":
            if start is None or len(current) < 2:
                raise PatternParseError(f"{where}: 'Z' closes an empty subpath")
            current.append(start.copy())
            polylines.append(current)
            current = []
            start = None
        else:
            raise UnsupportedSvgFeature(
                f"{where}: path command '{cmd}' is not supported "
                "(subset: absolute M, L, Z)")
    if len(current) > 1:
        polylines.append(current)
    return [np.array(p) for p in polylines]


_DRAWABLE_UNSUPPORTED = {"rect", "circle", "ellipse", "polygon", "text", "image", "use"}


def parse_svg_pattern(path, default_width: float = 1e-6, default_depth: float = 1e-7,
                      default_profile: ProfileKind = ProfileKind.RECT) -> list[ScratchSegment]:
    """Read scratch centerlines from an SVG subset file.

    Raises:
        PatternParseError: malformed XML (message carries the byte
            offset) or missing/invalid attributes.
        UnsupportedSvgFeature: drawable elements or path commands
            outside the subset, naming the offending feature.
    """
    data = Path(path).read_bytes()
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise PatternParseError(
            f"malformed XML at byte offset {_byte_offset(data, line, col)}: "
            f"{exc.msg if hasattr(exc, 'msg') else exc}") from None
    if _local_tag(root) != "svg":
        raise PatternParseError(f"root element is <{_local_tag(root)}>, expected <svg>")
    scale_attr = root.get("data-meters-per-unit")
    if scale_attr is None:
        raise PatternParseError("root <svg> lacks data-meters-per-unit")
    scale = float(scale_attr)
    if not scale > 0.0:
        raise PatternParseError(f"data-meters-per-unit must be positive, got {scale}")

    segs: list[ScratchSegment] = []

    def element_params(el):
        w = float(el.get("data-width", default_width))
        d = float(el.get("data-depth", default_depth))
        prof = el.get("data-profile")
        kind = default_profile if prof is None else _profile_from_token(prof, _local_tag(el))
        return w, d, kind

    def add_polyline(pts: np.ndarray, w, d, kind, where):
        for a, b in zip(pts[:-1], pts[1:]):
            if np.array_equal(a, b):
                continue
            segs.append(ScratchSegment(a * scale, b * scale, w, d, kind))

    def walk(el):
        for child in el:
            tag = _local_tag(child)
            if tag in ("g", "svg"):
                walk(child)
            elif tag == "line":
                w, d, kind = element_params(child)
                try:
                    pts = np.array([[float(child.get(k, "")) for k in ("x1", "y1")],
                                    [float(child.get(k, "")) for k in ("x2", "y2")]])
                except ValueError:
                    raise PatternParseError("<line> needs numeric x1,y1,x2,y2") from None
                add_polyline(pts, w, d, kind, tag)
            elif tag == "polyline":
                w, d, kind = element_params(child)
                pts = _parse_points(child.get("points", ""), "<polyline>")
                add_polyline(pts, w, d, kind, tag)
            elif tag == "path":
                w, d, kind = element_params(child)
                for pts in _parse_path(child.get("d", ""), "<path>"):
                    add_polyline(pts, w, d, kind, tag)
            elif tag in _DRAWABLE_UNSUPPORTED:
                raise UnsupportedSvgFeature(f"element <{tag}> is not supported "
                                            "(subset: line, polyline, path)")
            # metadata containers (defs, title, desc, ...) are skipped

    walk(root)
    return segs
