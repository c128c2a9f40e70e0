"""Command-line front end.

Two subcommands: ``render`` turns a YAML scene file into an image, and
``oracle`` runs the FFT reference pipeline on a pattern file and writes
slice CSVs plus a summary of analytic-vs-numeric error metrics.

Exit codes: 0 on success, 2 on validation or usage errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .diffraction import CoherenceKernel, MaterialParams, build_tables
from .imgio import write_image
from .oracle import (GridSpec, analytic_radiance, compare, extract_slices,
                     fft_radiance, rasterize, region_box, transfer_function)
from .patternio import PatternParseError, parse_pattern, parse_svg_pattern
from .render import render
from .scene import SceneError, load_scene


def _parse_res(text):
    try:
        w, h = text.lower().split("x")
        w, h = int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}")
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("resolution must be positive")
    return w, h


def _parse_pair(text):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y, got {text!r}")
    return a, b


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="scratchwave",
        description="wave-optical scratch renderer and FFT reference")
    sub = parser.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("render", help="render a YAML scene to an image")
    pr.add_argument("scene", type=Path)
    pr.add_argument("-o", "--output", type=Path, required=True,
                    help="output image (.pfm linear or .png sRGB)")
    pr.add_argument("--spp", type=int)
    pr.add_argument("--res", type=_parse_res, metavar="WxH")
    pr.add_argument("--mode", choices=("rgb", "spectral16"))
    pr.add_argument("--seed", type=int)
    pr.add_argument("--threads", type=int, default=1)
    pr.add_argument("--exposure", type=float, default=1.0,
                    help="PNG exposure scale (ignored for PFM)")

    po = sub.add_parser("oracle",
                        help="FFT reference report for a pattern file")
    po.add_argument("pattern", type=Path)
    po.add_argument("--sigma", type=float, required=True,
                    help="coherence radius, meters")
    po.add_argument("--lambda", dest="lam", type=float, required=True,
                    help="wavelength, meters")
    po.add_argument("--x0", type=_parse_pair, required=True,
                    help="window center X,Y in pattern coordinates, meters")
    po.add_argument("--out", type=Path, required=True,
                    help="report directory (created if missing)")
    po.add_argument("--res", type=int, default=4096,
                    help="rasterization cells per axis")
    po.add_argument("--extent", type=float, default=120e-6,
                    help="rasterization extent, meters")
    po.add_argument("--incidence", type=_parse_pair, default=(0.0, 0.0),
                    help="incident direction cosines A,B (default normal)")
    return parser


def _cmd_render(args) -> int:
    scene = load_scene(args.scene)
    settings = scene.settings
    updates = {}
    if args.spp is not None:
        updates["spp"] = args.spp
    if args.res is not None:
        updates["width"], updates["height"] = args.res
    if args.mode is not None:
        updates["mode"] = args.mode
    if args.seed is not None:
        updates["seed"] = args.seed
    if updates:
        scene = replace(scene, settings=replace(settings, **updates))
    img = render(scene, threads=max(1, args.threads))
    write_image(args.output, img, exposure=args.exposure)
    return 0


def _slice_report(name, xi, numeric, analytic_fn, keep):
    ana = analytic_fn(xi, np.zeros_like(xi)) if name == "xi1" else \
        analytic_fn(np.zeros_like(xi), xi)
    xi, numeric, ana = xi[keep], numeric[keep], ana[keep]
    diff = ana - numeric
    l2 = float(np.sqrt(np.sum(diff ** 2) / np.sum(numeric ** 2)))
    mx = float(np.max(np.abs(diff)) / np.max(numeric))
    return xi, numeric, ana, l2, mx


def _cmd_oracle(args) -> int:
    suffix = args.pattern.suffix.lower()
    segments = (parse_svg_pattern(args.pattern) if suffix == ".svg"
                else parse_pattern(args.pattern))
    kernel = CoherenceKernel(args.sigma)
    material = MaterialParams()
    spec = GridSpec(args.res, args.extent)
    alpha, beta = args.incidence
    if alpha ** 2 + beta ** 2 >= 1.0:
        raise ValueError("incidence cosines must satisfy A^2 + B^2 < 1")
    omega_i = np.array([alpha, beta, np.sqrt(1.0 - alpha ** 2 - beta ** 2)])

    heights = rasterize(segments, spec)
    transfer = transfer_function(heights, args.lam, material)
    radiance = fft_radiance(transfer, kernel, args.x0, omega_i, args.lam)
    tables = build_tables(segments) if segments else None

    def analytic(xi1, xi2):
        return analytic_radiance(tables, kernel, material, args.lam,
                                 np.asarray(args.x0), omega_i, xi1, xi2)

    args.out.mkdir(parents=True, exist_ok=True)
    band = 2.0 / args.lam
    lines = [f"pattern: {args.pattern} ({len(segments)} scratches)",
             f"sigma: {args.sigma} m   lambda: {args.lam} m   "
             f"x0: ({args.x0[0]}, {args.x0[1]}) m",
             f"grid: {spec.resolution} cells over {spec.extent} m "
             f"(cell {spec.cell:.4g} m), zero-padded 2x",
             f"incidence cosines: ({alpha}, {beta})",
             f"aliasing mask: |xi| <= 2/lambda = {band:.4g} 1/m; "
             "evanescent bins excluded"]

    for axis, name in ((0, "xi1"), (1, "xi2")):
        xi, numeric = extract_slices(radiance, axis)
        evan = (radiance.evanescent[:, np.argmin(np.abs(radiance.xi2))]
                if axis == 0 else
                radiance.evanescent[np.argmin(np.abs(radiance.xi1)), :])
        keep = (np.abs(xi) <= band) & ~evan
        xi_k, num_k, ana_k, l2, mx = _slice_report(name, xi, numeric,
                                                   analytic, keep)
        path = args.out / f"slice_{name}.csv"
        with open(path, "w") as fh:
            fh.write("xi,numeric,analytic\n")
            for row in zip(xi_k, num_k, ana_k):
                fh.write(f"{row[0]:.9g},{row[1]:.9g},{row[2]:.9g}\n")
        lines.append(f"slice {name} ({path.name}): l2_rel {l2:.4g}   "
                     f"max_rel {mx:.4g}   bins {len(xi_k)}")

    # decimate the 2-D band comparison to a bounded bin count
    stride = max(1, int(np.ceil(np.count_nonzero(np.abs(radiance.xi1)
                                                 <= band) / 512)))
    region = region_box(radiance, (-band, band), (-band, band))
    picks = np.zeros_like(region)
    picks[::stride, ::stride] = True
    report = compare(analytic, radiance, region & picks)
    lines.append(f"band (stride {stride}): l2_rel {report.l2_rel:.4g}   "
                 f"max_rel {report.max_rel:.4g}   bins {report.cells}   "
                 f"evanescent excluded {report.evanescent_excluded}")
    (args.out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "render":
            return _cmd_render(args)
        return _cmd_oracle(args)
    except (SceneError, PatternParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
