"""Render a scratched plate under a tilted sun and write a PNG.

A 1 mm aluminum-like plate with a few hundred random scratches, nadir
camera, directional light a few degrees off normal so the specular
disc sits inside the frame with iridescent scratch glints around it.
Writes render_plate.png (and the raw .pfm) next to this script.
"""

import math
import time
from pathlib import Path

import numpy as np

from scratchwave.diffraction import CoherenceKernel, MaterialParams
from scratchwave.imgio import write_pfm, write_png
from scratchwave.render import render
from scratchwave.scene import (Camera, DirectionalLight, Patch,
                               RenderSettings, SceneDescription)
from scratchwave.scratch import ScratchSegment


def main():
    rng = np.random.default_rng(12)
    segs = []
    for _ in range(300):
        mid = rng.uniform(-4e-4, 4e-4, 2)
        ang = rng.uniform(0.0, math.pi)
        half = 0.5 * rng.uniform(3e-5, 1.2e-4)
        d = np.array([math.cos(ang), math.sin(ang)]) * half
        segs.append(ScratchSegment(mid - d, mid + d,
                                   width=rng.uniform(0.5e-6, 1.5e-6),
                                   depth=rng.uniform(0.08e-6, 0.2e-6)))
    patch = Patch(np.array([-5e-4, -5e-4, 0.0]),
                  np.array([1e-3, 0.0, 0.0]), np.array([0.0, 1e-3, 0.0]),
                  segs, CoherenceKernel(10e-6), MaterialParams(f0=0.91))
    camera = Camera(np.array([0.0, 0.0, 5e-3]), np.zeros(3), 16.0,
                    np.array([0.0, 1.0, 0.0]))
    tilt = math.radians(5.0)
    light = DirectionalLight(np.array([math.sin(tilt), 0.0,
                                       math.cos(tilt)]), 1.0)
    settings = RenderSettings(width=160, height=160, spp=32, seed=3)
    scene = SceneDescription([patch], [light], camera, settings)

    t0 = time.perf_counter()
    img = render(scene, threads=4)
    print(f"rendered {settings.width}x{settings.height} at {settings.spp} "
          f"spp in {time.perf_counter() - t0:.1f}s")

    here = Path(__file__).parent
    write_pfm(here / "render_plate.pfm", img)
    write_png(here / "render_plate.png", img, exposure=2e-3)
    print(f"wrote {here / 'render_plate.png'}")


if __name__ == "__main__":
    main()
