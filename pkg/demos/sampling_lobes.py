"""Importance samplers against their target densities.

Left: the base lobe's transverse offsets are Gaussian around the mirror
direction.  Right: scratch draws concentrate on the reflected cone
around the tangent; the histogram of the tangent component follows the
cone density's marginal.  Writes sampling_lobes.png next to this
script.
"""

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from scratchwave.diffraction import CoherenceKernel
from scratchwave.sampling import (VmfParams, sample_base, sample_scratch,
                                  scratch_cone_density)

SIGMA = 10e-6
LAM = 0.5e-6


def main():
    n = 200_000
    rng = np.random.default_rng(5)
    kernel = CoherenceKernel(SIGMA)
    up = np.array([0.0, 0.0, 1.0])

    fig, axes = plt.subplots(1, 2, figsize=(11, 4))

    rec = sample_base(np.broadcast_to(up, (n, 3)), kernel, LAM, rng=rng)
    std = LAM / (math.sqrt(8.0) * math.pi * SIGMA)
    axes[0].hist(rec.omega_o[:, 0] / std, bins=80, density=True,
                 alpha=0.6, label="draws")
    g = np.linspace(-4, 4, 400)
    axes[0].plot(g, np.exp(-g ** 2 / 2) / math.sqrt(2 * math.pi), "k",
                 lw=1, label="target")
    axes[0].set_xlabel("mirror offset / lobe std")
    axes[0].set_title("base lobe, normal incidence")
    axes[0].legend()

    wi = np.array([0.5, 0.3, math.sqrt(1 - 0.25 - 0.09)])
    tan = np.array([1.0, 0.0, 0.0])
    vmf = VmfParams(200.0)
    rec = sample_scratch(np.broadcast_to(wi, (n, 3)), tan, vmf, rng=rng)
    x = rec.omega_o @ tan
    axes[1].hist(x, bins=80, density=True, alpha=0.6, label="draws")
    xg = np.linspace(-1, 1, 600)
    axes[1].plot(xg, 2 * np.pi * scratch_cone_density(wi @ tan, xg,
                                                      vmf.kappa),
                 "k", lw=1, label="cone marginal")
    axes[1].axvline(-wi @ tan, color="0.6", lw=0.8)
    axes[1].set_xlabel("outgoing component along tangent")
    axes[1].set_title("scratch lobe, kappa 200 (gridline at the cone)")
    axes[1].legend()

    fig.tight_layout()
    out = Path(__file__).with_name("sampling_lobes.png")
    fig.savefig(out, dpi=130)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
