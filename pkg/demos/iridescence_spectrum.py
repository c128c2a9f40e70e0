"""Why scratches look colored: the groove response is wavelength-tagged.

Evaluates one scratch at fixed geometry across the visible band.  Each
outgoing direction picks its own frequency offset per wavelength, so a
fixed direction sweeps through the groove's diffraction pattern as the
wavelength changes; deeper grooves shift the balance.  Writes
iridescence_spectrum.png next to this script.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from scratchwave.diffraction import (CoherenceKernel, MaterialParams,
                                     build_tables, eval_brdf_batch)
from scratchwave.scratch import ScratchSegment

SIGMA = 10e-6


def main():
    kernel = CoherenceKernel(SIGMA)
    mat = MaterialParams()
    lams = np.linspace(380e-9, 720e-9, 200)
    pts = np.zeros((len(lams), 2))
    wi = np.array([0.0, 0.0, 1.0])

    # fixed outgoing tilt across the scratch: away from the mirror, on
    # the groove's diffraction ridge
    beta = 0.25
    wo = np.broadcast_to([0.0, beta, np.sqrt(1.0 - beta ** 2)],
                         (len(lams), 3))

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for depth_nm in (80, 140, 200):
        seg = ScratchSegment((-20e-6, 0.0), (20e-6, 0.0), width=0.8e-6,
                             depth=depth_nm * 1e-9)
        tables = build_tables([seg])
        vals = eval_brdf_batch(pts, wi, wo, lams, tables, kernel, mat)
        ax.plot(lams * 1e9, vals, label=f"depth {depth_nm} nm")
    ax.set_xlabel("wavelength (nm)")
    ax.set_ylabel("radiance factor (1/sr)")
    ax.set_title("one groove, fixed view 14.5 degrees off mirror")
    ax.legend()
    fig.tight_layout()
    out = Path(__file__).with_name("iridescence_spectrum.png")
    fig.savefig(out, dpi=130)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
