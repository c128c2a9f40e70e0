"""Image output: linear-light PFM and 8-bit sRGB PNG.

PFM keeps the raw radiance for downstream analysis; PNG applies an
exposure scale and the sRGB transfer for viewing.  Non-finite pixels
are a renderer bug, so both writers refuse them loudly instead of
laundering them into the file.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def _check_image(img):
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (height, width, 3), got {img.shape}")
    bad = ~np.isfinite(img)
    if bad.any():
        ys, xs, _ = np.nonzero(bad)
        raise ValueError(f"{bad.sum()} non-finite samples, first at pixel "
                         f"(x={xs[0]}, y={ys[0]})")
    return img.astype(np.float32)


def write_pfm(path, img):
    """Color PFM, little-endian, rows bottom-up per the format's scale
    sign convention."""
    img = _check_image(img)
    h, w = img.shape[:2]
    data = img[::-1].astype("<f4").tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(f"PF\n{w} {h}\n-1.0\n".encode("ascii"))
            fh.write(data)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_pfm(path):
    """Inverse of write_pfm; accepts either byte order."""
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"PF":
            raise ValueError(f"{path}: not a color PFM")
        w, h = map(int, fh.readline().split())
        scale = float(fh.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(fh.read(w * h * 12), dtype=dtype)
    return data.reshape(h, w, 3)[::-1].astype(np.float32)


def linear_to_srgb(x):
    x = np.clip(x, 0.0, 1.0)
    return np.where(x <= 0.0031308, 12.92 * x,
                    1.055 * np.power(x, 1.0 / 2.4) - 0.055)


def write_png(path, img, exposure=1.0):
    """8-bit sRGB PNG after scaling linear radiance by ``exposure``."""
    img = _check_image(img)
    srgb = linear_to_srgb(img * exposure)
    quant = (srgb * 255.0 + 0.5).astype(np.uint8)
    try:
        Image.fromarray(quant, mode="RGB").save(Path(path), format="PNG")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_image(path, img, exposure=1.0):
    """Dispatch on extension: .pfm stores linear data, .png applies
    exposure and the sRGB transfer."""
    ext = Path(path).suffix.lower()
    if ext == ".pfm":
        write_pfm(path, img)
    elif ext == ".png":
        write_png(path, img, exposure)
    else:
        raise ValueError(f"unsupported image extension {ext!r} "
                         "(use .pfm or .png)")
