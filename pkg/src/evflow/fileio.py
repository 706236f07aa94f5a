"""File formats: Middlebury .flo flow files and grayscale PNG/PGM images.

The .flo layout is fixed little-endian regardless of host: float32 magic
202021.25, int32 width, int32 height, then row-major interleaved float32
(u, v) pairs.
"""

import numpy as np
from PIL import Image

from .errors import FloFormatError
from .validation import check_flow

FLO_MAGIC = 202021.25


def write_flo(flow, path):
    """Write an (H, W, 2) flow field as a Middlebury .flo file."""
    flow = check_flow(flow)
    h, w = flow.shape[:2]
    with open(path, "wb") as fh:
        np.array([FLO_MAGIC], dtype="<f4").tofile(fh)
        np.array([w, h], dtype="<i4").tofile(fh)
        flow.astype("<f4").tofile(fh)


def read_flo(path):
    """Read a Middlebury .flo file into an (H, W, 2) float64 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12:
        raise FloFormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic = np.frombuffer(data, dtype="<f4", count=1)[0]
    if magic != np.float32(FLO_MAGIC):
        raise FloFormatError(f"{path}: bad magic {magic!r}")
    w, h = np.frombuffer(data, dtype="<i4", count=2, offset=4)
    expected = 12 + 8 * int(w) * int(h)
    if len(data) != expected:
        raise FloFormatError(f"{path}: expected {expected} bytes for {w}x{h}, got {len(data)}")
    flow = np.frombuffer(data, dtype="<f4", count=2 * int(w) * int(h), offset=12)
    return flow.reshape(int(h), int(w), 2).astype(np.float64)


def read_image(path):
    """Load an 8- or 16-bit grayscale PNG/PGM as float64 in [0, 1]."""
    with Image.open(path) as img:
        if img.mode in ("I", "I;16", "I;16B"):
            arr = np.asarray(img, dtype=np.float64) / 65535.0
        else:
            arr = np.asarray(img.convert("L"), dtype=np.float64) / 255.0
    return arr


def write_image(arr, path, bits=8):
    """Write a float image in [0, 1] as 8- or 16-bit grayscale PNG/PGM."""
    arr = np.clip(np.asarray(arr, dtype=np.float64), 0.0, 1.0)
    if bits == 8:
        Image.fromarray(np.round(arr * 255.0).astype(np.uint8), mode="L").save(path)
    elif bits == 16:
        Image.fromarray(np.round(arr * 65535.0).astype(np.uint32), mode="I").save(path)
    else:
        raise ValueError(f"bits must be 8 or 16, got {bits}")


def write_rgb(arr, path):
    """Write an (H, W, 3) uint8 array as a color PNG."""
    Image.fromarray(np.asarray(arr, dtype=np.uint8), mode="RGB").save(path)


def write_metrics_csv(path, aee, mse, fe, psnr_db):
    with open(path, "w") as fh:
        fh.write("aee,mse,fe,psnr\n")
        fh.write(f"{aee!r},{mse!r},{fe!r},{psnr_db!r}\n")
