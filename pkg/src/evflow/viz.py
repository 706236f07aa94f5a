"""Flow colorization: hue encodes direction, saturation encodes magnitude."""

import numpy as np


def _hsv_to_rgb(h, s, v):
    """Vectorized HSV -> RGB, all components in [0, 1]."""
    h6 = (h % 1.0) * 6.0
    i = np.floor(h6).astype(int) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack((r, g, b), axis=-1)


def colorize_flow(u, max_mag=None):
    """Render a flow field as an (H, W, 3) uint8 color-wheel image.

    Angle 0 (flow pointing +x) maps to red; zero flow is white.  max_mag
    defaults to the 99th-percentile magnitude of the field.
    """
    u = np.asarray(u, dtype=np.float64)
    mag = np.sqrt(u[..., 0] ** 2 + u[..., 1] ** 2)
    if max_mag is None:
        max_mag = float(np.percentile(mag, 99.0))
    if max_mag <= 0:
        max_mag = 1.0
    hue = np.arctan2(u[..., 1], u[..., 0]) / (2.0 * np.pi)
    sat = np.clip(mag / max_mag, 0.0, 1.0)
    rgb = _hsv_to_rgb(hue, sat, np.ones_like(sat))
    return np.round(rgb * 255.0).astype(np.uint8)
