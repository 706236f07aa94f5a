"""Input validation helpers shared by the estimator, pipeline, and CLI."""

import numpy as np


def check_image(arr, name="image"):
    """Validate a 2-D intensity grid with finite values in [0, 1]."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if arr.min() < -1e-9 or arr.max() > 1.0 + 1e-9:
        raise ValueError(f"{name} must lie in [0, 1], got range "
                         f"[{arr.min():.4g}, {arr.max():.4g}]")
    return np.clip(arr, 0.0, 1.0)


def check_flow(arr, name="flow field"):
    """Validate an (H, W, 2) flow field with finite components."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValueError(f"{name} must have shape (H, W, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_same_shape(a, b, name_a="first", name_b="second"):
    if np.shape(a)[:2] != np.shape(b)[:2]:
        raise ValueError(f"{name_a} shape {np.shape(a)} does not match "
                         f"{name_b} shape {np.shape(b)}")
