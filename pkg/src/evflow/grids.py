"""Discrete differential operators, exact adjoints, and dual-ball projections.

Grids are float64 numpy arrays indexed [row, col] = [y, x].  A scalar grid
has shape (H, W); a k-vector grid has shape (H, W, k).  Flow fields store
the x (column) component first: u[..., 0] = horizontal, u[..., 1] = vertical.
Gradients of a vector field are packed as (du/dx, du/dy, dv/dx, dv/dy).

All gradients use forward differences with a replicate boundary (the last
row/column difference is zero), and every adjoint is derived algebraically
from that stencil so that <A x, y> == <x, A* y> holds to round-off.
"""

from typing import NamedTuple

import numpy as np


class EdgeWeights(NamedTuple):
    """Per-pixel positive weights applied to x- and y-derivatives of the flow."""

    wx: np.ndarray
    wy: np.ndarray


def inner(a, b):
    """Deterministic inner product of two equally-shaped arrays."""
    return float((np.asarray(a) * np.asarray(b)).sum())


def dx(g):
    """Forward x-difference, zero in the last column."""
    out = np.zeros_like(g)
    out[:, :-1] = g[:, 1:] - g[:, :-1]
    return out


def dy(g):
    """Forward y-difference, zero in the last row."""
    out = np.zeros_like(g)
    out[:-1, :] = g[1:, :] - g[:-1, :]
    return out


def dx_adjoint(v):
    """Exact adjoint of dx under the standard inner product."""
    out = np.zeros_like(v)
    out[:, 1:] += v[:, :-1]
    out[:, :-1] -= v[:, :-1]
    return out


def dy_adjoint(v):
    out = np.zeros_like(v)
    out[1:, :] += v[:-1, :]
    out[:-1, :] -= v[:-1, :]
    return out


def grad(g):
    """Gradient of a scalar grid: (H, W) -> (H, W, 2) with (d/dx, d/dy)."""
    g = np.asarray(g, dtype=np.float64)
    return np.stack((dx(g), dy(g)), axis=-1)


def grad_adjoint(v):
    """Adjoint of grad: (H, W, 2) -> (H, W).  Equals minus the matching divergence."""
    v = np.asarray(v, dtype=np.float64)
    return dx_adjoint(v[..., 0]) + dy_adjoint(v[..., 1])


def flow_grad(u, w: EdgeWeights):
    """Weighted flow gradient K u = w * grad(u): (H, W, 2) -> (H, W, 4).

    Output order per pixel: (wx*du/dx, wy*du/dy, wx*dv/dx, wy*dv/dy).
    """
    u = np.asarray(u, dtype=np.float64)
    out = np.empty(u.shape[:2] + (4,), dtype=np.float64)
    out[..., 0] = w.wx * dx(u[..., 0])
    out[..., 1] = w.wy * dy(u[..., 0])
    out[..., 2] = w.wx * dx(u[..., 1])
    out[..., 3] = w.wy * dy(u[..., 1])
    return out


def flow_grad_adjoint(p, w: EdgeWeights):
    """Exact adjoint of flow_grad: (H, W, 4) -> (H, W, 2)."""
    p = np.asarray(p, dtype=np.float64)
    out = np.empty(p.shape[:2] + (2,), dtype=np.float64)
    out[..., 0] = dx_adjoint(w.wx * p[..., 0]) + dy_adjoint(w.wy * p[..., 1])
    out[..., 1] = dx_adjoint(w.wx * p[..., 2]) + dy_adjoint(w.wy * p[..., 3])
    return out


def project_ball2(p):
    """Project each per-pixel vector (last axis) onto the Euclidean unit ball."""
    p = np.asarray(p, dtype=np.float64)
    norm = np.sqrt((p * p).sum(axis=-1, keepdims=True))
    return p / np.maximum(1.0, norm)


def project_box(p):
    """Componentwise p / max(1, |p|), i.e. clamp every entry to [-1, 1]."""
    p = np.asarray(p, dtype=np.float64)
    return p / np.maximum(1.0, np.abs(p))
