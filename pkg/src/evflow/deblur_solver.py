"""Primal-dual latent-image estimation with the flow held fixed.

Two dual variables drive the primal image: p (componentwise-clamped dual of
the image gradient, giving anisotropic TV) and q (clamped dual of the
mu1-weighted event operator mu1 * K_e, so the subproblem minimizes the same
mu1-weighted event term as the monitored energy).  The blur term enters
through its proximal map, computed by matrix-free conjugate gradient on the
normal equations

    (2 * eta * mu2 * A'A + I) L = 2 * eta * mu2 * A'B + L_bar

where A is the line-blur operator.  The image is clamped to [0, 1] only on
output so every inner step stays linear.
"""

import logging

import numpy as np

from .blur import ExposureParams, apply_blur, apply_blur_adjoint
from .energy import EnergyWeights, eve_residual, event_op_adjoint
from .errors import DivergenceError
from .grids import grad, grad_adjoint, inner, project_box

logger = logging.getLogger(__name__)

DEFAULT_DEBLUR_ITERS = 5
DEFAULT_CG_ITERS = 10


def deblur_step_sizes(theta2_grid, u, mu1):
    """Conservative gamma = eta for the stacked operator (grad; K_e)."""
    u = np.asarray(u, dtype=np.float64)
    m = float((np.abs(theta2_grid) + np.abs(u[..., 0]) + np.abs(u[..., 1])).max())
    s = 1.0 / np.sqrt(8.0 + 2.0 * mu1 * mu1 * m * m)
    return s, s


def _conjugate_gradient(matvec, rhs, x0, iters, tol=1e-12):
    """CG for a symmetric positive definite matvec; falls back to one exact
    line-search gradient step if non-positive curvature is encountered.

    Returns (x, residual_norm, broke_down).
    """
    x = x0.copy()
    r = rhs - matvec(x)
    d = r.copy()
    rs = inner(r, r)
    rhs_norm = np.sqrt(inner(rhs, rhs))
    for _ in range(iters):
        if np.sqrt(rs) <= tol * max(rhs_norm, 1.0):
            break
        md = matvec(d)
        dmd = inner(d, md)
        if not np.isfinite(dmd) or dmd <= 0.0:
            logger.warning("CG breakdown (curvature %.3e); falling back to a gradient step", dmd)
            g = matvec(x) - rhs
            mg = matvec(g)
            gmg = inner(g, mg)
            if np.isfinite(gmg) and gmg > 0.0:
                x = x - (inner(g, g) / gmg) * g
            r = rhs - matvec(x)
            return x, float(np.sqrt(inner(r, r))), True
        alpha = rs / dmd
        x = x + alpha * d
        r = r - alpha * md
        rs_new = inner(r, r)
        d = r + (rs_new / rs) * d
        rs = rs_new
    return x, float(np.sqrt(rs)), False


def prox_blur(L_bar, B, u, exp: ExposureParams, eta, mu2, cg_iters=DEFAULT_CG_ITERS):
    """Proximal map of eta * mu2 * ||A L - B||^2 at L_bar.

    Returns (L, residual_norm) where residual_norm is the final CG residual
    of the normal equations.  mu2 = 0 returns L_bar unchanged.
    """
    L_bar = np.asarray(L_bar, dtype=np.float64)
    if mu2 == 0.0:
        return L_bar.copy(), 0.0
    B = np.asarray(B, dtype=np.float64)
    scale = 2.0 * eta * mu2

    def matvec(x):
        return scale * apply_blur_adjoint(apply_blur(x, u, exp), u, exp) + x

    rhs = scale * apply_blur_adjoint(B, u, exp) + L_bar
    x, res, _ = _conjugate_gradient(matvec, rhs, L_bar, cg_iters)
    return x, res


def solve_deblur(B, u, theta2_grid, L0, weights: EnergyWeights,
                 exp: ExposureParams, iters=DEFAULT_DEBLUR_ITERS,
                 cg_iters=DEFAULT_CG_ITERS, monitor=None):
    """Minimize the image energy for fixed flow u, starting from L0.

    Returns the latent image clamped to [0, 1].  `monitor`, if given, is
    called with (iteration, L, p, q) after each update.
    """
    B = np.asarray(B, dtype=np.float64)
    L = np.asarray(L0, dtype=np.float64).copy()
    L_bar = L.copy()
    p = np.zeros(L.shape + (2,), dtype=np.float64)
    q = np.zeros_like(L)
    gamma, eta = deblur_step_sizes(theta2_grid, u, weights.mu1)

    for n in range(iters):
        p = project_box(p + gamma * grad(L_bar))
        q = project_box(q + gamma * weights.mu1 * eve_residual(L_bar, u, theta2_grid))
        L_half = L - eta * (grad_adjoint(p)
                            + weights.mu1 * event_op_adjoint(q, u, theta2_grid))
        L_new, _ = prox_blur(L_half, B, u, exp, eta, weights.mu2, cg_iters)
        if not np.all(np.isfinite(L_new)):
            raise DivergenceError(f"deblur solver produced non-finite values at iteration {n}")
        L_bar = 2.0 * L_new - L
        L = L_new
        if monitor is not None:
            monitor(n, L, p, q)
    return np.clip(L, 0.0, 1.0)
