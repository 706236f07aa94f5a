"""Primal-dual flow estimation with the latent image held fixed.

Each iteration performs dual ascent on the weighted flow gradient followed
by projection onto per-pixel unit balls, an explicit gradient-descent primal
step on the data terms (their gradient frozen at the current iterate), and
over-relaxation with factor 1.  Step sizes satisfy sigma * tau * ||K||^2 <= 1
for the weighted gradient operator K.
"""

import numpy as np

from .blur import ExposureParams, phi_blur
from .energy import EnergyWeights, phi_eve
from .errors import DivergenceError
from .grids import EdgeWeights, flow_grad, flow_grad_adjoint, project_ball2

DEFAULT_FLOW_ITERS = 20


def step_sizes(w: EdgeWeights):
    """sigma = tau = 1 / sqrt(8 * max(w)^2), the stability bound for K = w*grad."""
    wmax = float(max(w.wx.max(), w.wy.max()))
    s = 1.0 / np.sqrt(8.0 * wmax * wmax)
    return s, s


def solve_flow(L_hat, B, theta2_grid, u0, edge_w: EdgeWeights,
               weights: EnergyWeights, exp: ExposureParams,
               iters=DEFAULT_FLOW_ITERS, blur_grad_every=1, monitor=None):
    """Minimize the flow energy for fixed latent image L_hat.

    u0 is the starting flow (H, W, 2).  The blur-term gradient (a finite
    difference, the expensive piece) is refreshed every `blur_grad_every`
    iterations.  `monitor`, if given, is called with (iteration, u, p) after
    each update.  Raises DivergenceError on non-finite iterates.
    """
    L_hat = np.asarray(L_hat, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    u = np.asarray(u0, dtype=np.float64).copy()
    u_bar = u.copy()
    p = np.zeros(u.shape[:2] + (4,), dtype=np.float64)
    sigma, tau = step_sizes(edge_w)

    grad_blur = np.zeros_like(u)
    for n in range(iters):
        p = project_ball2(p + sigma * flow_grad(u_bar, edge_w))

        _, grad_eve = phi_eve(L_hat, u, theta2_grid, weights.eps_l1)
        if weights.mu2 != 0.0 and n % blur_grad_every == 0:
            _, _, grad_blur = phi_blur(L_hat, u, B, exp, with_grad_l=False)
        grad_g = weights.mu1 * grad_eve + weights.mu2 * grad_blur

        u_new = u - tau * (grad_g + flow_grad_adjoint(p, edge_w))
        if not np.all(np.isfinite(u_new)):
            raise DivergenceError(f"flow solver produced non-finite values at iteration {n}")
        u_bar = 2.0 * u_new - u
        u = u_new
        if monitor is not None:
            monitor(n, u, p)
    return u
