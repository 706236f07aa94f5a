"""Event data term, smoothness terms, edge weights, and the total energy.

The event residual couples the latent image L, the flow u = (u, v), and the
per-pixel event factor theta2 = exp(c*E) - 1:

    r(x) = L(x) * theta2(x) + u(x) * dL/dx + v(x) * dL/dy

The data term is a Charbonnier-smoothed L1 of r so its gradient is defined
everywhere.  As a function of L with u fixed, r is linear (operator K_e),
which the deblurring solver exploits; the exact adjoint is provided here.
"""

from dataclasses import dataclass

import numpy as np

from .grids import EdgeWeights, dx, dy, dx_adjoint, dy_adjoint, flow_grad, grad, inner
from .blur import ExposureParams, phi_blur


@dataclass(frozen=True)
class EnergyWeights:
    """Data-term weights mu1/mu2, edge-weight constants mu3/mu4, L1 smoothing."""

    mu1: float = 2.0
    mu2: float = 1.0
    mu3: float = 1.0
    mu4: float = 0.05
    eps_l1: float = 1e-3

    def __post_init__(self):
        for name in ("mu1", "mu2", "mu3", "mu4", "eps_l1"):
            if getattr(self, name) < 0 or (name in ("mu3", "mu4", "eps_l1")
                                           and getattr(self, name) <= 0):
                raise ValueError(f"{name} must be positive")


def charbonnier(r, eps):
    """Smoothed absolute value sqrt(r^2 + eps^2) - eps."""
    return np.sqrt(r * r + eps * eps) - eps


def charbonnier_deriv(r, eps):
    return r / np.sqrt(r * r + eps * eps)


def eve_residual(L, u, theta2_grid):
    """Event photometric residual; linear in L for fixed flow (this is K_e L)."""
    L = np.asarray(L, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    return L * theta2_grid + u[..., 0] * dx(L) + u[..., 1] * dy(L)


def event_op_adjoint(q, u, theta2_grid):
    """Exact adjoint of L -> eve_residual(L, u, theta2)."""
    q = np.asarray(q, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    return (theta2_grid * q
            + dx_adjoint(u[..., 0] * q)
            + dy_adjoint(u[..., 1] * q))


def phi_eve(L, u, theta2_grid, eps_l1):
    """Smoothed-L1 event term and its exact gradient in the flow.

    Returns (value, grad_u) with grad_u(x) = rho'(r(x)) * (dL/dx, dL/dy).
    """
    L = np.asarray(L, dtype=np.float64)
    r = eve_residual(L, u, theta2_grid)
    value = float(charbonnier(r, eps_l1).sum())
    dphi = charbonnier_deriv(r, eps_l1)
    grad_u = np.empty(L.shape + (2,), dtype=np.float64)
    grad_u[..., 0] = dphi * dx(L)
    grad_u[..., 1] = dphi * dy(L)
    return value, grad_u


def edge_weights(L_hat, mu3, mu4) -> EdgeWeights:
    """Image-driven flow-smoothness weights w = mu3 * exp(-(dL_hat / mu4)^2)."""
    L_hat = np.asarray(L_hat, dtype=np.float64)
    wx = mu3 * np.exp(-((dx(L_hat) / mu4) ** 2))
    wy = mu3 * np.exp(-((dy(L_hat) / mu4) ** 2))
    return EdgeWeights(wx, wy)


def phi_flow(u, w: EdgeWeights):
    """Mixed 1-2 norm of the weighted flow gradient (sum of per-pixel 2-norms)."""
    k = flow_grad(u, w)
    return float(np.sqrt((k * k).sum(axis=-1)).sum())


def phi_im(L):
    """Anisotropic total variation of the image (componentwise L1)."""
    g = grad(L)
    return float(np.abs(g).sum())


def total_energy(L, u, B, theta2_grid, edge_w: EdgeWeights,
                 weights: EnergyWeights, exp: ExposureParams):
    """mu1 * phi_eve + mu2 * phi_blur + phi_flow + phi_im (monitoring value)."""
    eve_val, _ = phi_eve(L, u, theta2_grid, weights.eps_l1)
    blur_val, _, _ = phi_blur(L, u, B, exp, with_grad_l=False, with_grad_u=False)
    return (weights.mu1 * eve_val + weights.mu2 * blur_val
            + phi_flow(u, edge_w) + phi_im(L))
