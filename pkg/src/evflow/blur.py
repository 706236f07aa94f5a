"""Per-pixel line blur kernels from flow, the blur operator, and its data term.

The kernel at pixel x is a 1-D set of samples along the exposure-scaled flow
u' = (T / dt) * u(x): offsets alpha * u' with alpha equispaced in [-1/2, 1/2]
and uniform weights.  Sampling uses bilinear interpolation with a replicate
boundary, which keeps the operator linear in the image and gives an exact
algebraic adjoint (bilinear splatting).  Flows shorter than half a pixel
collapse to a Dirac delta, so sharp images pass through unchanged.
"""

from dataclasses import dataclass

import numpy as np

from .grids import inner

# below this u' length the kernel is a single delta sample
DELTA_CUTOFF = 0.5


@dataclass(frozen=True)
class ExposureParams:
    """Exposure time T and flow-window length dt, both in seconds."""

    T: float
    dt: float

    def __post_init__(self):
        if not (self.T >= 0.0):
            raise ValueError(f"exposure T must be >= 0, got {self.T}")
        if not (self.dt > 0.0):
            raise ValueError(f"flow window dt must be > 0, got {self.dt}")

    @property
    def lam(self):
        """Scale from window flow to exposure flow: u' = lam * u."""
        return self.T / self.dt


@dataclass(frozen=True)
class LineKernel:
    """Sample offsets (S, 2), matching weights (S,), and the exposure flow u'."""

    offsets: np.ndarray
    weights: np.ndarray
    u_prime: np.ndarray


def _sample_count(norm):
    """Number of equispaced samples for an exposure flow of the given length."""
    if norm < DELTA_CUTOFF:
        return 1
    return max(3, int(np.ceil(2.0 * norm)) + 1)


def build_kernel(u_at_pixel, exp: ExposureParams) -> LineKernel:
    """Line kernel for one pixel's window flow (Dirac delta for tiny motion)."""
    u_at_pixel = np.asarray(u_at_pixel, dtype=np.float64)
    if not np.all(np.isfinite(u_at_pixel)):
        raise ValueError("flow vector must be finite")
    u_prime = exp.lam * u_at_pixel
    s = _sample_count(float(np.hypot(u_prime[0], u_prime[1])))
    if s == 1:
        return LineKernel(np.zeros((1, 2)), np.ones(1), u_prime)
    alphas = -0.5 + np.arange(s) / (s - 1)
    weights = np.full(s, 1.0 / s)
    weights = weights / weights.sum()
    return LineKernel(alphas[:, None] * u_prime[None, :], weights, u_prime)


def _bilinear_gather(L, xs, ys):
    """Sample L at float coordinates with replicate boundary."""
    h, w = L.shape
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    return (L[y0, x0] * (1.0 - fx) * (1.0 - fy)
            + L[y0, x1] * fx * (1.0 - fy)
            + L[y1, x0] * (1.0 - fx) * fy
            + L[y1, x1] * fx * fy)


def _bilinear_splat(acc, xs, ys, vals):
    """Exact adjoint of _bilinear_gather: scatter vals into acc (modified in place)."""
    h, w = acc.shape
    xs = np.clip(np.ravel(xs), 0.0, w - 1.0)
    ys = np.clip(np.ravel(ys), 0.0, h - 1.0)
    vals = np.ravel(vals)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    flat = acc.ravel()
    n = flat.size
    for ix, iy, wgt in ((x0, y0, (1.0 - fx) * (1.0 - fy)),
                        (x1, y0, fx * (1.0 - fy)),
                        (x0, y1, (1.0 - fx) * fy),
                        (x1, y1, fx * fy)):
        flat += np.bincount(iy * w + ix, weights=vals * wgt, minlength=n)


def _exposure_flow(u, exp):
    u = np.asarray(u, dtype=np.float64)
    if not np.all(np.isfinite(u)):
        raise ValueError("flow field must be finite")
    return exp.lam * u


def _kernel_batches(u_prime):
    """Group pixels by their kernel sample count; yields (S, rows, cols)."""
    norms = np.hypot(u_prime[..., 0], u_prime[..., 1])
    s_field = np.where(norms < DELTA_CUTOFF, 1,
                       np.maximum(3, np.ceil(2.0 * norms).astype(np.int64) + 1))
    for s in np.unique(s_field):
        rows, cols = np.nonzero(s_field == s)
        yield int(s), rows, cols


def apply_blur(L, u, exp: ExposureParams):
    """Spatially-variant line blur of L by the per-pixel kernels of flow u."""
    L = np.asarray(L, dtype=np.float64)
    up = _exposure_flow(u, exp)
    out = np.empty_like(L)
    for s, rows, cols in _kernel_batches(up):
        if s == 1:
            out[rows, cols] = L[rows, cols]
            continue
        alphas = -0.5 + np.arange(s) / (s - 1)
        weights = np.full(s, 1.0 / s)
        weights = weights / weights.sum()
        xs = cols[None, :] - alphas[:, None] * up[rows, cols, 0][None, :]
        ys = rows[None, :] - alphas[:, None] * up[rows, cols, 1][None, :]
        vals = _bilinear_gather(L, xs, ys)
        out[rows, cols] = (weights[:, None] * vals).sum(axis=0)
    return out


def apply_blur_adjoint(r, u, exp: ExposureParams):
    """Exact adjoint of apply_blur: weighted bilinear splatting of r."""
    r = np.asarray(r, dtype=np.float64)
    up = _exposure_flow(u, exp)
    out = np.zeros_like(r)
    for s, rows, cols in _kernel_batches(up):
        if s == 1:
            out[rows, cols] += r[rows, cols]
            continue
        alphas = -0.5 + np.arange(s) / (s - 1)
        weights = np.full(s, 1.0 / s)
        weights = weights / weights.sum()
        xs = cols[None, :] - alphas[:, None] * up[rows, cols, 0][None, :]
        ys = rows[None, :] - alphas[:, None] * up[rows, cols, 1][None, :]
        vals = weights[:, None] * r[rows, cols][None, :]
        _bilinear_splat(out, xs, ys, vals)
    return out


def phi_blur(L, u, B, exp: ExposureParams, fd_step=0.1,
             with_grad_l=True, with_grad_u=True):
    """Blur data term: value, gradient in L, and finite-difference gradient in u.

    value  = sum_x (blur(L, u)(x) - B(x))^2
    grad_L = 2 * adjoint(blur(L, u) - B)
    grad_u = central difference of the per-pixel squared residual w.r.t. each
             flow component (step fd_step pixels); pixels are independent
             because the kernel at x only affects the residual at x.
    """
    L = np.asarray(L, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    resid = apply_blur(L, u, exp) - B
    value = inner(resid, resid)
    grad_l = 2.0 * apply_blur_adjoint(resid, u, exp) if with_grad_l else None
    grad_u = None
    if with_grad_u:
        u = np.asarray(u, dtype=np.float64)
        grad_u = np.empty_like(u)
        for k in (0, 1):
            shift = np.zeros_like(u)
            shift[..., k] = fd_step
            rp = apply_blur(L, u + shift, exp) - B
            rm = apply_blur(L, u - shift, exp) - B
            grad_u[..., k] = (rp * rp - rm * rm) / (2.0 * fd_step)
    return value, grad_l, grad_u
