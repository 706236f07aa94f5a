"""End-to-end alternation: initialization, outer loop, convergence control.

Timeline convention: event timestamps use t = 0 at the exposure start, the
exposure spans [0, T], and the latent image is anchored at the reference
time f = T/2 (the exposure midpoint, matching the symmetric line kernel of
the blur model).  The flow window is [f, f + dt].  Streams may override f
explicitly; otherwise it is derived from the configured exposure.

The latent image is seeded by event-based double-integral deblurring of the
input frame, the flow by Horn-Schunck between two event half-frames, and the
two primal-dual solvers then alternate, re-deriving the edge weights from
the current latent image at the start of every round.
"""

import time
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.ndimage import correlate, gaussian_filter

from .blur import ExposureParams
from .deblur_solver import solve_deblur
from .energy import EnergyWeights, edge_weights, total_energy
from .errors import ConfigError, DivergenceError
from .events import EventStream, integrate, theta2
from .flow_solver import solve_flow
from .validation import check_image

_INT_FIELDS = {"outer_iters", "flow_iters", "deblur_iters", "cg_iters", "seed",
               "blur_grad_every"}
_REQUIRED_FIELDS = {"T", "dt"}

EDI_SUBINTERVALS = 32


@dataclass
class PipelineConfig:
    """All tunables of the joint estimation; T and dt are scene-dependent."""

    T: float
    dt: float
    mu1: float = 2.0
    mu2: float = 1.0
    mu3: float = 1.0
    mu4: float = 0.05
    c: float = 0.22
    outer_iters: int = 5
    flow_iters: int = 20
    deblur_iters: int = 5
    cg_iters: int = 10
    eps_l1: float = 1e-3
    energy_tol: float = 1e-4
    seed: int = 0
    blur_grad_every: int = 1

    def __post_init__(self):
        if self.T < 0:
            raise ConfigError(f"T must be >= 0, got {self.T}")
        for name in ("dt", "mu3", "mu4", "c", "eps_l1", "energy_tol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("mu1", "mu2"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("outer_iters", "flow_iters", "deblur_iters", "cg_iters",
                     "blur_grad_every"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")

    def energy_weights(self):
        return EnergyWeights(self.mu1, self.mu2, self.mu3, self.mu4, self.eps_l1)

    def exposure(self):
        return ExposureParams(self.T, self.dt)


def parse_config(path):
    """Read a flat "key = value" file; keys are PipelineConfig field names."""
    known = {f.name: f for f in fields(PipelineConfig)}
    values = {}
    with open(path, "r") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in known:
                raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
            try:
                values[key] = int(value) if key in _INT_FIELDS else float(value)
            except ValueError:
                raise ConfigError(f"{path}:{line_no}: bad value for {key}: {value!r}") from None
    missing = _REQUIRED_FIELDS - values.keys()
    if missing:
        raise ConfigError(f"{path}: missing required keys: {sorted(missing)}")
    return PipelineConfig(**values)


def save_config(cfg: PipelineConfig, path):
    with open(path, "w") as fh:
        for f in fields(PipelineConfig):
            fh.write(f"{f.name} = {getattr(cfg, f.name)!r}\n")


@dataclass
class PipelineResult:
    """Joint estimate plus the energy trace and per-stage wall times."""

    flow: np.ndarray
    latent: np.ndarray
    energy_trace: list
    stages: list
    timings: dict
    diverged: bool = False
    outer_iters_run: int = 0


def reference_time(stream: EventStream, cfg: PipelineConfig):
    """Latent anchor time: the stream's f if set, else the exposure midpoint."""
    if stream.f is not None:
        return float(stream.f)
    return 0.5 * cfg.T


def horn_schunck(im1, im2, alpha2=0.5, iters=200):
    """Classic Horn-Schunck flow between two frames via Jacobi iterations."""
    im1 = np.asarray(im1, dtype=np.float64)
    im2 = np.asarray(im2, dtype=np.float64)
    # classic quarter-kernels; correlate keeps their orientation
    kx = np.array([[-1.0, 1.0], [-1.0, 1.0]]) * 0.25
    ky = np.array([[-1.0, -1.0], [1.0, 1.0]]) * 0.25
    kt = np.ones((2, 2)) * 0.25
    fx = correlate(im1, kx, mode="nearest") + correlate(im2, kx, mode="nearest")
    fy = correlate(im1, ky, mode="nearest") + correlate(im2, ky, mode="nearest")
    ft = correlate(im2, kt, mode="nearest") - correlate(im1, kt, mode="nearest")
    avg = np.array([[1.0 / 12, 1.0 / 6, 1.0 / 12],
                    [1.0 / 6, 0.0, 1.0 / 6],
                    [1.0 / 12, 1.0 / 6, 1.0 / 12]])
    denom = alpha2 + fx * fx + fy * fy
    U = np.zeros_like(im1)
    V = np.zeros_like(im1)
    for _ in range(iters):
        u_avg = correlate(U, avg, mode="nearest")
        v_avg = correlate(V, avg, mode="nearest")
        common = (fx * u_avg + fy * v_avg + ft) / denom
        U = u_avg - fx * common
        V = v_avg - fy * common
    return np.stack((U, V), axis=-1)


def init_flow(stream: EventStream, cfg: PipelineConfig):
    """Seed flow from Horn-Schunck between smoothed event half-frames.

    The half-window flow is doubled to span the full window.  Windows with
    no events yield zero flow.
    """
    f = reference_time(stream, cfg)
    e1 = integrate(stream, f, f + 0.5 * cfg.dt)
    e2 = integrate(stream, f + 0.5 * cfg.dt, f + cfg.dt)
    if not (np.any(e1) or np.any(e2)):
        return np.zeros((stream.height, stream.width, 2), dtype=np.float64)
    e1 = gaussian_filter(e1, sigma=1.0, mode="nearest")
    e2 = gaussian_filter(e2, sigma=1.0, mode="nearest")
    return 2.0 * horn_schunck(e1, e2, alpha2=0.5, iters=200)


def edi_initial_latent(B, stream: EventStream, f, cfg: PipelineConfig):
    """Sharp-image seed: divide the blurred frame by the exposure-averaged
    event exponential (midpoint rule across the exposure, backward before f)."""
    B = np.asarray(B, dtype=np.float64)
    if cfg.T == 0:
        return B.copy()
    denom = np.zeros_like(B)
    start = f - 0.5 * cfg.T
    for k in range(EDI_SUBINTERVALS):
        mid = start + (k + 0.5) * cfg.T / EDI_SUBINTERVALS
        denom += np.exp(cfg.c * integrate(stream, f, mid))
    denom /= EDI_SUBINTERVALS
    return np.clip(B / denom, 0.0, 1.0)


def run(B, stream: EventStream, cfg: PipelineConfig):
    """Alternate flow and deblurring solves, tracking the energy.

    Returns the lowest-energy state seen.  Stops early when the relative
    energy drop over a round falls below energy_tol; a rise of more than 10%
    over a round (or a non-finite solver state) flags divergence and returns
    the best state found so far.
    """
    B = check_image(B, name="input image")
    if B.shape != stream.shape:
        raise ValueError(f"image shape {B.shape} != sensor shape {stream.shape}")
    exp = cfg.exposure()
    weights = cfg.energy_weights()
    f = reference_time(stream, cfg)

    timings = {}
    t0 = time.perf_counter()
    th2 = theta2(integrate(stream, f, f + cfg.dt), cfg.c)
    L = edi_initial_latent(B, stream, f, cfg)
    u = init_flow(stream, cfg)
    timings["init"] = time.perf_counter() - t0

    w = edge_weights(L, cfg.mu3, cfg.mu4)
    energies = [total_energy(L, u, B, th2, w, weights, exp)]
    stages = ["init"]
    best = (energies[0], L.copy(), u.copy())
    diverged = False
    rounds_run = 0
    timings["flow"] = 0.0
    timings["deblur"] = 0.0

    for _ in range(cfg.outer_iters):
        e_start = energies[-1]
        w = edge_weights(L, cfg.mu3, cfg.mu4)
        try:
            t1 = time.perf_counter()
            u_new = solve_flow(L, B, th2, u, w, weights, exp,
                               iters=cfg.flow_iters,
                               blur_grad_every=cfg.blur_grad_every)
            e_flow = total_energy(L, u_new, B, th2, w, weights, exp)
            timings["flow"] += time.perf_counter() - t1

            t1 = time.perf_counter()
            L_new = solve_deblur(B, u_new, th2, L, weights, exp,
                                 iters=cfg.deblur_iters, cg_iters=cfg.cg_iters)
            e_deblur = total_energy(L_new, u_new, B, th2, w, weights, exp)
            timings["deblur"] += time.perf_counter() - t1
        except DivergenceError:
            diverged = True
            break

        energies.append(e_flow)
        stages.append("flow")
        if e_flow <= best[0]:
            best = (e_flow, L.copy(), u_new.copy())
        energies.append(e_deblur)
        stages.append("deblur")
        if e_deblur <= best[0]:
            best = (e_deblur, L_new.copy(), u_new.copy())
        u, L = u_new, L_new
        rounds_run += 1

        if e_deblur > 1.1 * e_start + 1e-12:
            diverged = True
            break
        if e_start - e_deblur < cfg.energy_tol * max(abs(e_start), 1e-12):
            break

    timings["total"] = time.perf_counter() - t0
    return PipelineResult(flow=best[2], latent=best[1], energy_trace=energies,
                          stages=stages, timings=timings, diverged=diverged,
                          outer_iters_run=rounds_run)
