"""scikit-learn style front end for the joint flow/deblurring pipeline."""

import numpy as np
from sklearn.base import BaseEstimator

from .events import EventStream
from .pipeline import PipelineConfig, run
from .validation import check_image


class JointFlowDeblurrer(BaseEstimator):
    """Estimate dense optical flow and a sharp latent image from a single
    (possibly blurred) grayscale frame plus its event stream.

    Parameters mirror PipelineConfig; see there for meanings.  After fit the
    results are available as ``flow_`` (H, W, 2), ``latent_`` (H, W),
    ``energy_trace_``, and ``result_`` (the full PipelineResult).

    >>> est = JointFlowDeblurrer(T=0.0, dt=1.0).fit(image, events=stream)
    >>> est.flow_.shape
    (64, 64, 2)
    """

    def __init__(self, T=0.0, dt=1.0, mu1=2.0, mu2=1.0, mu3=1.0, mu4=0.05,
                 c=0.22, outer_iters=5, flow_iters=20, deblur_iters=5,
                 cg_iters=10, eps_l1=1e-3, energy_tol=1e-4, seed=0,
                 blur_grad_every=1):
        self.T = T
        self.dt = dt
        self.mu1 = mu1
        self.mu2 = mu2
        self.mu3 = mu3
        self.mu4 = mu4
        self.c = c
        self.outer_iters = outer_iters
        self.flow_iters = flow_iters
        self.deblur_iters = deblur_iters
        self.cg_iters = cg_iters
        self.eps_l1 = eps_l1
        self.energy_tol = energy_tol
        self.seed = seed
        self.blur_grad_every = blur_grad_every

    def _config(self):
        return PipelineConfig(**self.get_params())

    def fit(self, X, y=None, *, events: EventStream):
        """Run the joint estimation on image X (H, W in [0, 1]) and events."""
        X = check_image(X, name="X")
        result = run(X, events, self._config())
        self.result_ = result
        self.flow_ = result.flow
        self.latent_ = result.latent
        self.energy_trace_ = result.energy_trace
        self.diverged_ = result.diverged
        return self

    def fit_predict(self, X, y=None, *, events: EventStream):
        """Fit and return the estimated flow field."""
        return self.fit(X, events=events).flow_
