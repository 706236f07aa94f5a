"""evflow: joint optical flow estimation and deblurring from a single frame
plus an event stream, with a synthetic event-camera oracle and benchmarking
tools."""

from .blur import ExposureParams, LineKernel, apply_blur, apply_blur_adjoint, build_kernel, phi_blur
from .deblur_solver import prox_blur, solve_deblur
from .energy import (EnergyWeights, edge_weights, eve_residual, phi_eve,
                     phi_flow, phi_im, total_energy)
from .errors import (ConfigError, DivergenceError, EventParseError,
                     EvflowError, FloFormatError)
from .estimator import JointFlowDeblurrer
from .events import (EventStream, edi_propagate, integrate, load_events,
                     save_events, theta2)
from .fileio import read_flo, read_image, write_flo, write_image
from .flow_solver import solve_flow, step_sizes
from .grids import (EdgeWeights, flow_grad, flow_grad_adjoint, grad,
                    grad_adjoint, project_ball2, project_box)
from .metrics import FlowMetrics, flow_metrics, psnr
from .pipeline import (PipelineConfig, PipelineResult, init_flow,
                       parse_config, run, save_config)
from .simulate import (RenderedScene, SceneSpec, render_scene, save_dataset,
                       verify_consistency)
from .viz import colorize_flow

__version__ = "0.1.0"
