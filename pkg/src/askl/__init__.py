"""Automated spectral kernel learning with non-stationary random Fourier features."""
from ._backend import NAME as BACKEND
from .bounds import BoundReport, bound_report, excess_risk_value, rademacher_estimate
from .data import (Dataset, ParamGrid, StandardizationSpec, grid_search, load_libsvm,
                   parse_libsvm, split, standardize)
from .losses import LossKind, loss_gradient, loss_value
from .model import (TraceLog, TrainConfig, TrainedModel, Variant, evaluate, fit, objective,
                    predict)
from .numerics import SvdConvergenceError, SvdResult, frobenius_norm_sq, nuclear_norm, thin_svd
from .optim import AdamState, Which, adam_step, grad_omega, grad_w, sgd_step, svt_prox
from .spectral import (FrequencyPack, MapMode, feature_map, feature_matrix, init_frequencies,
                       kernel_estimate)

__version__ = "0.1.0"
