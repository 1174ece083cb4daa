"""Nonlinear VAR models: a latent linear VAR seen through per-node monotone maps."""

from .baseline import LinearVarModel, evaluate_linear, fit_ols
from .core import (
    ForwardTrace,
    ModelShape,
    NlVarModel,
    NodeMap,
    RangeBounds,
    Role,
    TimeSeriesPanel,
    TrainReport,
    VarCoefficients,
    infer_ranges,
)
from .dynamics import InnovationSpec, companion_spectral_radius, predict_latent, simulate_var, stabilize
from .forward import evaluate_mse, forward_trace, predict_horizon
from .gradients import ModelGradient, fd_gradient, grad_batch, grad_timestep
from .monotone import eval_f, eval_f_prime, eval_g, grad_f_theta, grad_g_theta, sigmoid
from .synthetic import generate_dataset, random_node_maps, random_var_coeffs
from .topology import EdgeList, compare_topology, extract_topology
from .training import TrainConfig, fit, init_model, loss_with_penalty, project_params, split_panel

__version__ = "0.1.0"

__all__ = [
    "LinearVarModel",
    "evaluate_linear",
    "fit_ols",
    "ForwardTrace",
    "ModelShape",
    "NlVarModel",
    "NodeMap",
    "RangeBounds",
    "Role",
    "TimeSeriesPanel",
    "TrainReport",
    "VarCoefficients",
    "infer_ranges",
    "InnovationSpec",
    "companion_spectral_radius",
    "predict_latent",
    "simulate_var",
    "stabilize",
    "evaluate_mse",
    "forward_trace",
    "predict_horizon",
    "ModelGradient",
    "fd_gradient",
    "grad_batch",
    "grad_timestep",
    "eval_f",
    "eval_f_prime",
    "eval_g",
    "grad_f_theta",
    "grad_g_theta",
    "sigmoid",
    "generate_dataset",
    "random_node_maps",
    "random_var_coeffs",
    "EdgeList",
    "compare_topology",
    "extract_topology",
    "TrainConfig",
    "fit",
    "init_model",
    "loss_with_penalty",
    "project_params",
    "split_panel",
]
