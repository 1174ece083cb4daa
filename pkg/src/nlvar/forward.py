"""Observed-space prediction: inverse maps, latent VAR step, forward maps."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import (
    ForwardTrace,
    MapStack,
    NlVarModel,
    Role,
    TimeSeriesPanel,
    ValidationError,
)
from .dynamics import predict_latent
from .monotone import CLAMP_MARGIN, DEFAULT_TOL, _f, _invert


def lag_windows(data: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """All teacher-forced (window, target) pairs of a T x N series.

    Returns windows of shape (T - P, P, N) whose row p holds z[t-p-1], and the
    matching targets z[t] of shape (T - P, N), for t = P .. T-1.
    """
    data = np.asarray(data, dtype=float)
    if data.shape[0] <= order:
        raise ValidationError(f"need more than {order} samples, got {data.shape[0]}")
    win = sliding_window_view(data[:-1], order, axis=0)  # (T-P, N, P), oldest first
    return np.ascontiguousarray(win[..., ::-1].transpose(0, 2, 1)), data[order:]


def forward_batch(var: np.ndarray, stack: MapStack, windows: np.ndarray,
                  targets: np.ndarray, tol: float = DEFAULT_TOL):
    """Vectorised forward pass over a batch; returns (y_tilde, y_hat, z_hat, cost)."""
    y_tilde = _invert(stack.alpha, stack.w, stack.k, stack.b, stack.lower, stack.upper,
                      windows, tol, CLAMP_MARGIN)
    y_hat = np.einsum("pij,bpj->bi", var, y_tilde)
    z_hat = _f(stack.alpha, stack.w, stack.k, stack.b, y_hat)
    cost = np.sum((targets - z_hat) ** 2, axis=-1)
    return y_tilde, y_hat, z_hat, cost


def _check_window(model: NlVarModel, window) -> np.ndarray:
    window = np.asarray(window, dtype=float)
    expected = (model.shape.order, model.shape.n_nodes)
    if window.shape != expected:
        raise ValidationError(f"window must have shape {expected}, got {window.shape}")
    return window


def forward_trace(model: NlVarModel, window, target, tol: float = DEFAULT_TOL):
    """One-step prediction of ``target`` from ``window`` (row p holds z[t-p-1]).

    Returns ``(trace, cost)`` with cost = sum_n (z_n - z_hat_n)^2.
    """
    window = _check_window(model, window)
    target = np.asarray(target, dtype=float).reshape(model.shape.n_nodes)
    y_tilde, y_hat, z_hat, cost = forward_batch(
        model.var.entries, model.stack, window[None], target[None], tol)
    return ForwardTrace(y_tilde[0], y_hat[0], z_hat[0]), float(cost[0])


def predict_horizon(model: NlVarModel, window, horizon: int, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Iterate the latent VAR ``horizon`` steps ahead from a single inversion of the window."""
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")
    window = _check_window(model, window)
    s = model.stack
    history = _invert(s.alpha, s.w, s.k, s.b, s.lower, s.upper, window, tol, CLAMP_MARGIN)
    latent = np.empty((horizon, model.shape.n_nodes))
    for h in range(horizon):
        latent[h] = predict_latent(model.var, history)
        history = np.vstack([latent[h][None], history[:-1]])
    return _f(s.alpha, s.w, s.k, s.b, latent)


def one_step_predictions(model: NlVarModel, data: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Teacher-forced predictions z_hat[t] for t = P .. T-1."""
    s = model.stack
    p = model.shape.order
    latent = _invert(s.alpha, s.w, s.k, s.b, s.lower, s.upper, data, tol, CLAMP_MARGIN)
    windows, _ = lag_windows(latent, p)
    y_hat = np.einsum("pij,bpj->bi", model.var.entries, windows)
    return _f(s.alpha, s.w, s.k, s.b, y_hat)


def per_node_mse(model: NlVarModel, panel: TimeSeriesPanel, tol: float = DEFAULT_TOL) -> np.ndarray:
    _check_panel(model.shape.order, panel)
    if panel.n_nodes != model.shape.n_nodes:
        raise ValidationError(f"panel has {panel.n_nodes} nodes, model has {model.shape.n_nodes}")
    z_hat = one_step_predictions(model, panel.data, tol)
    return np.mean((panel.data[model.shape.order:] - z_hat) ** 2, axis=0)


def evaluate_mse(model: NlVarModel, panel: TimeSeriesPanel, tol: float = DEFAULT_TOL) -> float:
    """Mean over t in [P, T) of C[t] / N with true observed history in every window."""
    return float(np.mean(per_node_mse(model, panel, tol)))


def _check_panel(order: int, panel: TimeSeriesPanel):
    if panel.role is not Role.OBSERVED:
        raise ValidationError("evaluation needs an observed panel")
    if panel.n_steps <= order:
        raise ValidationError(f"panel has {panel.n_steps} samples; need more than P={order}")
