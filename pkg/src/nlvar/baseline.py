"""Least-squares linear VAR, evaluated under the same one-step MSE protocol."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .core import RankDeficiencyError, Role, TimeSeriesPanel, ValidationError, VarCoefficients
from .forward import lag_windows

DEFAULT_RIDGE = 1e-8


@dataclass(frozen=True)
class LinearVarModel:
    """A VAR fitted directly in observation space (identity node maps)."""

    var: VarCoefficients

    @property
    def order(self) -> int:
        return self.var.order

    @property
    def n_nodes(self) -> int:
        return self.var.n_nodes


def fit_ols(panel: TimeSeriesPanel, order: int, ridge: float = DEFAULT_RIDGE) -> VarCoefficients:
    """Solve (X'X + ridge I) B = X'Z with x_t = [z[t-1]; ...; z[t-P]] by Cholesky."""
    if ridge < 0:
        raise ValidationError("ridge must be >= 0")
    n = panel.n_nodes
    if panel.n_steps <= n * order + 1:
        raise ValidationError(f"need T > N*P + 1 = {n * order + 1} samples, got {panel.n_steps}")
    windows, targets = lag_windows(panel.data, order)
    x = windows.reshape(len(windows), order * n)
    gram = x.T @ x + ridge * np.eye(order * n)
    try:
        factor = linalg.cho_factor(gram, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise RankDeficiencyError(
            "normal equations are singular; the regressors are rank deficient "
            "(use a positive ridge)") from exc
    coef = linalg.cho_solve(factor, x.T @ targets, check_finite=False)  # (P*N, N)
    # coef[p*N + j, i] multiplies z_j[t-p-1] in the prediction of z_i[t]
    return VarCoefficients(coef.reshape(order, n, n).transpose(0, 2, 1))


def linear_predictions(var: VarCoefficients, data: np.ndarray) -> np.ndarray:
    windows, _ = lag_windows(data, var.order)
    return np.einsum("pij,bpj->bi", var.entries, windows)


def evaluate_linear(var: VarCoefficients, panel: TimeSeriesPanel) -> float:
    return float(np.mean(per_node_mse_linear(var, panel)))


def per_node_mse_linear(var: VarCoefficients, panel: TimeSeriesPanel) -> np.ndarray:
    if isinstance(var, LinearVarModel):
        var = var.var
    if panel.role is not Role.OBSERVED:
        raise ValidationError("evaluation needs an observed panel")
    if panel.n_steps <= var.order:
        raise ValidationError(f"panel has {panel.n_steps} samples; need more than P={var.order}")
    if panel.n_nodes != var.n_nodes:
        raise ValidationError(f"panel has {panel.n_nodes} nodes, model has {var.n_nodes}")
    z_hat = linear_predictions(var, panel.data)
    return np.mean((panel.data[var.order:] - z_hat) ** 2, axis=0)
