"""Projected mini-batch SGD / Adam for the nonlinear VAR model."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import (
    MapStack,
    ModelShape,
    NlVarError,
    NlVarModel,
    NodeMap,
    RangeBounds,
    Role,
    TimeSeriesPanel,
    TrainReport,
    ValidationError,
    VarCoefficients,
    infer_ranges,
)
from .forward import evaluate_mse, forward_batch, lag_windows
from .gradients import backward_batch

logger = logging.getLogger(__name__)

OPTIMIZERS = ("sgd", "adam")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    batch_size: int = 64
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    l1_weight: float = 0.0
    l2_weight: float = 0.0
    test_fraction: float = 0.3
    seed: int = 0
    w_floor: float = 1e-6
    margin_fraction: float = 0.05

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ValidationError("epochs must be >= 0 and batch_size >= 1")
        if self.learning_rate < 0:
            raise ValidationError("learning_rate must be >= 0")
        if self.optimizer not in OPTIMIZERS:
            raise ValidationError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1 and self.adam_epsilon > 0):
            raise ValidationError("invalid Adam hyperparameters")
        if self.l1_weight < 0 or self.l2_weight < 0:
            raise ValidationError("penalty weights must be >= 0")
        if not 0 < self.test_fraction < 1:
            raise ValidationError("test_fraction must lie in (0, 1)")
        if self.w_floor <= 0:
            raise ValidationError("w_floor must be positive")


def init_model(shape: ModelShape, ranges: Sequence[RangeBounds], seed: int = 0) -> NlVarModel:
    """Uniform alpha, unit w, k spread over [-2, 2], small Gaussian VAR entries."""
    if len(ranges) != shape.n_nodes:
        raise ValidationError(f"need {shape.n_nodes} ranges, got {len(ranges)}")
    m = shape.n_units
    k = np.linspace(-2.0, 2.0, m) if m > 1 else np.zeros(1)
    maps = [NodeMap(np.full(m, r.span / m), np.ones(m), k, r.lower, r) for r in ranges]
    rng = np.random.Generator(np.random.PCG64(seed))
    std = 0.1 / np.sqrt(shape.n_nodes * shape.order)
    var = std * rng.standard_normal((shape.order, shape.n_nodes, shape.n_nodes))
    return NlVarModel(shape, VarCoefficients(var), maps)


def project_simplex(v: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection of each row of ``v`` onto {x >= 0, sum(x) = total}.

    Sort-and-threshold: with u sorted descending, the threshold is
    tau = (sum(u[:r]) - total) / r for the largest r with u[r-1] > tau.
    """
    v = np.asarray(v, dtype=float)
    total = np.asarray(total, dtype=float)
    u = -np.sort(-v, axis=-1)
    css = np.cumsum(u, axis=-1) - np.expand_dims(total, -1)
    ind = np.arange(1, v.shape[-1] + 1)
    cond = u - css / ind > 0
    rho = v.shape[-1] - np.argmax(cond[..., ::-1], axis=-1)  # last True, 1-based
    tau = np.take_along_axis(css, np.expand_dims(rho - 1, -1), -1) / np.expand_dims(rho, -1)
    return np.maximum(v - tau, 0.0)


def _project_stack(stack: MapStack, w_floor: float) -> MapStack:
    span = stack.upper - stack.lower
    alpha = stack.alpha
    feasible = (alpha.min(axis=1) >= 0) & (np.abs(alpha.sum(axis=1) - span) <= 16 * np.finfo(float).eps * span)
    if not feasible.all():
        alpha = np.where(feasible[:, None], alpha, project_simplex(alpha, span))
    return stack._replace(alpha=alpha, w=np.maximum(stack.w, w_floor), b=stack.lower.copy())


def project_params(model: NlVarModel, w_floor: float = 1e-6) -> NlVarModel:
    """Map a model onto the feasible set; the VAR tensor is left alone.

    Rows of alpha that already satisfy the constraints are kept bit-for-bit.
    """
    return model.replace(stack=_project_stack(model.stack, w_floor))


def penalty(var: np.ndarray, l1_weight: float, l2_weight: float) -> float:
    var = var.entries if isinstance(var, VarCoefficients) else np.asarray(var)
    return float(l1_weight * np.abs(var).sum() + l2_weight * np.square(var).sum())


def penalty_gradient(var: np.ndarray, l1_weight: float, l2_weight: float) -> np.ndarray:
    # np.sign(0) == 0 is the subgradient choice at the kink
    return l1_weight * np.sign(var) + 2.0 * l2_weight * var


def loss_with_penalty(cost: float, model: NlVarModel, l1_weight: float = 0.0,
                      l2_weight: float = 0.0) -> float:
    if l1_weight < 0 or l2_weight < 0:
        raise ValidationError("penalty weights must be >= 0")
    return cost + penalty(model.var, l1_weight, l2_weight)


def split_panel(panel: TimeSeriesPanel, test_fraction: float = 0.3,
                order: int = 1) -> tuple[TimeSeriesPanel, TimeSeriesPanel]:
    """Chronological split; both parts must hold more than ``order`` samples."""
    if not 0 < test_fraction < 1:
        raise ValidationError("test_fraction must lie in (0, 1)")
    n_train = int(round((1.0 - test_fraction) * panel.n_steps))
    if n_train <= order or panel.n_steps - n_train <= order:
        raise ValidationError(
            f"split of T={panel.n_steps} at {n_train} leaves a segment with <= P={order} samples")
    return (TimeSeriesPanel(panel.data[:n_train], panel.role),
            TimeSeriesPanel(panel.data[n_train:], panel.role))


class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name in params:
            params[name] -= self.lr * grads[name]


class Adam:
    """Adam with bias correction; moment estimates are never projected."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name in params:
            g = grads[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            params[name] -= self.lr * (self.m[name] / bc1) / (np.sqrt(self.v[name] / bc2) + self.epsilon)


def make_optimizer(config: TrainConfig):
    if config.optimizer == "sgd":
        return SGD(config.learning_rate)
    return Adam(config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_epsilon)


class TrainingError(NlVarError):
    """Wraps a numerical failure with the epoch/batch where it happened."""

    def __init__(self, message: str, cause: Exception):
        super().__init__(message)
        self.cause = cause


StepCallback = Callable[[int, int, NlVarModel], None]


def fit(data: TimeSeriesPanel, shape: ModelShape, config: TrainConfig = TrainConfig(),
        ranges: Sequence[RangeBounds] | None = None,
        on_step: StepCallback | None = None,
        initial: NlVarModel | None = None) -> tuple[NlVarModel, TrainReport]:
    """Train on the first (1 - test_fraction) of ``data``; track train/test MSE per epoch.

    Ranges default to those inferred from the whole panel (a stand-in for a
    known sensor range). ``on_step(epoch, batch, model)`` runs after every
    projected optimizer step.
    """
    if data.role is not Role.OBSERVED:
        raise ValidationError("fit needs an observed panel")
    if data.n_nodes != shape.n_nodes:
        raise ValidationError(f"panel has {data.n_nodes} nodes, shape says {shape.n_nodes}")
    if data.n_steps <= shape.order + 1:
        raise ValidationError(f"need T > P + 1 samples, got T={data.n_steps}")
    if ranges is None:
        ranges = infer_ranges(data, config.margin_fraction)
    train, test = split_panel(data, config.test_fraction, shape.order)

    model = initial if initial is not None else init_model(shape, ranges, config.seed)
    model = project_params(model, config.w_floor)
    windows, targets = lag_windows(train.data, shape.order)
    n_samples = windows.shape[0]

    params = {"var": np.array(model.var.entries), "alpha": np.array(model.stack.alpha),
              "w": np.array(model.stack.w), "k": np.array(model.stack.k)}
    stack = model.stack
    optimizer = make_optimizer(config)
    rng = np.random.Generator(np.random.PCG64(config.seed))
    train_curve, test_curve = [], []

    for epoch in range(config.epochs):
        order = rng.permutation(n_samples)
        for n_batch, start in enumerate(range(0, n_samples, config.batch_size)):
            idx = order[start:start + config.batch_size]
            try:
                y_tilde, y_hat, z_hat, _ = forward_batch(params["var"], stack, windows[idx], targets[idx])
                g = backward_batch(params["var"], stack, targets[idx], y_tilde, y_hat, z_hat)
            except NlVarError as exc:
                raise TrainingError(f"epoch {epoch}, batch {n_batch}: {exc}", exc) from exc
            grads = {"var": g.d_var + penalty_gradient(params["var"], config.l1_weight, config.l2_weight),
                     "alpha": g.d_alpha, "w": g.d_w, "k": g.d_k}
            optimizer.step(params, grads)
            stack = _project_stack(
                stack._replace(alpha=params["alpha"].copy(), w=params["w"].copy(), k=params["k"].copy()),
                config.w_floor)
            params["alpha"][:] = stack.alpha
            params["w"][:] = stack.w
            if on_step is not None:
                on_step(epoch, n_batch, model.replace(var=params["var"].copy(), stack=stack))
        model = model.replace(var=params["var"].copy(), stack=stack)
        try:
            train_curve.append(evaluate_mse(model, train))
            test_curve.append(evaluate_mse(model, test))
        except NlVarError as exc:
            raise TrainingError(f"epoch {epoch}, evaluation: {exc}", exc) from exc
        logger.debug("epoch %d train %.6g test %.6g", epoch, train_curve[-1], test_curve[-1])

    report = TrainReport(
        epochs=config.epochs,
        train_mse=np.array(train_curve),
        test_mse=np.array(test_curve),
        final_model_digest=_digest(model, train_curve, test_curve),
    )
    return model, report


def _digest(model: NlVarModel, train_curve, test_curve) -> dict:
    out = {
        "n_nodes": model.shape.n_nodes,
        "order": model.shape.order,
        "n_units": model.shape.n_units,
        "var_frobenius": float(np.linalg.norm(model.var.entries)),
        "var_max_abs": float(np.abs(model.var.entries).max()),
    }
    if train_curve:
        best = int(np.argmin(test_curve))
        out.update(final_train_mse=train_curve[-1], final_test_mse=test_curve[-1],
                   best_epoch=best, best_test_mse=test_curve[best])
    return out
