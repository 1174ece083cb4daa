"""End-to-end experiments shared by the CLI, scripts/ and the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .baseline import evaluate_linear, fit_ols
from .core import ModelShape, NlVarModel, RangeBounds, TrainReport, VarCoefficients
from .forward import evaluate_mse
from .gradients import compare_gradients, fd_gradient, grad_timestep
from .monotone import _f
from .synthetic import generate_dataset, random_node_maps
from .training import TrainConfig, fit, split_panel

GRADCHECK_TOL = 1e-5


def random_gradcheck_instance(rng: np.random.Generator, max_nodes: int = 4, max_order: int = 3,
                              max_units: int = 5):
    """A random strictly feasible model with a window and target inside its image."""
    n = int(rng.integers(1, max_nodes + 1))
    p = int(rng.integers(1, max_order + 1))
    m = int(rng.integers(1, max_units + 1))
    shape = ModelShape(n, p, m)
    lower = rng.uniform(-2.0, 0.0, n)
    span = rng.uniform(0.5, 3.0, n)
    ranges = [RangeBounds(lo, lo + s) for lo, s in zip(lower, span)]
    maps = random_node_maps(shape, ranges, int(rng.integers(2**31)))
    var = VarCoefficients(0.4 * rng.standard_normal((p, n, n)))
    model = NlVarModel(shape, var, maps)
    s = model.stack
    window = _f(s.alpha, s.w, s.k, s.b, rng.uniform(-3.0, 3.0, (p, n)))
    target = _f(s.alpha, s.w, s.k, s.b, rng.uniform(-3.0, 3.0, n))
    return model, window, target


def gradient_check(seed: int = 0, instances: int = 20, max_nodes: int = 4, max_order: int = 3,
                   max_units: int = 5, step: float = 1e-6, corrupt: float = 0.0) -> dict[str, float]:
    """Worst relative error per parameter block, analytic vs central differences.

    ``corrupt`` adds a relative perturbation to the analytic VAR gradient; it
    exists only so the failure path of the check can itself be tested.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    worst: dict[str, float] = {}
    for _ in range(instances):
        model, window, target = random_gradcheck_instance(rng, max_nodes, max_order, max_units)
        analytic = grad_timestep(model, window, target)
        if corrupt:
            analytic = type(analytic)(analytic.d_var * (1 + corrupt), analytic.d_alpha,
                                      analytic.d_w, analytic.d_k, analytic.d_b)
        errors = compare_gradients(analytic, fd_gradient(model, window, target, step))
        for name, err in errors.items():
            worst[name] = max(worst.get(name, 0.0), err)
    return worst


@dataclass
class LinearComparison:
    seed: int
    report: TrainReport
    linear_train_mse: float
    linear_test_mse: float
    truth_test_mse: float
    model: NlVarModel = field(repr=False)
    linear: VarCoefficients = field(repr=False)

    @property
    def improvement(self) -> float:
        """Relative reduction of the best nonlinear test MSE below the linear one."""
        return 1.0 - self.report.best_test_mse / self.linear_test_mse


def run_linear_comparison(seed: int, n_nodes: int = 10, generator_order: int = 2,
                          t_total: int = 1000, noise_std: float = 1.0,
                          target_radius: float = 0.95, order: int = 3, n_units: int = 5,
                          config: TrainConfig | None = None, ridge: float = 1e-8) -> LinearComparison:
    """Nonlinear estimator vs OLS linear VAR on the same chronological split."""
    config = config or TrainConfig(seed=seed)
    data = generate_dataset(ModelShape(n_nodes, generator_order, n_units), target_radius,
                            noise_std, t_total=t_total, seed=seed)
    model, report = fit(data.observed, ModelShape(n_nodes, order, n_units), config)
    train, test = split_panel(data.observed, config.test_fraction, order)
    linear = fit_ols(train, order, ridge)
    return LinearComparison(
        seed=seed,
        report=report,
        linear_train_mse=evaluate_linear(linear, train),
        linear_test_mse=evaluate_linear(linear, test),
        truth_test_mse=evaluate_mse(data.ground_truth, test),
        model=model,
        linear=linear,
    )


@dataclass
class NoiseFloorRun:
    seed: int
    report: TrainReport
    truth_test_mse: float
    model: NlVarModel = field(repr=False)

    @property
    def ratio(self) -> float:
        return self.report.test_mse[-1] / self.truth_test_mse


def run_noise_floor(seed: int, n_nodes: int = 3, order: int = 2, n_units: int = 5,
                    noise_std: float = 0.05, t_total: int = 2000,
                    config: TrainConfig | None = None) -> NoiseFloorRun:
    """Train the correctly specified model class on data from a known model.

    The test curve flattens within ~100 epochs at this size, so the default
    run stops at 150 to stay within a few minutes for three seeds.
    """
    config = config or TrainConfig(epochs=150, seed=seed)
    shape = ModelShape(n_nodes, order, n_units)
    data = generate_dataset(shape, noise_std=noise_std, t_total=t_total, seed=seed)
    model, report = fit(data.observed, shape, config)
    _, test = split_panel(data.observed, config.test_fraction, order)
    return NoiseFloorRun(seed, report, evaluate_mse(data.ground_truth, test), model)
