"""Latent linear VAR: one-step prediction, simulation and stability control."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Role, TimeSeriesPanel, ValidationError, VarCoefficients

DEFAULT_TARGET_RADIUS = 0.95
DEFAULT_BURN_IN = 200


@dataclass(frozen=True)
class InnovationSpec:
    std_dev: float
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.std_dev) or self.std_dev < 0:
            raise ValidationError(f"std_dev must be finite and >= 0, got {self.std_dev}")


def _entries(var) -> np.ndarray:
    return var.entries if isinstance(var, VarCoefficients) else np.asarray(var, dtype=float)


def predict_latent(var: VarCoefficients, history: np.ndarray) -> np.ndarray:
    """y_hat_i = sum_p sum_j a[p, i, j] * history[p, j]; history row p holds y[t-p-1].

    ``history`` may carry leading batch axes, i.e. shape (..., P, N).
    """
    a = _entries(var)
    history = np.asarray(history, dtype=float)
    if history.shape[-2:] != (a.shape[0], a.shape[2]):
        raise ValidationError(
            f"history shape {history.shape[-2:]} does not match VAR (P={a.shape[0]}, N={a.shape[2]})")
    return np.einsum("pij,...pj->...i", a, history)


def companion_matrix(var: VarCoefficients) -> np.ndarray:
    a = _entries(var)
    p, n, _ = a.shape
    c = np.zeros((n * p, n * p))
    c[:n, :] = np.concatenate(list(a), axis=1)
    c[n:, :-n] = np.eye(n * (p - 1))
    return c


def companion_spectral_radius(var: VarCoefficients, max_iter: int = 1000,
                              rtol: float = 1e-12) -> float:
    """Spectral radius of the companion matrix via the power method on C^(2^k).

    Repeated squaring with renormalisation tracks log ||C^(2^k)|| / 2^k, which
    converges to log(rho) by Gelfand's formula. Unlike the vector power method
    this does not stall when the dominant eigenvalues are a complex pair or of
    equal modulus, and it is deterministic.
    """
    c = companion_matrix(var)
    norm = np.linalg.norm(c)
    if norm == 0.0:
        return 0.0
    b = c / norm
    log_norm = math.log(norm)  # log ||C^(2^k)||, k = 0
    power = 1
    estimate = math.exp(log_norm)
    for _ in range(max_iter):
        b = b @ b
        s = np.linalg.norm(b)
        if s == 0.0 or not np.isfinite(s):
            return 0.0
        b /= s
        log_norm = 2.0 * log_norm + math.log(s)
        power *= 2
        new = math.exp(log_norm / power)
        if abs(new - estimate) <= rtol * new:
            return new
        estimate = new
    return estimate


def stabilize(var: VarCoefficients, target_radius: float = DEFAULT_TARGET_RADIUS) -> VarCoefficients:
    """Scale lag p by (target/rho)^p so every companion eigenvalue scales by target/rho."""
    if not 0 < target_radius < 1:
        raise ValidationError("target_radius must lie in (0, 1)")
    rho = companion_spectral_radius(var)
    if rho == 0.0:
        return var if isinstance(var, VarCoefficients) else VarCoefficients(var)
    a = _entries(var)
    lags = np.arange(1, a.shape[0] + 1)
    return VarCoefficients(a * ((target_radius / rho) ** lags)[:, None, None])


def simulate_var(var: VarCoefficients, innovation: InnovationSpec, t_total: int,
                 burn_in: int = DEFAULT_BURN_IN, initial: np.ndarray | None = None) -> TimeSeriesPanel:
    """Simulate y[t] = sum_p A_p y[t-p] + u[t] with i.i.d. Gaussian u.

    The first P samples are pure innovations unless ``initial`` (P x N, oldest
    first) is given; the leading ``burn_in`` samples of the series, initial
    ones included, are dropped. Draws come from
    numpy's PCG64 generator seeded with ``innovation.seed``.
    """
    var = var if isinstance(var, VarCoefficients) else VarCoefficients(var)
    if t_total < 1 or burn_in < 0:
        raise ValidationError("t_total must be >= 1 and burn_in >= 0")
    rho = companion_spectral_radius(var)
    if rho >= 1.0:
        raise ValidationError(f"VAR is not stable (companion spectral radius {rho:.6g} >= 1)")
    a = var.entries
    p, n, _ = a.shape
    total = max(burn_in + t_total, p)
    rng = np.random.Generator(np.random.PCG64(innovation.seed))
    u = innovation.std_dev * rng.standard_normal((total, n))
    y = np.empty((total, n))
    if initial is None:
        y[:p] = u[:p]
    else:
        initial = np.asarray(initial, dtype=float)
        if initial.shape != (p, n):
            raise ValidationError(f"initial state must have shape {(p, n)}")
        y[:p] = initial
    for t in range(p, total):
        y[t] = np.einsum("pij,pj->i", a, y[t - p:t][::-1]) + u[t]
    return TimeSeriesPanel(y[burn_in:burn_in + t_total], Role.LATENT)
