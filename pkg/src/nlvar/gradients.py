"""Backpropagation through the inverse-map / VAR / forward-map prediction.

For a window z[t-1..t-P] and target z[t], with S_n = 2 (z_hat_n - z_n):

    dC/da[p, i, j] = S_i f_i'(y_hat_i) y_tilde_j[t-p]
    dC/dtheta_i    = S_i df_i/dtheta(y_hat_i)
                     + sum_n S_n f_n'(y_hat_n) sum_p a[p, n, i] dg_i/dtheta(z_i[t-p])

and dg/dtheta comes from implicit differentiation of f(g(z; theta); theta) = z,
evaluated at the inverted point y_tilde that the forward pass already found.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ForwardTrace, InversionError, MapStack, NlVarModel, ValidationError
from .forward import forward_batch, forward_trace
from .monotone import (
    DEFAULT_TOL,
    FPRIME_FLOOR,
    NearSingularInverseError,
    ThetaGradient,
    _f_prime,
    _grad_f,
)


@dataclass(frozen=True)
class ModelGradient:
    """Gradient of a cost w.r.t. the VAR tensor (P, N, N) and the stacked map parameters."""

    d_var: np.ndarray
    d_alpha: np.ndarray  # (N, M)
    d_w: np.ndarray
    d_k: np.ndarray
    d_b: np.ndarray  # (N,)

    @property
    def d_theta(self) -> list[ThetaGradient]:
        return [ThetaGradient(self.d_alpha[i], self.d_w[i], self.d_k[i], float(self.d_b[i]))
                for i in range(len(self.d_b))]

    def blocks(self) -> dict[str, np.ndarray]:
        return {"var": self.d_var, "alpha": self.d_alpha, "w": self.d_w,
                "k": self.d_k, "b": self.d_b}


def backward_batch(var: np.ndarray, stack: MapStack, targets: np.ndarray,
                   y_tilde: np.ndarray, y_hat: np.ndarray, z_hat: np.ndarray) -> ModelGradient:
    """Mean gradient over a batch given the forward quantities.

    Shapes: targets/y_hat/z_hat (B, N), y_tilde (B, P, N).
    """
    alpha, w, k = stack.alpha, stack.w, stack.k
    n_batch = targets.shape[0]
    s = 2.0 * (z_hat - targets)
    c = s * _f_prime(alpha, w, k, y_hat)
    d_var = np.einsum("bi,bpj->pij", c, y_tilde) / n_batch

    # direct term: S_i df_i/dtheta at the latent prediction
    fa, fw, fk, fb = _grad_f(alpha, w, k, y_hat)
    sd = s[..., None]
    d_alpha = (sd * fa).sum(0)
    d_w = (sd * fw).sum(0)
    d_k = (sd * fk).sum(0)
    d_b = (s * fb).sum(0)

    # coupled term through the inverted history
    fp_tilde = _f_prime(alpha, w, k, y_tilde)
    if np.any(fp_tilde < FPRIME_FLOOR):
        raise NearSingularInverseError(
            f"f'(y*) = {fp_tilde.min():.3e} below {FPRIME_FLOOR:g} in the inverted window")
    coupling = np.einsum("bn,pni->bpi", c, var) / fp_tilde  # includes 1/f'(y*)
    ga, gw, gk, gb = _grad_f(alpha, w, k, y_tilde)
    cd = coupling[..., None]
    d_alpha -= (cd * ga).sum((0, 1))
    d_w -= (cd * gw).sum((0, 1))
    d_k -= (cd * gk).sum((0, 1))
    d_b -= (coupling * gb).sum((0, 1))

    return ModelGradient(d_var, d_alpha / n_batch, d_w / n_batch, d_k / n_batch, d_b / n_batch)


def grad_timestep(model: NlVarModel, window, target, trace: ForwardTrace | None = None,
                  tol: float = DEFAULT_TOL) -> ModelGradient:
    """Gradient of C[t] for one window; reuses ``trace`` from :func:`forward_trace` if given."""
    if trace is None:
        trace, _ = forward_trace(model, window, target, tol)
    target = np.asarray(target, dtype=float).reshape(1, -1)
    return backward_batch(model.var.entries, model.stack, target,
                          trace.y_tilde[None], trace.y_hat[None], trace.z_hat[None])


def grad_batch(model: NlVarModel, windows: np.ndarray, targets: np.ndarray,
               tol: float = DEFAULT_TOL) -> ModelGradient:
    """Arithmetic mean of the per-timestep gradients over a non-empty batch."""
    windows = np.asarray(windows, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if windows.ndim != 3 or windows.shape[0] == 0:
        raise ValidationError("batch must be a non-empty (B, P, N) array of windows")
    if targets.shape != (windows.shape[0], windows.shape[2]):
        raise ValidationError(f"targets must have shape {(windows.shape[0], windows.shape[2])}")
    var = model.var.entries
    y_tilde, y_hat, z_hat, _ = forward_batch(var, model.stack, windows, targets, tol)
    return backward_batch(var, model.stack, targets, y_tilde, y_hat, z_hat)


def _cost(var, stack, window, target, tol):
    return forward_batch(var, stack, window[None], target[None], tol)[3][0]


def fd_gradient(model: NlVarModel, window, target, step: float = 1e-6,
                tol: float = DEFAULT_TOL, dtype=np.longdouble) -> ModelGradient:
    """Central finite differences of C[t] in every parameter, one at a time.

    Perturbed maps are not re-projected, so this differentiates the
    unconstrained cost, which is what the analytic gradient computes.

    The cost is evaluated in ``dtype`` (extended precision by default): in
    float64 the rounding noise of C divided by 2*step is ~1e-10, which swamps
    small gradient components at a 1e-5 relative tolerance.
    """
    if step <= 0:
        raise ValidationError("step must be positive")
    window = np.asarray(window, dtype=dtype)
    target = np.asarray(target, dtype=dtype)
    var = np.asarray(model.var.entries, dtype=dtype)
    base = MapStack(*(np.asarray(a, dtype=dtype) for a in model.stack))
    params = {"alpha": base.alpha, "w": base.w, "k": base.k, "b": base.b}
    h = dtype(step)
    out = {}

    def cost_at(v, overrides):
        try:
            return _cost(v, base._replace(**overrides), window, target, tol)
        except InversionError as exc:
            raise InversionError(f"{exc} (finite-difference step {step:g} may be too large)") from exc

    grad = np.zeros(var.shape)
    for idx in np.ndindex(var.shape):
        vp, vm = var.copy(), var.copy()
        vp[idx] += h
        vm[idx] -= h
        grad[idx] = (cost_at(vp, {}) - cost_at(vm, {})) / (2 * h)
    out["d_var"] = grad

    for name, value in params.items():
        grad = np.zeros(value.shape)
        for idx in np.ndindex(value.shape):
            xp, xm = value.copy(), value.copy()
            xp[idx] += h
            xm[idx] -= h
            grad[idx] = (cost_at(var, {name: xp}) - cost_at(var, {name: xm})) / (2 * h)
        out["d_" + name] = grad
    return ModelGradient(**out)


def relative_error(a, b, floor: float = 1e-8) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def compare_gradients(analytic: ModelGradient, numeric: ModelGradient,
                      floor: float = 1e-8) -> dict[str, float]:
    """Max relative error per parameter block."""
    na = numeric.blocks()
    return {name: float(np.max(relative_error(g, na[name], floor), initial=0.0))
            for name, g in analytic.blocks().items()}


def mean_gradient(grads: Sequence[ModelGradient]) -> ModelGradient:
    if not grads:
        raise ValidationError("cannot average an empty list of gradients")
    return ModelGradient(*(np.mean([getattr(g, f) for g in grads], axis=0)
                           for f in ("d_var", "d_alpha", "d_w", "d_k", "d_b")))
