"""Per-node monotone sigmoid-mixture maps, their numerical inverse and gradients.

Every kernel here broadcasts: parameters may be a single node (alpha of shape
(M,), scalar b) or a stack of nodes (alpha of shape (N, M), b of shape (N,)),
and the trailing axis of ``y``/``z`` must then line up with the node axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .core import (
    InversionError,
    MapStack,
    NearSingularInverseError,
    NodeMap,
    NonMonotoneMapError,
)

DEFAULT_TOL = 1e-10
CLAMP_MARGIN = 1e-9
MAX_DOUBLINGS = 64
MAX_BISECTIONS = 200
FPRIME_FLOOR = 1e-12


@dataclass(frozen=True)
class ThetaGradient:
    """Derivative of a scalar with respect to (alpha, w, k, b) of one node."""

    d_alpha: np.ndarray
    d_w: np.ndarray
    d_k: np.ndarray
    d_b: float | np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.d_alpha, self.d_w, self.d_k, np.atleast_1d(self.d_b)])


def _real(x) -> np.ndarray:
    # float64 unless the caller works in extended precision
    x = np.asarray(x)
    return x.astype(np.result_type(x.dtype, np.float64), copy=False)


def sigmoid(x):
    """Logistic function; scipy's expit saturates to 0/1 without overflow."""
    out = expit(_real(x))
    return out[()] if out.ndim == 0 else out


def _params(m):
    return m.alpha, m.w, m.k, m.b


def _bounds(m):
    if isinstance(m, NodeMap):
        return m.bounds.lower, m.bounds.upper
    return m.lower, m.upper


def _pre(w, k, y):
    return w * np.expand_dims(y, -1) - k


def _f(alpha, w, k, b, y):
    return np.sum(alpha * sigmoid(_pre(w, k, y)), axis=-1) + b


def _f_prime(alpha, w, k, y):
    s = sigmoid(_pre(w, k, y))
    return np.sum(alpha * w * s * (1.0 - s), axis=-1)


def _grad_f(alpha, w, k, y):
    s = sigmoid(_pre(w, k, y))
    ds = s * (1.0 - s)
    y = _real(y)
    d_alpha = s
    d_w = alpha * np.expand_dims(y, -1) * ds
    d_k = -alpha * ds
    d_b = np.ones(y.shape)
    return d_alpha, d_w, d_k, d_b


def _scalar(x):
    x = np.asarray(x)
    return x[()] if x.ndim == 0 else x


def eval_f(m: NodeMap | MapStack, y):
    alpha, w, k, b = _params(m)
    return _scalar(_f(alpha, w, k, b, y))


def eval_f_prime(m: NodeMap | MapStack, y):
    alpha, w, k, _ = _params(m)
    return _scalar(_f_prime(alpha, w, k, y))


def grad_f_theta(m: NodeMap | MapStack, y) -> ThetaGradient:
    alpha, w, k, _ = _params(m)
    d_alpha, d_w, d_k, d_b = _grad_f(alpha, w, k, y)
    return ThetaGradient(d_alpha, d_w, d_k, _scalar(d_b))


def clamp_target(m: NodeMap | MapStack, z, clamp_margin: float = CLAMP_MARGIN):
    """Pull ``z`` into [lower + d, upper - d], d = clamp_margin * span.

    Returns the clamped values and a boolean mask of the entries that moved.
    """
    lower, upper = _bounds(m)
    delta = clamp_margin * (np.asarray(upper) - np.asarray(lower))
    z = _real(z)
    zc = np.clip(z, lower + delta, upper - delta)
    return zc, zc != z


def clamp_count(m: NodeMap | MapStack, z, clamp_margin: float = CLAMP_MARGIN) -> int:
    """Number of targets that inversion would clamp into the image interval."""
    return int(np.count_nonzero(clamp_target(m, z, clamp_margin)[1]))


def _invert(alpha, w, k, b, lower, upper, z, tol, clamp_margin):
    if np.any(np.sum(alpha * w, axis=-1) <= 0):
        raise NonMonotoneMapError("map is flat (all alpha_j * w_j == 0); it has no inverse")
    span = np.asarray(upper) - np.asarray(lower)
    delta = clamp_margin * span
    zc = np.clip(_real(z), lower + delta, upper - delta)

    shape = np.broadcast_shapes(zc.shape, np.shape(b))
    zc = np.broadcast_to(zc, shape)
    dtype = np.result_type(zc, alpha, w, k, b)
    eps = np.finfo(dtype).eps
    lo = np.full(shape, -1.0, dtype=dtype)
    hi = np.full(shape, 1.0, dtype=dtype)
    for n_doubled in range(MAX_DOUBLINGS + 1):
        bad = (_f(alpha, w, k, b, lo) >= zc) | (_f(alpha, w, k, b, hi) <= zc)
        if not bad.any():
            break
        if n_doubled == MAX_DOUBLINGS:
            idx = np.argwhere(bad)[0]
            raise InversionError(
                f"could not bracket target {zc[tuple(idx)]!r} at index {tuple(idx)} "
                f"after {MAX_DOUBLINGS} doublings")
        lo = np.where(bad, 2.0 * lo, lo)
        hi = np.where(bad, 2.0 * hi, hi)

    # bisect to floating-point resolution (finite-difference checks need it);
    # converged entries are frozen so each result is independent of the batch
    active = np.ones(shape, dtype=bool)
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        fm = _f(alpha, w, k, b, mid)
        hit = fm == zc
        right = fm < zc
        lo = np.where(active & (hit | right), mid, lo)
        hi = np.where(active & (hit | ~right), mid, hi)
        active &= hi - lo > np.maximum(eps * np.maximum(abs(lo), abs(hi)), 0.01 * eps)
        if not active.any():
            break
    y = 0.5 * (lo + hi)

    resid = np.abs(_f(alpha, w, k, b, y) - zc)
    bad = resid > tol * np.broadcast_to(span, shape)
    if bad.any():
        idx = np.argwhere(bad)[0] if bad.ndim else ()
        raise InversionError(
            f"inverse residual {resid[tuple(idx)]:.3e} exceeds tolerance at index {tuple(idx)}")
    return y


def eval_g(m: NodeMap | MapStack, z, tol: float = DEFAULT_TOL,
           clamp_margin: float = CLAMP_MARGIN):
    """Numerical inverse of the map by bracket expansion plus bisection.

    Targets outside the open image interval are clamped to within
    ``clamp_margin * span`` of the boundary first, so the call never fails on
    noisy data at the edge of the sensor range.
    """
    alpha, w, k, b = _params(m)
    lower, upper = _bounds(m)
    return _scalar(_invert(alpha, w, k, b, lower, upper, z, tol, clamp_margin))


def grad_g_from_root(m: NodeMap | MapStack, y_star) -> ThetaGradient:
    """Implicit gradient of the inverse, given the already inverted point y*."""
    alpha, w, k, _ = _params(m)
    fp = _f_prime(alpha, w, k, y_star)
    if np.any(fp < FPRIME_FLOOR):
        raise NearSingularInverseError(
            f"f'(y*) = {np.min(fp):.3e} is below {FPRIME_FLOOR:g}; inverse is near singular")
    d_alpha, d_w, d_k, d_b = _grad_f(alpha, w, k, y_star)
    scale = -1.0 / fp
    s = np.expand_dims(scale, -1)
    return ThetaGradient(d_alpha * s, d_w * s, d_k * s, _scalar(d_b * scale))


def grad_g_theta(m: NodeMap | MapStack, z, tol: float = DEFAULT_TOL) -> ThetaGradient:
    """d g(z; theta) / d theta = -grad_theta f(y*) / f'(y*) with y* = g(z)."""
    return grad_g_from_root(m, eval_g(m, z, tol))
