"""Shared value types, exceptions and range inference."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np


class NlVarError(Exception):
    """Base class for all package errors."""


class ValidationError(NlVarError, ValueError):
    """Bad shapes, bad values or violated model constraints."""


class NumericalError(NlVarError, ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class InversionError(NumericalError):
    pass


class NonMonotoneMapError(ValidationError):
    pass


class NearSingularInverseError(NumericalError):
    pass


class RankDeficiencyError(NumericalError):
    pass


class Role(str, enum.Enum):
    OBSERVED = "observed"
    LATENT = "latent"


@dataclass(frozen=True)
class ModelShape:
    n_nodes: int
    order: int
    n_units: int

    def __post_init__(self):
        for name in ("n_nodes", "order", "n_units"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))


@dataclass(frozen=True)
class VarCoefficients:
    """Lag tensor of shape (order, n_nodes, n_nodes); entry [p, i, j] weighs y_j[t-p-1] in y_i[t]."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 3 or a.shape[1] != a.shape[2]:
            raise ValidationError(f"VAR tensor must have shape (P, N, N), got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValidationError("VAR tensor contains non-finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.entries.shape[1]

    @classmethod
    def zeros(cls, order: int, n_nodes: int) -> "VarCoefficients":
        return cls(np.zeros((order, n_nodes, n_nodes)))


@dataclass(frozen=True)
class RangeBounds:
    lower: float
    upper: float

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
            raise ValidationError(f"invalid range ({lo}, {hi}): need finite lower < upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def span(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class NodeMap:
    """Parameters of one node's map f(y) = sum_j alpha_j * sigmoid(w_j * y - k_j) + b.

    Construction only checks shapes and finiteness; feasibility is reported by
    :meth:`violations` so that perturbed (slightly infeasible) maps stay usable
    for finite differences.
    """

    alpha: np.ndarray
    w: np.ndarray
    k: np.ndarray
    b: float
    bounds: RangeBounds

    def __post_init__(self):
        arrays = []
        for name in ("alpha", "w", "k"):
            v = np.array(getattr(self, name), dtype=float).reshape(-1)
            if not np.all(np.isfinite(v)):
                raise ValidationError(f"{name} contains non-finite entries")
            v.setflags(write=False)
            arrays.append(v)
            object.__setattr__(self, name, v)
        if not arrays[0].shape == arrays[1].shape == arrays[2].shape or arrays[0].size == 0:
            raise ValidationError("alpha, w and k must be non-empty and of equal length")
        b = float(self.b)
        if not np.isfinite(b):
            raise ValidationError("b must be finite")
        object.__setattr__(self, "b", b)

    @property
    def n_units(self) -> int:
        return self.alpha.size

    def violations(self, tol: float = 1e-12) -> list[str]:
        """Names of violated constraints; tolerances are relative to the range span."""
        span = self.bounds.span
        out = []
        if np.any(self.alpha < -tol * span):
            out.append("alpha >= 0")
        if np.any(self.w <= 0):
            out.append("w > 0")
        if abs(self.alpha.sum() - span) > tol * span:
            out.append("sum(alpha) == upper - lower")
        if abs(self.b - self.bounds.lower) > tol * span:
            out.append("b == lower")
        return out


class MapStack(NamedTuple):
    """Node maps stacked into arrays: alpha/w/k are (N, M); b/lower/upper are (N,)."""

    alpha: np.ndarray
    w: np.ndarray
    k: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def stack_maps(maps: Sequence[NodeMap]) -> MapStack:
    return MapStack(
        alpha=np.stack([m.alpha for m in maps]),
        w=np.stack([m.w for m in maps]),
        k=np.stack([m.k for m in maps]),
        b=np.array([m.b for m in maps]),
        lower=np.array([m.bounds.lower for m in maps]),
        upper=np.array([m.bounds.upper for m in maps]),
    )


def unstack_maps(stack: MapStack) -> tuple[NodeMap, ...]:
    return tuple(
        NodeMap(stack.alpha[i], stack.w[i], stack.k[i], stack.b[i],
                RangeBounds(stack.lower[i], stack.upper[i]))
        for i in range(len(stack.b))
    )


@dataclass(frozen=True)
class NlVarModel:
    shape: ModelShape
    var: VarCoefficients
    maps: tuple[NodeMap, ...]

    def __post_init__(self):
        maps = tuple(self.maps)
        object.__setattr__(self, "maps", maps)
        s = self.shape
        if len(maps) != s.n_nodes:
            raise ValidationError(f"expected {s.n_nodes} node maps, got {len(maps)}")
        if self.var.entries.shape != (s.order, s.n_nodes, s.n_nodes):
            raise ValidationError(
                f"VAR tensor shape {self.var.entries.shape} does not match {s}")
        for i, m in enumerate(maps):
            if m.n_units != s.n_units:
                raise ValidationError(f"node {i} has {m.n_units} units, expected {s.n_units}")

    @cached_property
    def stack(self) -> MapStack:
        return stack_maps(self.maps)

    @property
    def ranges(self) -> list[RangeBounds]:
        return [m.bounds for m in self.maps]

    def violations(self, tol: float = 1e-12) -> list[str]:
        return [f"node {i}: {v}" for i, m in enumerate(self.maps) for v in m.violations(tol)]

    def replace(self, *, var: np.ndarray | None = None, stack: MapStack | None = None) -> "NlVarModel":
        return NlVarModel(
            self.shape,
            self.var if var is None else VarCoefficients(var),
            self.maps if stack is None else unstack_maps(stack),
        )


@dataclass(frozen=True)
class TimeSeriesPanel:
    data: np.ndarray
    role: Role = Role.OBSERVED

    def __post_init__(self):
        d = np.array(self.data, dtype=float)
        if d.ndim == 1:
            d = d[:, None]
        if d.ndim != 2 or d.shape[0] < 1 or d.shape[1] < 1:
            raise ValidationError(f"panel must be a non-empty T x N matrix, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            t, n = np.argwhere(~np.isfinite(d))[0]
            raise ValidationError(f"panel has a non-finite value at t={t}, node {n}")
        d.setflags(write=False)
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "role", Role(self.role))

    @property
    def n_steps(self) -> int:
        return self.data.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ForwardTrace:
    y_tilde: np.ndarray  # (P, N) inverse-mapped window
    y_hat: np.ndarray  # (N,) latent prediction
    z_hat: np.ndarray  # (N,) observed prediction


@dataclass(frozen=True)
class TrainReport:
    epochs: int
    train_mse: np.ndarray
    test_mse: np.ndarray
    final_model_digest: dict = field(default_factory=dict)

    @property
    def best_epoch(self) -> int:
        return int(np.argmin(self.test_mse)) if self.epochs else -1

    @property
    def best_test_mse(self) -> float:
        return float(np.min(self.test_mse)) if self.epochs else float("nan")


def infer_ranges(panel: TimeSeriesPanel, margin_fraction: float = 0.05) -> list[RangeBounds]:
    """Per-node (min - m*span, max + m*span); zero-span columns use span 1."""
    if panel.role is not Role.OBSERVED:
        raise ValidationError("ranges are inferred from observed panels only")
    if margin_fraction < 0:
        raise ValidationError("margin_fraction must be non-negative")
    if panel.n_steps < 2:
        raise ValidationError("need at least two samples to infer ranges")
    lo = panel.data.min(axis=0)
    hi = panel.data.max(axis=0)
    span = hi - lo
    flat = span <= 0
    pad = margin_fraction * np.where(flat, 1.0, span)
    # a zero (or sub-ulp) margin on a constant column would leave an empty interval
    pad = np.where(flat & (lo - pad >= hi + pad), 0.5, pad)
    return [RangeBounds(l - p, h + p) for l, h, p in zip(lo, hi, pad)]
