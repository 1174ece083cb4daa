"""Seeded synthetic data: stable random VAR, random monotone maps, observed panel."""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .core import (
    ModelShape,
    NlVarModel,
    NodeMap,
    RangeBounds,
    Role,
    TimeSeriesPanel,
    ValidationError,
    VarCoefficients,
)
from .dynamics import DEFAULT_BURN_IN, DEFAULT_TARGET_RADIUS, InnovationSpec, simulate_var, stabilize
from .monotone import _f

DEFAULT_NOISE_STD = 1.0
W_RANGE = (0.5, 2.0)
K_RANGE = (-2.0, 2.0)


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def default_ranges(n_nodes: int, lower: float = -1.0, upper: float = 1.0) -> list[RangeBounds]:
    return [RangeBounds(lower, upper) for _ in range(n_nodes)]


def random_var_coeffs(shape: ModelShape, target_radius: float = DEFAULT_TARGET_RADIUS,
                      seed: int = 0) -> VarCoefficients:
    """Standard normal entries, then rescaled to the requested companion spectral radius."""
    if not 0 < target_radius < 1:
        raise ValidationError("target_radius must lie in (0, 1)")
    raw = _rng(seed).standard_normal((shape.order, shape.n_nodes, shape.n_nodes))
    return stabilize(VarCoefficients(raw), target_radius)


def random_node_maps(shape: ModelShape, ranges: Sequence[RangeBounds], seed: int = 0) -> list[NodeMap]:
    if len(ranges) != shape.n_nodes:
        raise ValidationError(f"need {shape.n_nodes} ranges, got {len(ranges)}")
    rng = _rng(seed)
    maps = []
    for r in ranges:
        raw = rng.uniform(0.0, 1.0, shape.n_units)
        raw = np.where(raw > 0, raw, 1.0)  # uniform(0, 1) can return exactly 0
        alpha = raw * (r.span / raw.sum())
        w = rng.uniform(*W_RANGE, shape.n_units)
        k = rng.uniform(*K_RANGE, shape.n_units)
        maps.append(NodeMap(alpha, w, k, r.lower, r))
    return maps


class SyntheticDataset(NamedTuple):
    ground_truth: NlVarModel
    observed: TimeSeriesPanel
    latent: TimeSeriesPanel


def generate_dataset(shape: ModelShape, target_radius: float = DEFAULT_TARGET_RADIUS,
                     noise_std: float = DEFAULT_NOISE_STD,
                     ranges: Sequence[RangeBounds] | None = None,
                     t_total: int = 1000, seed: int = 0,
                     burn_in: int = DEFAULT_BURN_IN) -> SyntheticDataset:
    """Ground-truth model plus latent and observed panels, z_i[t] = f_i(y_i[t]).

    Each stage draws from its own child of ``seed`` so that changing one stage
    (e.g. the noise level) leaves the others' draws intact.
    """
    if ranges is None:
        ranges = default_ranges(shape.n_nodes)
    var_seed, map_seed, noise_seed = np.random.SeedSequence(seed).generate_state(3)
    var = random_var_coeffs(shape, target_radius, int(var_seed))
    maps = random_node_maps(shape, ranges, int(map_seed))
    model = NlVarModel(shape, var, maps)
    latent = simulate_var(var, InnovationSpec(noise_std, int(noise_seed)), t_total, burn_in)
    s = model.stack
    observed = TimeSeriesPanel(_f(s.alpha, s.w, s.k, s.b, latent.data), Role.OBSERVED)
    return SyntheticDataset(model, observed, latent)
