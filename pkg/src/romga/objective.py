"""Discrepancy measures between predicted and target temperature histories."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import RegionMask, TimeAxis, _frozen_array

# Additive guard in the fitness transform keeps a perfect match finite.
FITNESS_GUARD = 1.0e-12


@dataclass(frozen=True, eq=False)
class Target:
    """Reference field history restricted to an observation mask.

    ``values`` holds one row per masked cell (same order as mask.indices)
    and one column per sampling instant.
    """

    values: np.ndarray
    mask: RegionMask
    times: TimeAxis

    def __post_init__(self) -> None:
        vals = _frozen_array(self.values, (self.mask.n_cells, self.times.n_steps))
        if not np.isfinite(vals).all():
            raise ValueError("target values must all be finite")
        object.__setattr__(self, "values", vals)


def cost(predicted: np.ndarray, target: Target) -> float:
    """Time-averaged, area-weighted squared mismatch over the mask.

    cost = (1 / n_steps) * sum over instants and masked cells of
    weight_j * (predicted[j, l] - target[j, l])**2. Zero if and only if the
    restrictions coincide.
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    if predicted.shape != target.values.shape:
        raise ValueError(
            f"predicted restriction must be {target.values.shape}, got {predicted.shape}"
        )
    diff = predicted - target.values
    weighted = (diff * diff) * target.mask.weights[:, None]
    return float(weighted.sum() / target.times.n_steps)


def fitness(cost_value: float) -> float:
    """Monotone map from cost to selection fitness: 1 / (cost + guard)."""
    if cost_value < 0.0:
        raise ValueError("cost must be nonnegative")
    return 1.0 / (cost_value + FITNESS_GUARD)


def l2_error_series(predicted: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Per-instant L2 percentage error over the full field.

    e[l] = 100 * ||predicted[:, l] - target[:, l]|| / ||target[:, l]||.
    Raises ValueError when shapes differ or a target column has zero norm.
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if predicted.shape != target.shape or predicted.ndim != 2:
        raise ValueError("predicted and target must share a 2D shape")
    denom = np.linalg.norm(target, axis=0)
    if np.any(denom == 0.0):
        raise ValueError("target columns must have nonzero norm")
    return 100.0 * np.linalg.norm(predicted - target, axis=0) / denom
