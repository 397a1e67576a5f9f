"""Episode reward: object-path tracking plus end-effector/object proximity.

Both terms are Euclidean norms over the stacked per-step vectors.  The total
is their weighted sum negated, so 0 is the (unattainable) optimum and the
optimizer maximizes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .library import TaskDescriptor
from .sim import RolloutResult

CALIBRATION_RATIO = 1.5


@dataclass(frozen=True)
class RewardConfig:
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("reward weights a and b must be positive")


@dataclass(frozen=True)
class RewardBreakdown:
    task_distance: float
    push_distance: float
    total: float


def _stacked_norm(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.linalg.norm((x - y).ravel()))


def task_term(target: TaskDescriptor, object_path: np.ndarray) -> float:
    return _stacked_norm(target.object_path, object_path)


def push_term(ee_path: np.ndarray, object_path: np.ndarray) -> float:
    return _stacked_norm(ee_path, object_path)


def accumulated_reward(target: TaskDescriptor, rollout: RolloutResult, config: RewardConfig) -> RewardBreakdown:
    rt = task_term(target, rollout.object_path)
    rp = push_term(rollout.ee_path, rollout.object_path)
    return RewardBreakdown(rt, rp, -(config.a * rt + config.b * rp))


def calibrate_ab(
    sample_rollouts: Sequence[tuple[TaskDescriptor, RolloutResult]],
    ratio: float = CALIBRATION_RATIO,
) -> RewardConfig:
    """Fix a=1 and pick b so that mean(a*r_T) == ratio * mean(b*r_p) on the samples."""
    if not sample_rollouts:
        raise ValueError("calibration needs at least one rollout")
    if not ratio > 0:
        raise ValueError("ratio must be positive")
    rt = np.mean([task_term(t, r.object_path) for t, r in sample_rollouts])
    rp = np.mean([push_term(r.ee_path, r.object_path) for _, r in sample_rollouts])
    if not rp > 0:
        raise ValueError("mean push distance is zero; cannot calibrate")
    return RewardConfig(a=1.0, b=float(rt / (ratio * rp)))
