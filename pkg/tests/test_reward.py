import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skill_transfer.library import TaskDescriptor
from skill_transfer.reward import (
    RewardConfig,
    accumulated_reward,
    calibrate_ab,
    push_term,
    task_term,
)
from skill_transfer.sim import RolloutResult


def direct_norm(x, y):
    total = 0.0
    for row_x, row_y in zip(x, y):
        for a, b in zip(row_x, row_y):
            total += (a - b) ** 2
    return math.sqrt(total)


def fake_rollout(ee, obj):
    return RolloutResult(np.asarray(ee, float), np.asarray(obj, float), np.zeros((len(ee), 3)))


def test_task_term_closed_forms():
    path = np.random.default_rng(0).normal(size=(1250, 2))
    target = TaskDescriptor(path)
    assert task_term(target, path) == 0.0
    assert task_term(target, path + [0.1, 0.0]) == pytest.approx(0.1 * math.sqrt(1250), abs=1e-12)


def test_push_term_closed_forms():
    obj = np.random.default_rng(1).normal(size=(1250, 2))
    assert push_term(obj, obj) == 0.0
    angles = np.random.default_rng(2).uniform(0, 2 * np.pi, 1250)
    ee = obj + 0.07 * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    assert push_term(ee, obj) == pytest.approx(0.07 * math.sqrt(1250), abs=1e-12)


def test_terms_against_direct_sum():
    rng = np.random.default_rng(3)
    a, b, c = (rng.normal(size=(300, 2)) for _ in range(3))
    assert task_term(TaskDescriptor(a), b) == pytest.approx(direct_norm(a, b), abs=1e-12)
    assert push_term(c, b) == pytest.approx(direct_norm(c, b), abs=1e-12)


def test_shape_mismatch():
    with pytest.raises(ValueError):
        task_term(TaskDescriptor(np.zeros((10, 2))), np.zeros((11, 2)))
    with pytest.raises(ValueError):
        push_term(np.zeros((10, 2)), np.zeros((10, 3)))


def test_accumulated_reward_composition():
    rng = np.random.default_rng(4)
    target, ee, obj = (rng.normal(size=(100, 2)) for _ in range(3))
    got = accumulated_reward(TaskDescriptor(target), fake_rollout(ee, obj), RewardConfig(1.0, 0.7))
    expected = -(direct_norm(target, obj) + 0.7 * direct_norm(ee, obj))
    assert got.total == pytest.approx(expected, abs=1e-12)
    assert got.task_distance == pytest.approx(direct_norm(target, obj), abs=1e-12)


def test_accumulated_reward_optimum():
    path = np.ones((20, 2))
    got = accumulated_reward(TaskDescriptor(path), fake_rollout(path, path), RewardConfig())
    assert got.total == 0.0


def test_reward_config_positive():
    with pytest.raises(ValueError):
        RewardConfig(0.0, 1.0)
    with pytest.raises(ValueError):
        RewardConfig(1.0, -1.0)


@settings(max_examples=50)
@given(st.integers(0, 2**31 - 1), st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_reward_never_positive(seed, a, b):
    rng = np.random.default_rng(seed)
    target, ee, obj = (rng.normal(size=(30, 2)) for _ in range(3))
    assert accumulated_reward(TaskDescriptor(target), fake_rollout(ee, obj), RewardConfig(a, b)).total <= 0


@given(st.integers(0, 2**31 - 1), st.floats(-10, 10), st.floats(-10, 10))
def test_task_term_translation(seed, dx, dy):
    rng = np.random.default_rng(seed)
    target, obj = rng.normal(size=(30, 2)), rng.normal(size=(30, 2))
    base = task_term(TaskDescriptor(target), obj)
    shifted = task_term(TaskDescriptor(target + [dx, dy]), obj + [dx, dy])
    assert shifted == pytest.approx(base, rel=1e-9, abs=1e-9)


@given(st.integers(0, 2**31 - 1), st.floats(1.01, 10.0))
def test_larger_task_error_lowers_reward(seed, c):
    rng = np.random.default_rng(seed)
    target, ee, err = (rng.normal(size=(30, 2)) for _ in range(3))
    config = RewardConfig(1.0, 0.5)
    near = accumulated_reward(TaskDescriptor(target), fake_rollout(ee, target + err), config)
    far = accumulated_reward(TaskDescriptor(target), fake_rollout(ee + (c - 1) * err, target + c * err), config)
    assert far.push_distance == pytest.approx(near.push_distance)
    assert far.total < near.total


def _calibration_set(seed, scale_push=1.0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(12):
        target = rng.normal(size=(40, 2))
        obj = target + rng.normal(scale=0.3, size=(40, 2))
        ee = obj + scale_push * rng.normal(scale=0.1, size=(40, 2))
        out.append((TaskDescriptor(target), fake_rollout(ee, obj)))
    return out


def _ratio(config, samples):
    rt = np.mean([task_term(t, r.object_path) for t, r in samples])
    rp = np.mean([push_term(r.ee_path, r.object_path) for _, r in samples])
    return config.a * rt / (config.b * rp)


def test_calibration_identity():
    samples = _calibration_set(5)
    config = calibrate_ab(samples)
    assert config.a == 1.0
    assert abs(_ratio(config, samples) - 1.5) < 1e-9


def test_calibration_equal_means():
    path = np.zeros((10, 2))
    samples = [(TaskDescriptor(path), fake_rollout(path + [0.2, 0.2], path + [0.0, 0.2]))]
    assert calibrate_ab(samples).b == pytest.approx(1 / 1.5, abs=1e-12)


def test_calibration_homogeneity():
    samples = _calibration_set(6)
    doubled = [(t, fake_rollout(r.object_path + 2 * (r.ee_path - r.object_path), r.object_path)) for t, r in samples]
    assert calibrate_ab(doubled).b == pytest.approx(calibrate_ab(samples).b / 2, rel=1e-12)


def test_calibration_errors():
    path = np.zeros((10, 2))
    with pytest.raises(ValueError):
        calibrate_ab([])
    with pytest.raises(ValueError):
        calibrate_ab([(TaskDescriptor(path), fake_rollout(path, path))])
    with pytest.raises(ValueError):
        calibrate_ab(_calibration_set(0), ratio=0.0)
