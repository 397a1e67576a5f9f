"""Leave-one-out transfer experiments, their records and aggregation."""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .datasets import NUM_SKILLS, VARIANTS, Dataset
from .library import MODES, SkillLibrary, TaskDescriptor, TransferInit, build_init, knn_select
from .promp import basis_matrix
from .reps import IterationStats, RepsConfig, SearchDistribution, optimize
from .reward import RewardConfig, accumulated_reward, calibrate_ab
from .sim import ArmModel, RolloutResult, SimConfig, _rollout_kernel

CALIBRATION_ROLLOUTS = 100


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "A"
    mode: str = "partial"
    k: int = 2
    library_size: int = NUM_SKILLS - 1
    num_iterations: int = 40
    samples_per_iteration: int = 30
    epsilon: float = 0.5
    s: float = 0.05
    seeds: tuple[int, ...] = (0, 1, 2)
    output_dir: str = "runs"
    dataset_seed: int = 0
    arm: ArmModel = field(default_factory=ArmModel)
    sim: SimConfig = field(default_factory=SimConfig)
    reward: RewardConfig | None = None

    def __post_init__(self):
        if self.dataset not in VARIANTS:
            raise ValueError(f"dataset must be one of {VARIANTS}, got {self.dataset!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 1 <= self.library_size <= NUM_SKILLS - 1:
            raise ValueError(f"library_size must be in [1, {NUM_SKILLS - 1}]")
        if not 1 <= self.k <= self.library_size:
            raise ValueError(f"k={self.k} must be in [1, library_size={self.library_size}]")
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        if self.num_iterations < 0 or self.samples_per_iteration < 2:
            raise ValueError("need num_iterations >= 0 and samples_per_iteration >= 2")
        if not (self.epsilon > 0 and self.s > 0):
            raise ValueError("epsilon and s must be positive")
        object.__setattr__(self, "seeds", tuple(int(x) for x in self.seeds))

    @property
    def reps(self) -> RepsConfig:
        return RepsConfig(self.epsilon, self.samples_per_iteration, self.num_iterations)


@dataclass
class RunRecord:
    dataset: str
    mode: str
    k: int
    library_size: int
    seed: int
    target_id: str
    source_ids: tuple[str, ...]
    curve: list[IterationStats]
    init_mean: np.ndarray
    final_mean: np.ndarray
    initial_reward: float
    iterations_to_threshold: int | None = None

    @property
    def group(self) -> tuple[str, int, str]:
        return (self.mode, self.k, self.dataset)


class PushEvaluator:
    """Reward of one flat weight vector: render joints, roll out, score against the target."""

    def __init__(self, dataset: Dataset, target: TaskDescriptor, reward: RewardConfig, arm: ArmModel, sim: SimConfig):
        promp = dataset.library.skills[0].promp
        self.num_basis = promp.basis.num_basis
        self.num_dims = promp.num_dims
        self.phi = basis_matrix(promp.basis)
        self.target = target
        self.reward = reward
        self.start = dataset.start_state
        self.sim = sim
        self._arm = arm._arrays()

    def rollout(self, theta: np.ndarray):
        joints = self.phi @ np.asarray(theta, dtype=float).reshape(self.num_dims, self.num_basis).T
        links, base, lo, hi = self._arm
        return _rollout_kernel(
            joints, links, base, lo, hi,
            self.start.joint_angles, self.start.object_center,
            self.sim.contact_distance, self.sim.slip,
        )

    def __call__(self, theta: np.ndarray) -> float:
        ee, obj, _ = self.rollout(theta)
        rt = np.linalg.norm((self.target.object_path - obj).ravel())
        rp = np.linalg.norm((ee - obj).ravel())
        return float(-(self.reward.a * rt + self.reward.b * rp))


def _rngs(seed: int, target_index: int):
    # shared across modes so that partial/full/baseline see common random numbers
    reps_rng, init_rng, subset_rng = (
        np.random.default_rng(np.random.SeedSequence([seed, target_index, stream])) for stream in range(3)
    )
    return reps_rng, init_rng, subset_rng


def source_library(
    dataset: Dataset, target_id: str, library_size: int, k: int, rng: np.random.Generator
) -> SkillLibrary:
    """Leave-one-out library, shrunk to ``library_size`` skills when that is below the full size."""
    lib = dataset.library.without(target_id)
    if library_size >= len(lib):
        return lib
    target = dataset.library.get(target_id).descriptor
    if library_size > k:
        return lib.subset(s.id for s in knn_select(lib, target, library_size))
    picked = rng.choice(len(lib), size=k, replace=False)
    return lib.subset(lib.skills[i].id for i in sorted(picked))


def calibration_rollouts(
    dataset: Dataset, s: float = 0.05, arm=None, sim=None, n: int = CALIBRATION_ROLLOUTS, seed: int = 0
) -> list[tuple[TaskDescriptor, RolloutResult]]:
    """Rollouts of samples from leave-one-out baseline initializations, cycling over targets."""
    arm = arm or ArmModel()
    sim = sim or SimConfig()
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7919]))
    skills = dataset.library.skills
    samples = []
    for j in range(n):
        target = skills[j % len(skills)]
        init = build_init("baseline", dataset.library.without(target.id), target.descriptor, 1, s, rng)
        theta = SearchDistribution(init.mean, init.covariance).sample(1, rng)[0]
        ev = PushEvaluator(dataset, target.descriptor, RewardConfig(), arm, sim)
        ee, obj, q = ev.rollout(theta)
        samples.append((target.descriptor, RolloutResult(ee, obj, q, sim.dt)))
    return samples


def calibrate_reward(dataset: Dataset, s: float = 0.05, arm=None, sim=None, n: int = CALIBRATION_ROLLOUTS, seed: int = 0) -> RewardConfig:
    """Fit a, b on :func:`calibration_rollouts`."""
    return calibrate_ab(calibration_rollouts(dataset, s, arm, sim, n, seed))


def run_single(
    config: ExperimentConfig, dataset: Dataset, reward: RewardConfig, target_id: str, seed: int
) -> tuple[RunRecord, TransferInit]:
    target_index = dataset.library.ids.index(target_id)
    reps_rng, init_rng, subset_rng = _rngs(seed, target_index)
    target = dataset.library.get(target_id).descriptor
    lib = source_library(dataset, target_id, config.library_size, config.k, subset_rng)
    init = build_init(config.mode, lib, target, config.k, config.s, init_rng)
    evaluate = PushEvaluator(dataset, target, reward, config.arm, config.sim)
    start = SearchDistribution(init.mean, init.covariance)
    final, curve = optimize(start, evaluate, config.reps, reps_rng)
    record = RunRecord(
        dataset=config.dataset,
        mode=config.mode,
        k=config.k,
        library_size=config.library_size,
        seed=seed,
        target_id=target_id,
        source_ids=init.source_ids,
        curve=curve,
        init_mean=init.mean,
        final_mean=final.mean,
        initial_reward=evaluate(init.mean),
    )
    return record, init


def run_transfer_experiment(
    config: ExperimentConfig, dataset: Dataset, reward: RewardConfig | None = None
) -> list[RunRecord]:
    if dataset.variant != config.dataset:
        raise ValueError(f"config wants dataset {config.dataset} but got {dataset.variant}")
    reward = reward or config.reward
    if reward is None:
        reward = calibrate_reward(dataset, config.s, config.arm, config.sim)
    return [
        run_single(config, dataset, reward, target_id, seed)[0]
        for target_id in dataset.library.ids
        for seed in config.seeds
    ]


def attach_thresholds(records: Sequence[RunRecord]) -> None:
    """Fill ``iterations_to_threshold`` from the paired baseline run's final mean reward."""
    baselines: dict[tuple, RunRecord] = {}
    for r in records:
        if r.mode == "baseline":
            baselines[(r.dataset, r.library_size, r.k, r.target_id, r.seed)] = r
            baselines.setdefault((r.dataset, r.library_size, None, r.target_id, r.seed), r)
    for r in records:
        base = baselines.get((r.dataset, r.library_size, r.k, r.target_id, r.seed)) or baselines.get(
            (r.dataset, r.library_size, None, r.target_id, r.seed)
        )
        if base is None or not base.curve:
            r.iterations_to_threshold = None
            continue
        threshold = base.curve[-1].mean_reward
        r.iterations_to_threshold = next(
            (i for i, st in enumerate(r.curve) if st.mean_reward >= threshold), None
        )


def similarity_to_init(record: RunRecord, init: TransferInit | np.ndarray) -> float:
    mean = init.mean if isinstance(init, TransferInit) else np.asarray(init, dtype=float)
    if mean.shape != record.final_mean.shape:
        raise ValueError("dimension mismatch between record and initialization")
    return float(np.linalg.norm(record.final_mean - mean))


@dataclass
class GroupSummary:
    mode: str
    k: int
    dataset: str
    count: int
    mean_curve: np.ndarray
    std_curve: np.ndarray
    final_reward: float
    iterations_to_threshold: float | None
    reached_threshold: int
    initial_reward: float
    similarity_to_init: float


def aggregate(records: Sequence[RunRecord]) -> list[GroupSummary]:
    """Per (mode, k, dataset) statistics; unreached thresholds count as num_iterations."""
    if not records:
        raise ValueError("nothing to aggregate")
    groups: dict[tuple, list[RunRecord]] = {}
    for r in records:
        groups.setdefault(r.group, []).append(r)
    out = []
    for key in sorted(groups, key=lambda g: (MODES.index(g[0]), g[1], g[2])):
        members = groups[key]
        shapes = {(m.library_size, len(m.curve)) for m in members}
        if len(shapes) != 1:
            raise ValueError(f"group {key} mixes configurations {sorted(shapes)}")
        curves = np.array([[st.mean_reward for st in m.curve] for m in members]).reshape(len(members), -1)
        n_iter = curves.shape[1]
        its = [m.iterations_to_threshold for m in members]
        known = any(m.mode == "baseline" for m in records)
        out.append(
            GroupSummary(
                mode=key[0],
                k=key[1],
                dataset=key[2],
                count=len(members),
                mean_curve=curves.mean(axis=0),
                std_curve=curves.std(axis=0),
                final_reward=float(curves[:, -1].mean()) if n_iter else float("nan"),
                iterations_to_threshold=(
                    float(np.mean([n_iter if i is None else i for i in its])) if known else None
                ),
                reached_threshold=sum(i is not None for i in its),
                initial_reward=float(np.mean([m.initial_reward for m in members])),
                similarity_to_init=float(np.mean([similarity_to_init(m, m.init_mean) for m in members])),
            )
        )
    return out


# ---------------------------------------------------------------- config files

_SCALAR_KEYS = ("library_size", "num_iterations", "samples_per_iteration", "epsilon", "s", "dataset_seed")
_LIST_KEYS = ("dataset", "mode", "k")


def _as_list(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def expand_config(doc: dict[str, Any]) -> list[ExperimentConfig]:
    """Expand a config document into one ExperimentConfig per (dataset, mode, k).

    ``dataset``, ``mode`` and ``k`` may each be a scalar or a list; k values
    above ``library_size`` are skipped.
    """
    unknown = set(doc) - set(_SCALAR_KEYS) - set(_LIST_KEYS) - {"seeds", "output_dir", "simulator", "arm", "reward"}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    base: dict[str, Any] = {key: doc[key] for key in _SCALAR_KEYS if key in doc}
    if "seeds" in doc:
        base["seeds"] = tuple(doc["seeds"])
    if "output_dir" in doc:
        base["output_dir"] = str(doc["output_dir"])
    if "simulator" in doc:
        base["sim"] = SimConfig(**doc["simulator"])
    if "arm" in doc:
        arm = dict(doc["arm"])
        for key in ("link_lengths", "base_position"):
            if key in arm:
                arm[key] = tuple(arm[key])
        if "joint_limits" in arm:
            arm["joint_limits"] = tuple(tuple(p) for p in arm["joint_limits"])
        base["arm"] = ArmModel(**arm)
    if doc.get("reward") is not None:
        base["reward"] = RewardConfig(**doc["reward"])
    library_size = int(doc.get("library_size", NUM_SKILLS - 1))
    configs = []
    for dataset, mode, k in itertools.product(
        _as_list(doc.get("dataset", "A")), _as_list(doc.get("mode", "partial")), _as_list(doc.get("k", 2))
    ):
        if int(k) > library_size:
            continue
        configs.append(ExperimentConfig(dataset=dataset, mode=mode, k=int(k), **base))
    if not configs:
        raise ValueError("config expands to no experiments")
    return configs


def config_hash(doc: dict[str, Any]) -> str:
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def config_to_dict(config: ExperimentConfig) -> dict[str, Any]:
    d = asdict(config)
    d["simulator"] = d.pop("sim")
    d["seeds"] = list(config.seeds)
    return d
