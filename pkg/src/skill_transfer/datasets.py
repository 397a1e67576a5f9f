"""Synthetic pushing datasets: a fan of straight pushes from a common object start."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .library import Skill, SkillLibrary, TaskDescriptor
from .promp import BasisSet, fit_promp
from .sim import ArmModel, SimConfig, WorldState, ik_solve, scripted_push_demo

VARIANTS = ("A", "B")
OBJECT_START = (0.0, 0.45)
PUSH_LENGTH = 0.15
NUM_SKILLS = 10
NUM_BASIS = 6
DEMOS_PER_SKILL = 5
DEMO_NOISE = 0.02
# fraction of the episode during which the object is pushed
PUSH_WINDOW = (0.36, 0.8)
# end-effector distance below the object at the start of variant B
RETRACTED_GAP = 0.25
_START_SEED_Q = (0.5, 1.5, 1.0)


@dataclass(frozen=True)
class Dataset:
    variant: str
    library: SkillLibrary
    start_state: WorldState
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown dataset variant {self.variant!r}")
        if len(self.library) != NUM_SKILLS:
            raise ValueError(f"a dataset holds exactly {NUM_SKILLS} skills")

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "seed": self.seed,
            "start_state": {
                "joint_angles": self.start_state.joint_angles.tolist(),
                "object_center": self.start_state.object_center.tolist(),
            },
        }


def push_angles(num: int = NUM_SKILLS) -> np.ndarray:
    """Evenly spaced directions strictly inside the half-plane facing away from the base."""
    return np.pi * (np.arange(num) + 0.5) / num


def fan_descriptor(angle: float, num_steps: int, start=OBJECT_START, length: float = PUSH_LENGTH) -> TaskDescriptor:
    s = np.linspace(0.0, 1.0, num_steps)
    lo, hi = PUSH_WINDOW
    u = np.clip((s - lo) / (hi - lo), 0.0, 1.0)
    u = u**3 * (10.0 - 15.0 * u + 6.0 * u**2)
    direction = np.array([np.cos(angle), np.sin(angle)])
    return TaskDescriptor(np.asarray(start) + length * u[:, None] * direction)


def start_state(variant: str, arm: ArmModel, sim: SimConfig) -> WorldState:
    center = np.array(OBJECT_START)
    gap = sim.contact_distance if variant == "A" else RETRACTED_GAP
    q = ik_solve(arm, center - np.array([0.0, gap]), np.array(_START_SEED_Q), tol=1e-9)
    return WorldState(q, center)


def generate_dataset(
    variant: str,
    seed: int = 0,
    arm: ArmModel | None = None,
    sim: SimConfig | None = None,
) -> Dataset:
    if variant not in VARIANTS:
        raise ValueError(f"unknown dataset variant {variant!r}")
    arm = arm or ArmModel()
    sim = sim or SimConfig()
    start = start_state(variant, arm, sim)
    basis = BasisSet(NUM_BASIS, sim.num_steps)
    rng = np.random.default_rng(np.random.SeedSequence([seed, VARIANTS.index(variant)]))
    skills = []
    for i, angle in enumerate(push_angles()):
        target = fan_descriptor(angle, sim.num_steps)
        demos = [
            scripted_push_demo(arm, sim, target, sim.contact_distance, DEMO_NOISE, rng, start)
            for _ in range(DEMOS_PER_SKILL)
        ]
        skills.append(Skill(f"push_{i:02d}", fit_promp(demos, basis), target))
    return Dataset(variant, SkillLibrary(tuple(skills)), start, seed)
