"""Transfer of motor skills between pushing tasks via ProMP-initialized REPS."""

from .library import (
    Skill,
    SkillLibrary,
    TaskDescriptor,
    TransferInit,
    add_skill,
    baseline_init,
    combine_sources,
    descriptor_distance,
    full_init,
    knn_select,
    load_library,
    partial_init,
    save_library,
)
from .promp import BasisSet, ProMP, Trajectory, basis_matrix, fit_promp, fit_weights, render_trajectory
from .reps import RepsConfig, SearchDistribution, optimize, reps_step, solve_eta
from .reward import RewardConfig, accumulated_reward, calibrate_ab
from .sim import ArmModel, SimConfig, WorldState, forward_kinematics, ik_solve, rollout

__version__ = "0.1.0"
