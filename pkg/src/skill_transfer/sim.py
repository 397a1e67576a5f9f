"""Planar 3-link arm pushing a disk under a quasi-static contact model.

Joint tracking is kinematic: commanded angles are clamped to the joint limits
and the end-effector follows forward kinematics exactly.  The object only
moves while it is being penetrated by the end-effector disk; it is projected
out along the center-to-center normal and picks up ``slip`` times the
tangential part of the end-effector motion.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .library import TaskDescriptor
from .promp import Trajectory


class IKError(RuntimeError):
    pass


@dataclass(frozen=True)
class ArmModel:
    link_lengths: tuple[float, float, float] = (0.3, 0.25, 0.15)
    joint_limits: tuple[tuple[float, float], ...] = ((-2.9, 2.9), (-2.9, 2.9), (-2.9, 2.9))
    base_position: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if len(self.link_lengths) != 3 or min(self.link_lengths) <= 0:
            raise ValueError("need three positive link lengths")
        if len(self.joint_limits) != 3 or any(lo >= hi for lo, hi in self.joint_limits):
            raise ValueError("each joint needs lower < upper limit")
        object.__setattr__(self, "link_lengths", tuple(float(x) for x in self.link_lengths))
        object.__setattr__(
            self, "joint_limits", tuple((float(lo), float(hi)) for lo, hi in self.joint_limits)
        )
        object.__setattr__(self, "base_position", tuple(float(x) for x in self.base_position))

    @property
    def reach(self) -> float:
        return sum(self.link_lengths)

    def _arrays(self):
        limits = np.array(self.joint_limits)
        return (
            np.array(self.link_lengths),
            np.array(self.base_position),
            limits[:, 0].copy(),
            limits[:, 1].copy(),
        )


@dataclass(frozen=True)
class SimConfig:
    object_radius: float = 0.04
    ee_radius: float = 0.03
    slip: float = 0.2
    dt: float = 0.004
    num_steps: int = 1250

    def __post_init__(self):
        if self.object_radius <= 0 or self.ee_radius <= 0:
            raise ValueError("radii must be positive")
        if not 0.0 <= self.slip <= 1.0:
            raise ValueError("slip must be in [0, 1]")
        if self.dt <= 0 or self.num_steps < 2:
            raise ValueError("dt must be positive and num_steps >= 2")

    @property
    def contact_distance(self) -> float:
        return self.ee_radius + self.object_radius


@dataclass(frozen=True)
class WorldState:
    joint_angles: np.ndarray
    object_center: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.joint_angles, dtype=float)
        c = np.asarray(self.object_center, dtype=float)
        if q.shape != (3,) or c.shape != (2,):
            raise ValueError("joint_angles must have 3 entries and object_center 2")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(c))):
            raise ValueError("world state must be finite")
        object.__setattr__(self, "joint_angles", q)
        object.__setattr__(self, "object_center", c)


@dataclass(frozen=True)
class RolloutResult:
    ee_path: np.ndarray
    object_path: np.ndarray
    joint_path: np.ndarray
    dt: float = field(default=0.004)

    @property
    def num_steps(self) -> int:
        return self.ee_path.shape[0]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "ee_x", "ee_y", "obj_x", "obj_y", "q1", "q2", "q3"])
            for i in range(self.num_steps):
                writer.writerow(
                    [repr(i * self.dt)]
                    + [repr(float(v)) for v in self.ee_path[i]]
                    + [repr(float(v)) for v in self.object_path[i]]
                    + [repr(float(v)) for v in self.joint_path[i]]
                )


@numba.njit(cache=True)
def _fk_ee(links, base, q):
    x = base[0]
    y = base[1]
    phi = 0.0
    for i in range(3):
        phi += q[i]
        x += links[i] * math.cos(phi)
        y += links[i] * math.sin(phi)
    return x, y


@numba.njit(cache=True)
def _rollout_kernel(joints, links, base, lo, hi, q0, obj0, contact, slip):
    n = joints.shape[0]
    ee_path = np.empty((n, 2))
    obj_path = np.empty((n, 2))
    q_path = np.empty((n, 3))
    q = np.empty(3)
    for i in range(3):
        q[i] = min(max(q0[i], lo[i]), hi[i])
    px, py = _fk_ee(links, base, q)
    ox = obj0[0]
    oy = obj0[1]
    for t in range(n):
        for i in range(3):
            q[i] = min(max(joints[t, i], lo[i]), hi[i])
            q_path[t, i] = q[i]
        ex, ey = _fk_ee(links, base, q)
        dx = ex - px
        dy = ey - py
        cx = ox - ex
        cy = oy - ey
        dist = math.sqrt(cx * cx + cy * cy)
        if dist < contact:
            if dist > 0.0:
                nx = cx / dist
                ny = cy / dist
            else:
                step = math.sqrt(dx * dx + dy * dy)
                if step > 0.0:
                    nx = dx / step
                    ny = dy / step
                else:
                    nx = 1.0
                    ny = 0.0
            pen = contact - dist
            along = dx * nx + dy * ny
            tx = dx - along * nx
            ty = dy - along * ny
            ox += pen * nx + slip * tx
            oy += pen * ny + slip * ty
        ee_path[t, 0] = ex
        ee_path[t, 1] = ey
        obj_path[t, 0] = ox
        obj_path[t, 1] = oy
        px = ex
        py = ey
    return ee_path, obj_path, q_path


@numba.njit(cache=True)
def _dls_kernel(links, base, lo, hi, target, seed_q, tol, max_iters, damping):
    q = seed_q.copy()
    for i in range(3):
        q[i] = min(max(q[i], lo[i]), hi[i])
    for it in range(max_iters + 1):
        ex, ey = _fk_ee(links, base, q)
        rx = target[0] - ex
        ry = target[1] - ey
        res = math.sqrt(rx * rx + ry * ry)
        if res <= tol or it == max_iters:
            return q, res, it
        # planar Jacobian columns: d ee / d q_i
        jac = np.zeros((2, 3))
        phi = 0.0
        for i in range(3):
            phi += q[i]
            sx = links[i] * math.sin(phi)
            cy = links[i] * math.cos(phi)
            for j in range(i + 1):
                jac[0, j] -= sx
                jac[1, j] += cy
        a = jac[0, 0] ** 2 + jac[0, 1] ** 2 + jac[0, 2] ** 2 + damping * damping
        b = jac[0, 0] * jac[1, 0] + jac[0, 1] * jac[1, 1] + jac[0, 2] * jac[1, 2]
        d = jac[1, 0] ** 2 + jac[1, 1] ** 2 + jac[1, 2] ** 2 + damping * damping
        det = a * d - b * b
        ux = (d * rx - b * ry) / det
        uy = (a * ry - b * rx) / det
        for i in range(3):
            q[i] = min(max(q[i] + jac[0, i] * ux + jac[1, i] * uy, lo[i]), hi[i])
    return q, res, max_iters


def forward_kinematics(arm: ArmModel, q) -> tuple[np.ndarray, np.ndarray]:
    """Base, elbow, wrist and end-effector positions of the chain."""
    q = np.asarray(q, dtype=float)
    phi = np.cumsum(q)
    steps = np.array(arm.link_lengths)[:, None] * np.stack([np.cos(phi), np.sin(phi)], axis=1)
    points = np.vstack([np.array(arm.base_position), np.array(arm.base_position) + np.cumsum(steps, axis=0)])
    return points, points[-1].copy()


def clamp_to_limits(arm: ArmModel, q) -> np.ndarray:
    _, _, lo, hi = arm._arrays()
    return np.clip(np.asarray(q, dtype=float), lo, hi)


def rollout(arm: ArmModel, sim: SimConfig, joints: Trajectory | np.ndarray, initial: WorldState) -> RolloutResult:
    values = joints.values if isinstance(joints, Trajectory) else np.asarray(joints, dtype=float)
    if values.shape != (sim.num_steps, 3):
        raise ValueError(f"joint trajectory must be ({sim.num_steps}, 3), got {values.shape}")
    links, base, lo, hi = arm._arrays()
    ee, obj, q = _rollout_kernel(
        np.ascontiguousarray(values),
        links,
        base,
        lo,
        hi,
        initial.joint_angles,
        initial.object_center,
        sim.contact_distance,
        sim.slip,
    )
    return RolloutResult(ee, obj, q, sim.dt)


def ik_solve(
    arm: ArmModel,
    target,
    seed_q,
    tol: float = 1e-6,
    max_iters: int = 200,
    damping: float = 1e-3,
) -> np.ndarray:
    """Damped least-squares IK; raises IKError instead of returning a bad pose."""
    target = np.asarray(target, dtype=float)
    if not np.all(np.isfinite(target)):
        raise IKError("target is not finite")
    links, base, lo, hi = arm._arrays()
    if np.linalg.norm(target - base) > links.sum():
        raise IKError(f"target {target.tolist()} is beyond the arm's reach {links.sum():.3f}")
    q, res, _ = _dls_kernel(
        links, base, lo, hi, target, np.asarray(seed_q, dtype=float), tol, max_iters, damping
    )
    if res > tol:
        raise IKError(f"no IK solution within {tol} for {target.tolist()} (residual {res:.3g})")
    return q


def _min_jerk(s: np.ndarray) -> np.ndarray:
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s**2)


def push_directions(path: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Unit direction of travel per step; stationary steps borrow the nearest motion ahead (or behind)."""
    delta = np.diff(path, axis=0)
    norms = np.linalg.norm(delta, axis=1)
    moving = np.flatnonzero(norms > eps)
    n = path.shape[0]
    dirs = np.zeros((n, 2))
    if moving.size == 0:
        dirs[:] = (0.0, 1.0)
        return dirs
    for t in range(n):
        ahead = moving[moving >= t]
        idx = ahead[0] if ahead.size else moving[-1]
        dirs[t] = delta[idx] / norms[idx]
    return dirs


def ee_waypoints(
    desired: np.ndarray,
    start_ee: np.ndarray,
    approach_offset: float,
    clearance: float = 0.02,
) -> np.ndarray:
    """End-effector path: circle in around the object, then trail it while it moves.

    Until the object is meant to move, the end-effector travels in polar
    coordinates around the object center from its start pose to the contact
    point behind the first push direction.  Afterwards it stays
    ``approach_offset`` behind the desired object position along the local
    direction of travel.
    """
    dirs = push_directions(desired)
    moving = np.flatnonzero(np.linalg.norm(np.diff(desired, axis=0), axis=1) > 1e-12)
    first = int(moving[0]) + 1 if moving.size else desired.shape[0]
    way = desired - approach_offset * dirs

    if first > 0:
        center = desired[0]
        rel = start_ee - center
        r0 = float(np.hypot(*rel))
        a0 = float(np.arctan2(rel[1], rel[0]))
        behind = -dirs[0]
        a1 = float(np.arctan2(behind[1], behind[0]))
        sweep = (a1 - a0 + np.pi) % (2.0 * np.pi) - np.pi
        s = _min_jerk(np.arange(first) / max(first - 1, 1))
        radius = r0 + (approach_offset - r0) * s + clearance * np.sin(np.pi * s)
        angle = a0 + sweep * s
        way[:first] = center + radius[:, None] * np.stack([np.cos(angle), np.sin(angle)], axis=1)
    return way


def ik_path(arm: ArmModel, waypoints: np.ndarray, seed_q, tol: float = 1e-6, max_iters: int = 200) -> np.ndarray:
    links, base, lo, hi = arm._arrays()
    reach = links.sum()
    q = np.asarray(seed_q, dtype=float)
    out = np.empty((waypoints.shape[0], 3))
    for t, target in enumerate(np.asarray(waypoints, dtype=float)):
        if np.linalg.norm(target - base) > reach:
            raise IKError(f"waypoint {t} at {target.tolist()} is out of reach")
        q, res, _ = _dls_kernel(links, base, lo, hi, target, q, tol, max_iters, 1e-3)
        if res > tol:
            raise IKError(f"IK failed at waypoint {t} {target.tolist()} (residual {res:.3g})")
        out[t] = q
    return out


def scripted_push_demo(
    arm: ArmModel,
    sim: SimConfig,
    desired_object_path: TaskDescriptor,
    approach_offset: float,
    noise: float,
    rng: np.random.Generator,
    start: WorldState,
) -> Trajectory:
    """Joint-space demonstration that pushes the object along ``desired_object_path``.

    The joint path is obtained by IK along :func:`ee_waypoints`, each solve
    seeded with the previous solution; ``noise`` adds i.i.d. Gaussian joint
    noise on top.
    """
    if desired_object_path.num_steps != sim.num_steps:
        raise ValueError("desired path length must match sim.num_steps")
    if approach_offset <= 0 or noise < 0:
        raise ValueError("approach_offset must be positive and noise nonnegative")
    if np.linalg.norm(desired_object_path.object_path[0] - np.array(arm.base_position)) > arm.reach:
        raise IKError("desired path starts outside the workspace")
    _, start_ee = forward_kinematics(arm, clamp_to_limits(arm, start.joint_angles))
    way = ee_waypoints(desired_object_path.object_path, start_ee, approach_offset)
    joints = ik_path(arm, way, start.joint_angles)
    if noise > 0:
        joints = joints + noise * rng.standard_normal(joints.shape)
    return Trajectory(joints, sim.dt)
