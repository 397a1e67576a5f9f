"""Skill library, k-NN source selection and the three search-space initializations."""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .promp import ProMP, basis_matrix

LIBRARY_VERSION = 1
MODES = ("partial", "full", "baseline")


class LibraryFormatError(ValueError):
    """Raised when a library file cannot be parsed or violates invariants."""


@dataclass(frozen=True)
class TaskDescriptor:
    object_path: np.ndarray

    def __post_init__(self):
        path = np.asarray(self.object_path, dtype=float)
        if path.ndim != 2 or path.shape[1] != 2 or path.shape[0] < 2:
            raise ValueError(f"object_path must be (num_steps >= 2, 2), got {path.shape}")
        if not np.all(np.isfinite(path)):
            raise ValueError("object_path contains non-finite values")
        object.__setattr__(self, "object_path", path)

    @property
    def num_steps(self) -> int:
        return self.object_path.shape[0]


@dataclass(frozen=True)
class Skill:
    id: str
    promp: ProMP
    descriptor: TaskDescriptor

    def __post_init__(self):
        if not self.id:
            raise ValueError("skill id must be nonempty")


@dataclass(frozen=True)
class SkillLibrary:
    skills: tuple[Skill, ...] = ()

    def __post_init__(self):
        skills = tuple(self.skills)
        ids = [s.id for s in skills]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate skill ids in {ids}")
        if skills:
            ref = skills[0]
            for s in skills[1:]:
                _check_compatible(ref, s)
        object.__setattr__(self, "skills", skills)

    def __len__(self) -> int:
        return len(self.skills)

    def __iter__(self):
        return iter(self.skills)

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.skills]

    def get(self, skill_id: str) -> Skill:
        for s in self.skills:
            if s.id == skill_id:
                return s
        raise KeyError(skill_id)

    def without(self, skill_id: str) -> "SkillLibrary":
        return SkillLibrary(tuple(s for s in self.skills if s.id != skill_id))

    def subset(self, ids: Iterable[str]) -> "SkillLibrary":
        wanted = set(ids)
        return SkillLibrary(tuple(s for s in self.skills if s.id in wanted))


def _check_compatible(ref: Skill, other: Skill) -> None:
    if other.descriptor.num_steps != ref.descriptor.num_steps:
        raise ValueError(
            f"skill {other.id!r} descriptor has {other.descriptor.num_steps} steps, "
            f"library uses {ref.descriptor.num_steps}"
        )
    if other.promp.basis != ref.promp.basis or other.promp.num_dims != ref.promp.num_dims:
        raise ValueError(f"skill {other.id!r} ProMP basis/dimensions differ from the library")


@dataclass(frozen=True)
class TransferInit:
    mode: str
    mean: np.ndarray
    covariance: np.ndarray
    source_ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown transfer mode {self.mode!r}")
        if self.mode == "baseline" and self.source_ids:
            raise ValueError("baseline initialization cannot have source skills")
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "covariance", np.asarray(self.covariance, dtype=float))
        object.__setattr__(self, "source_ids", tuple(self.source_ids))


def descriptor_distance(a: TaskDescriptor, b: TaskDescriptor) -> float:
    if a.object_path.shape != b.object_path.shape:
        raise ValueError(
            f"descriptor shapes differ: {a.object_path.shape} vs {b.object_path.shape}"
        )
    return float(np.linalg.norm((a.object_path - b.object_path).ravel()))


def knn_select(library: SkillLibrary, target: TaskDescriptor, k: int) -> list[Skill]:
    """The k skills closest to ``target``; ties keep library order."""
    if not 1 <= k <= len(library):
        raise ValueError(f"k={k} must be in [1, {len(library)}]")
    dists = [descriptor_distance(s.descriptor, target) for s in library]
    order = sorted(range(len(dists)), key=lambda i: (dists[i], i))
    return [library.skills[i] for i in order[:k]]


def combine_sources(skills: Sequence[Skill]) -> tuple[np.ndarray, np.ndarray]:
    """Moment-matched Gaussian of an equal-weight mixture of the skills' ProMPs."""
    if not skills:
        raise ValueError("no source skills")
    means = np.stack([s.promp.mean for s in skills])
    covs = np.stack([s.promp.covariance for s in skills])
    mean = means.mean(axis=0)
    spread = means - mean
    cov = covs.mean(axis=0) + spread.T @ spread / len(skills)
    return mean, 0.5 * (cov + cov.T)


def partial_init(mean_k: np.ndarray, s: float, source_ids: Sequence[str] = ()) -> TransferInit:
    if not s > 0:
        raise ValueError("s must be positive")
    mean_k = np.asarray(mean_k, dtype=float)
    return TransferInit("partial", mean_k.copy(), s * np.eye(mean_k.size), tuple(source_ids))


def full_init(
    mean_k: np.ndarray, cov_k: np.ndarray, s: float, source_ids: Sequence[str] = ()
) -> TransferInit:
    """Source covariance rescaled so its largest variance equals ``s``."""
    if not s > 0:
        raise ValueError("s must be positive")
    cov_k = np.asarray(cov_k, dtype=float)
    top = float(np.max(np.diag(cov_k)))
    if not top > 0:
        raise ValueError("source covariance has no positive variance")
    return TransferInit(
        "full", np.asarray(mean_k, dtype=float).copy(), (s / top) * cov_k, tuple(source_ids)
    )


def baseline_weights(library: SkillLibrary) -> np.ndarray:
    """Per-coordinate blending weights lambda, from the basis activations at t=0."""
    promp = library.skills[0].promp
    psi0 = basis_matrix(promp.basis)[0]
    lam = psi0 / psi0.max()
    return np.tile(lam, promp.num_dims)


def baseline_init(library: SkillLibrary, s: float, rng: np.random.Generator) -> TransferInit:
    if not len(library):
        raise ValueError("baseline needs a nonempty library")
    if not s > 0:
        raise ValueError("s must be positive")
    means = np.stack([sk.promp.mean for sk in library])
    mean_n = means.mean(axis=0)
    mean_r = rng.uniform(means.min(axis=0), means.max(axis=0))
    lam = baseline_weights(library)
    mean_b = lam * mean_n + (1.0 - lam) * mean_r
    return TransferInit("baseline", mean_b, s * np.eye(mean_b.size))


def build_init(
    mode: str,
    library: SkillLibrary,
    target: TaskDescriptor,
    k: int,
    s: float,
    rng: np.random.Generator,
) -> TransferInit:
    if mode == "baseline":
        return baseline_init(library, s, rng)
    sources = knn_select(library, target, k)
    ids = [sk.id for sk in sources]
    mean_k, cov_k = combine_sources(sources)
    if mode == "partial":
        return partial_init(mean_k, s, ids)
    if mode == "full":
        return full_init(mean_k, cov_k, s, ids)
    raise ValueError(f"unknown transfer mode {mode!r}")


def add_skill(library: SkillLibrary, skill: Skill) -> SkillLibrary:
    if skill.id in library.ids:
        raise ValueError(f"skill id {skill.id!r} already in library")
    if len(library):
        _check_compatible(library.skills[0], skill)
    return SkillLibrary(library.skills + (skill,))


def library_to_dict(library: SkillLibrary) -> dict:
    return {
        "version": LIBRARY_VERSION,
        "skills": [
            {"id": s.id, "promp": s.promp.to_dict(), "descriptor": s.descriptor.object_path.tolist()}
            for s in library
        ],
    }


def library_from_dict(data: dict) -> SkillLibrary:
    try:
        if data["version"] != LIBRARY_VERSION:
            raise LibraryFormatError(f"unsupported library version {data['version']!r}")
        skills = [
            Skill(
                id=str(entry["id"]),
                promp=ProMP.from_dict(entry["promp"]),
                descriptor=TaskDescriptor(np.array(entry["descriptor"], dtype=float)),
            )
            for entry in data["skills"]
        ]
        return SkillLibrary(tuple(skills))
    except LibraryFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise LibraryFormatError(f"invalid library document: {exc}") from exc


def save_library(library: SkillLibrary, path: str | os.PathLike) -> None:
    path = Path(path)
    text = json.dumps(library_to_dict(library), separators=(",", ":"))
    # write-then-rename so readers never observe a half-written file
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_library(path: str | os.PathLike) -> SkillLibrary:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise LibraryFormatError(f"{path}: {exc}") from exc
    return library_from_dict(data)
