import numpy as np
import pytest

from skill_transfer.datasets import generate_dataset
from skill_transfer.library import Skill, SkillLibrary, TaskDescriptor
from skill_transfer.promp import BasisSet, ProMP

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def make_skill(skill_id, mean, cov=None, path=None, num_basis=3, num_dims=2, steps=20):
    basis = BasisSet(num_basis, steps)
    dim = num_basis * num_dims
    cov = np.eye(dim) * 0.01 if cov is None else cov
    if path is None:
        path = np.zeros((steps, 2))
    return Skill(skill_id, ProMP(basis, np.asarray(mean, float), cov, num_dims), TaskDescriptor(path))


@pytest.fixture
def small_library():
    rng = np.random.default_rng(0)
    return SkillLibrary(
        tuple(
            make_skill(f"s{i}", rng.normal(size=6), path=np.full((20, 2), float(i)))
            for i in range(5)
        )
    )


@pytest.fixture(scope="session")
def dataset_a():
    return generate_dataset("A", 0)


@pytest.fixture(scope="session")
def dataset_b():
    return generate_dataset("B", 0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
