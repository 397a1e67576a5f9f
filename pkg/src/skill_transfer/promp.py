"""Probabilistic movement primitives over normalized Gaussian time bases.

Weights are stored per basis and per dimension as a ``(num_basis, num_dims)``
array.  When a ProMP needs a flat parameter vector the weights are stacked
dimension by dimension (all bases of joint 0, then joint 1, ...).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_RIDGE = 1e-6
DEFAULT_COV_REG = 1e-6
DEFAULT_SYSTEM_NOISE = 1e-6


@dataclass(frozen=True)
class BasisSet:
    num_basis: int
    num_steps: int
    width: float | None = None
    centers: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.num_basis < 2:
            raise ValueError(f"num_basis must be >= 2, got {self.num_basis}")
        if self.num_steps < 2:
            raise ValueError(f"num_steps must be >= 2, got {self.num_steps}")
        if self.width is None:
            object.__setattr__(self, "width", 1.0 / (self.num_basis - 1))
        if not self.width > 0:
            raise ValueError(f"width must be positive, got {self.width}")
        object.__setattr__(self, "centers", np.linspace(0.0, 1.0, self.num_basis))


@dataclass(frozen=True)
class Trajectory:
    values: np.ndarray
    dt: float = 0.004

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 2:
            raise ValueError(f"trajectory must be (num_steps >= 2, num_dims), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("trajectory contains non-finite values")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "values", values)

    @property
    def num_steps(self) -> int:
        return self.values.shape[0]

    @property
    def num_dims(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ProMP:
    basis: BasisSet
    mean: np.ndarray
    covariance: np.ndarray
    num_dims: int
    system_noise: float = DEFAULT_SYSTEM_NOISE

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        cov = np.asarray(self.covariance, dtype=float)
        dim = self.basis.num_basis * self.num_dims
        if mean.shape != (dim,):
            raise ValueError(f"mean must have length {dim}, got {mean.shape}")
        if cov.shape != (dim, dim):
            raise ValueError(f"covariance must be {dim}x{dim}, got {cov.shape}")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
            raise ValueError("covariance is not symmetric")
        if self.system_noise < 0:
            raise ValueError("system_noise must be nonnegative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", 0.5 * (cov + cov.T))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def mean_weights(self) -> np.ndarray:
        return unflatten_weights(self.mean, self.basis.num_basis, self.num_dims)

    def to_dict(self) -> dict:
        return {
            "num_basis": self.basis.num_basis,
            "num_dims": self.num_dims,
            "num_steps": self.basis.num_steps,
            "width": self.basis.width,
            "mean": self.mean.tolist(),
            "covariance": self.covariance.tolist(),
            "system_noise": self.system_noise,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProMP":
        basis = BasisSet(int(data["num_basis"]), int(data["num_steps"]), float(data["width"]))
        return cls(
            basis=basis,
            mean=np.array(data["mean"], dtype=float),
            covariance=np.array(data["covariance"], dtype=float),
            num_dims=int(data["num_dims"]),
            system_noise=float(data["system_noise"]),
        )


def flatten_weights(weights: np.ndarray) -> np.ndarray:
    """(num_basis, num_dims) -> flat vector, one contiguous block per dimension."""
    return np.asarray(weights, dtype=float).T.ravel()


def unflatten_weights(flat: np.ndarray, num_basis: int, num_dims: int) -> np.ndarray:
    return np.asarray(flat, dtype=float).reshape(num_dims, num_basis).T


def basis_matrix(basis: BasisSet) -> np.ndarray:
    """Row-normalized Gaussian features, shape (num_steps, num_basis)."""
    z = np.linspace(0.0, 1.0, basis.num_steps)
    raw = np.exp(-((z[:, None] - basis.centers[None, :]) ** 2) / (2.0 * basis.width**2))
    return raw / raw.sum(axis=1, keepdims=True)


def fit_weights(demo: Trajectory, basis: BasisSet, ridge: float = DEFAULT_RIDGE) -> np.ndarray:
    if demo.num_steps != basis.num_steps:
        raise ValueError(
            f"demo has {demo.num_steps} steps but basis expects {basis.num_steps}"
        )
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    phi = basis_matrix(basis)
    gram = phi.T @ phi + ridge * np.eye(basis.num_basis)
    return np.linalg.solve(gram, phi.T @ demo.values)


def fit_promp(
    demos: Sequence[Trajectory],
    basis: BasisSet,
    ridge: float = DEFAULT_RIDGE,
    cov_reg: float = DEFAULT_COV_REG,
    system_noise: float = DEFAULT_SYSTEM_NOISE,
) -> ProMP:
    """Maximum-likelihood Gaussian over per-demonstration regression weights.

    The covariance uses the 1/N (ML) normalization and gets ``cov_reg`` added
    on the diagonal so that few demonstrations still give a factorizable matrix.
    """
    if len(demos) < 2:
        raise ValueError(f"need at least 2 demonstrations, got {len(demos)}")
    shapes = {d.values.shape for d in demos}
    if len(shapes) != 1:
        raise ValueError(f"inconsistent demonstration shapes: {sorted(shapes)}")
    if cov_reg <= 0:
        raise ValueError("cov_reg must be positive")
    num_dims = demos[0].num_dims
    flat = np.stack([flatten_weights(fit_weights(d, basis, ridge)) for d in demos])
    mean = flat.mean(axis=0)
    centered = flat - mean
    cov = centered.T @ centered / len(demos)
    cov = 0.5 * (cov + cov.T) + cov_reg * np.eye(cov.shape[0])
    return ProMP(basis, mean, cov, num_dims, system_noise)


def render_trajectory(basis: BasisSet, weights: np.ndarray, dt: float = 0.004) -> Trajectory:
    weights = np.asarray(weights, dtype=float)
    if weights.ndim == 1:
        weights = weights[:, None]
    if weights.shape[0] != basis.num_basis:
        raise ValueError(
            f"weights have {weights.shape[0]} rows but basis has {basis.num_basis} functions"
        )
    return Trajectory(basis_matrix(basis) @ weights, dt)


def sample_weights(promp: ProMP, rng: np.random.Generator) -> np.ndarray:
    try:
        chol = np.linalg.cholesky(promp.covariance)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("ProMP covariance is not positive definite") from exc
    flat = promp.mean + chol @ rng.standard_normal(promp.dim)
    return unflatten_weights(flat, promp.basis.num_basis, promp.num_dims)


def step_marginal(promp: ProMP, t: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean and variance of each dimension at time step ``t``.

    Cross-dimension covariance is dropped; only the per-dimension diagonal of
    the marginal is returned.
    """
    if not 0 <= t < promp.basis.num_steps:
        raise IndexError(f"step {t} outside [0, {promp.basis.num_steps})")
    phi_t = basis_matrix(promp.basis)[t]
    nb = promp.basis.num_basis
    mean = np.empty(promp.num_dims)
    var = np.empty(promp.num_dims)
    for j in range(promp.num_dims):
        block = slice(j * nb, (j + 1) * nb)
        mean[j] = phi_t @ promp.mean[block]
        var[j] = phi_t @ promp.covariance[block, block] @ phi_t + promp.system_noise
    return mean, var
