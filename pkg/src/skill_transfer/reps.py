"""Episode-based relative entropy policy search with a Gaussian search distribution."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

Evaluator = Callable[[np.ndarray], float]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchDistribution:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match mean of length {mean.size}")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-10):
            raise ValueError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        if np.linalg.eigvalsh(cov)[0] < 1e-12:
            raise ValueError("covariance minimum eigenvalue below 1e-12")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.mean.size

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        chol = np.linalg.cholesky(self.covariance)
        return self.mean + rng.standard_normal((n, self.dim)) @ chol.T


@dataclass(frozen=True)
class RepsConfig:
    epsilon: float = 0.5
    samples_per_iteration: int = 60
    num_iterations: int = 200
    eta_min: float = 1e-8
    cov_floor: float = 1e-8

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.samples_per_iteration < 2:
            raise ValueError("samples_per_iteration must be >= 2")
        if self.num_iterations < 0:
            raise ValueError("num_iterations must be nonnegative")
        if not (self.eta_min > 0 and self.cov_floor > 0):
            raise ValueError("eta_min and cov_floor must be positive")


@dataclass(frozen=True)
class SampleBatch:
    parameters: np.ndarray
    rewards: np.ndarray

    def __post_init__(self):
        params = np.atleast_2d(np.asarray(self.parameters, dtype=float))
        rewards = np.asarray(self.rewards, dtype=float).ravel()
        if params.shape[0] != rewards.size:
            raise ValueError(f"{params.shape[0]} parameter vectors but {rewards.size} rewards")
        if rewards.size == 0:
            raise ValueError("empty batch")
        if not np.all(np.isfinite(rewards)):
            raise ValueError("batch contains non-finite rewards")
        object.__setattr__(self, "parameters", params)
        object.__setattr__(self, "rewards", rewards)


@dataclass(frozen=True)
class IterationStats:
    mean_reward: float
    max_reward: float
    eta: float
    kl_to_previous: float
    effective_sample_size: float


def dual_value(eta: float, rewards: Sequence[float], epsilon: float) -> float:
    """g(eta) = eta*eps + eta*log(mean(exp(R/eta))), evaluated stably."""
    r = np.asarray(rewards, dtype=float)
    top = r.max()
    return float(eta * epsilon + top + eta * np.log(np.mean(np.exp((r - top) / eta))))


def _centered_dual(log_eta: float, centered: np.ndarray, epsilon: float) -> float:
    # dual minus max(R); identical for any constant shift of the rewards
    eta = math.exp(log_eta)
    return eta * epsilon + eta * math.log(np.mean(np.exp(centered / eta)))


def _dual_slope(log_eta: float, centered: np.ndarray, epsilon: float) -> float:
    # d g / d eta; sign is all that matters for the polish step
    eta = math.exp(log_eta)
    z = centered / eta
    w = np.exp(z)
    total = w.sum()
    return epsilon + math.log(total / centered.size) - float(w @ z) / total


def solve_eta(
    rewards: Sequence[float],
    epsilon: float,
    eta_min: float = 1e-8,
    eta_max: float | None = None,
    rel_tol: float = 1e-6,
) -> float:
    """Minimize the REPS dual over eta in [eta_min, eta_max].

    A coarse log-spaced grid brackets the minimum, golden-section search
    narrows the bracket to ``rel_tol`` and a bisection on the analytic
    derivative polishes the result to near machine precision.
    """
    r = np.asarray(rewards, dtype=float)
    if r.size < 2:
        raise ValueError("need at least two rewards")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    centered = r - r.max()
    spread = -centered.min()
    if spread < 1e-12:
        return eta_min
    if eta_max is None:
        eta_max = max(1e4 * spread, 10.0 * eta_min)
    lo_log, hi_log = math.log(eta_min), math.log(eta_max)

    grid = np.linspace(lo_log, hi_log, 121)
    values = [_centered_dual(x, centered, epsilon) for x in grid]
    i = int(np.argmin(values))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, grid.size - 1)]

    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = _centered_dual(c, centered, epsilon)
    fd = _centered_dual(d, centered, epsilon)
    while b - a > rel_tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = _centered_dual(c, centered, epsilon)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = _centered_dual(d, centered, epsilon)

    if not _dual_slope(a, centered, epsilon) < 0 < _dual_slope(b, centered, epsilon):
        # golden bracket lost the root to rounding; fall back to the grid bracket
        a = grid[max(i - 1, 0)]
        b = grid[min(i + 1, grid.size - 1)]
    if _dual_slope(a, centered, epsilon) < 0 < _dual_slope(b, centered, epsilon):
        for _ in range(60):
            mid = 0.5 * (a + b)
            if _dual_slope(mid, centered, epsilon) < 0:
                a = mid
            else:
                b = mid
    log_eta = 0.5 * (a + b)
    return float(min(max(math.exp(log_eta), eta_min), eta_max))


def sample_weights(rewards: np.ndarray, eta: float) -> np.ndarray:
    """Normalized exponential re-weighting exp((R - max R)/eta)."""
    r = np.asarray(rewards, dtype=float)
    w = np.exp((r - r.max()) / eta)
    total = w.sum()
    assert total > 0, "all sample weights underflowed"
    return w / total


def effective_sample_size(weights: np.ndarray) -> float:
    w = np.asarray(weights, dtype=float)
    return float(w.sum() ** 2 / (w @ w))


def weighted_update(
    batch: SampleBatch, eta: float, previous: SearchDistribution, cov_floor: float = 1e-8
) -> SearchDistribution:
    if batch.parameters.shape[1] != previous.dim:
        raise ValueError("batch dimension does not match the search distribution")
    d = sample_weights(batch.rewards, eta)
    mean = d @ batch.parameters
    centered = batch.parameters - mean
    cov = (centered * d[:, None]).T @ centered
    cov = 0.5 * (cov + cov.T) + cov_floor * np.eye(previous.dim)
    return SearchDistribution(mean, cov)


def gaussian_kl(p: SearchDistribution, q: SearchDistribution) -> float:
    """KL(p || q) between two multivariate Gaussians, in nats."""
    chol_q = np.linalg.cholesky(q.covariance)
    chol_p = np.linalg.cholesky(p.covariance)
    inv_lq_lp = np.linalg.solve(chol_q, chol_p)
    trace_term = float(np.sum(inv_lq_lp**2))
    diff = np.linalg.solve(chol_q, q.mean - p.mean)
    maha = float(diff @ diff)
    logdet_q = 2.0 * np.sum(np.log(np.diag(chol_q)))
    logdet_p = 2.0 * np.sum(np.log(np.diag(chol_p)))
    return max(0.0, 0.5 * (trace_term + maha - p.dim + logdet_q - logdet_p))


def reps_step(
    current: SearchDistribution,
    evaluate: Evaluator,
    config: RepsConfig,
    rng: np.random.Generator,
) -> tuple[SearchDistribution, IterationStats]:
    params = current.sample(config.samples_per_iteration, rng)
    rewards = np.empty(len(params))
    for i, theta in enumerate(params):
        value = float(evaluate(theta))
        if not math.isfinite(value):
            raise FloatingPointError(f"evaluator returned {value} for sample {i}: {theta.tolist()}")
        rewards[i] = value
    eta = solve_eta(rewards, config.epsilon, config.eta_min)
    new = weighted_update(SampleBatch(params, rewards), eta, current, config.cov_floor)
    stats = IterationStats(
        mean_reward=float(rewards.mean()),
        max_reward=float(rewards.max()),
        eta=eta,
        kl_to_previous=gaussian_kl(new, current),
        effective_sample_size=effective_sample_size(sample_weights(rewards, eta)),
    )
    return new, stats


def optimize(
    init: SearchDistribution,
    evaluate: Evaluator,
    config: RepsConfig,
    rng: np.random.Generator,
) -> tuple[SearchDistribution, list[IterationStats]]:
    dist = init
    curve = []
    for _ in range(config.num_iterations):
        dist, stats = reps_step(dist, evaluate, config, rng)
        curve.append(stats)
    return dist, curve


CURVE_COLUMNS = ("iteration", "mean_reward", "max_reward", "eta", "kl", "ess")


def curve_rows(curve: Sequence[IterationStats]) -> list[tuple]:
    return [
        (i, s.mean_reward, s.max_reward, s.eta, s.kl_to_previous, s.effective_sample_size)
        for i, s in enumerate(curve)
    ]
