"""Independent reference computations shared by the unit and acceptance tests."""
import numpy as np


def grid_eta(rewards, epsilon, n=10**6, lo=-12.0, hi=6.0):
    """Brute-force minimizer of the dual over a dense grid in log(eta)."""
    r = np.asarray(rewards, dtype=float)
    eta = np.exp(np.linspace(lo, hi, n))
    top = r.max()
    values = np.empty(n)
    for chunk in np.array_split(np.arange(n), 20):
        e = eta[chunk][:, None]
        values[chunk] = eta[chunk] * epsilon + top + eta[chunk] * np.log(np.mean(np.exp((r - top) / e), axis=1))
    return float(eta[np.argmin(values)])


def sphere_problem(seed, d):
    """Random target inside the unit ball and the negated squared-distance objective."""
    rng = np.random.default_rng(seed)
    target = rng.standard_normal(d)
    target *= rng.uniform() ** (1 / d) / np.linalg.norm(target)
    return rng, target, (lambda th: -float(np.sum((th - target) ** 2)))
