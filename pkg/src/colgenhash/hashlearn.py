"""Hash-function subproblem: maximize the dual-weighted triplet score.

Given non-negative per-triplet weights mu, find the hyperplane whose binary
output maximizes sum_t mu_t * (|h(x_i)-h(x_k)| - |h(x_i)-h(x_j)|). The sign
function is smoothed by a logistic sigmoid for local ascent; candidates are
ranked by the exact binarized objective.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .hashcore import HashFunction


@dataclass(frozen=True)
class DualWeights:
    """Non-negative multipliers over triplets, stored as parallel arrays."""

    triplets: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.triplets, dtype=np.int64).reshape(-1, 3)
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if len(t) != len(v):
            raise ValueError("one weight per triplet required")
        if np.any(v < 0):
            raise ValueError("dual weights must be non-negative")
        object.__setattr__(self, "triplets", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_dict(cls, d):
        items = sorted(d.items())
        trips = np.array([t for t, _ in items], dtype=np.int64).reshape(-1, 3)
        vals = np.array([v for _, v in items], dtype=np.float64)
        return cls(trips, vals)

    def as_dict(self):
        return {tuple(t): v for t, v in zip(self.triplets, self.values)}

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class SubproblemConfig:
    temperature: float = 1.0
    restarts: int = 4
    max_inner_iters: int = 200
    grad_tol: float = 1e-6

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")


def _check_indices(mu, ds):
    if len(mu) and (mu.triplets.min() < 0 or mu.triplets.max() >= ds.n):
        raise ValueError("triplet index out of range for dataset")


def triplet_objective(h, mu, ds):
    """Exact weighted triplet score of a hash function's binarized outputs."""
    _check_indices(mu, ds)
    if len(mu) == 0:
        return 0.0
    bits = h(ds.x).astype(np.int8)
    i, j, k = mu.triplets.T
    delta = np.abs(bits[i] - bits[k]) - np.abs(bits[i] - bits[j])
    return float(mu.values @ delta)


def _sigmoid(z):
    s = np.empty_like(z)
    pos = z >= 0
    s[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    s[~pos] = ez / (1.0 + ez)
    return s


def _smoothed_value(v, b, mu, ds, temperature):
    """Objective only; cheaper than the full gradient during line search."""
    s = _sigmoid(temperature * (ds.x @ v + b))
    i, j, k = mu.triplets.T
    return float(mu.values @ ((s[i] - s[k]) ** 2 - (s[i] - s[j]) ** 2))


def smoothed_objective_and_gradient(v, b, mu, ds, temperature=1.0):
    """Sigmoid-smoothed subproblem objective and its exact gradient.

    h~(x) = sigmoid(temperature * (v.x + b)); the objective replaces the
    absolute differences with squared differences of h~, which coincide on
    binary outputs. Returns (value, gradient over (v, b)) of length d+1.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    v = np.asarray(v, dtype=np.float64)
    b = float(b)
    if not (np.all(np.isfinite(v)) and np.isfinite(b)):
        raise FloatingPointError("non-finite hyperplane parameters")
    _check_indices(mu, ds)
    d = ds.dim
    if v.shape != (d,):
        raise ValueError(f"expected normal of dimension {d}, got shape {v.shape}")
    if len(mu) == 0:
        return 0.0, np.zeros(d + 1)

    s = _sigmoid(temperature * (ds.x @ v + b))
    i, j, k = mu.triplets.T
    dik = s[i] - s[k]
    dij = s[i] - s[j]
    value = float(mu.values @ (dik**2 - dij**2))

    a = 2.0 * mu.values * dik
    c = 2.0 * mu.values * dij
    n = ds.n
    coef = (
        np.bincount(i, weights=a - c, minlength=n)
        - np.bincount(k, weights=a, minlength=n)
        + np.bincount(j, weights=c, minlength=n)
    )
    sig_grad = temperature * s * (1.0 - s)
    cg = coef * sig_grad
    grad = np.empty(d + 1)
    grad[:d] = ds.x.T @ cg
    grad[d] = cg.sum()
    return value, grad


def spectral_init(mu, ds):
    """Initial hyperplane from the sign-free relaxation.

    Dropping the sign function leaves a quadratic form v.T M v with
    M = sum_t mu_t [(x_i-x_k)(x_i-x_k)^T - (x_i-x_j)(x_i-x_j)^T]; the leading
    unit-norm eigenvector maximizes it. The bias centers the responses at
    their median. A zero M (e.g. all-zero weights) falls back to the first
    basis vector; an eigensolver failure falls back to the best of a few
    deterministic random planes scored by the relaxation.
    """
    if len(mu) == 0:
        raise ValueError("need at least one weighted triplet")
    _check_indices(mu, ds)
    x = ds.x
    i, j, k = mu.triplets.T
    dik = x[i] - x[k]
    dij = x[i] - x[j]
    m = dik.T @ (mu.values[:, None] * dik) - dij.T @ (mu.values[:, None] * dij)
    m = 0.5 * (m + m.T)

    if not np.any(m != 0):
        v = np.zeros(ds.dim)
        v[0] = 1.0
    else:
        try:
            vals, vecs = eigh(m)
            v = vecs[:, -1]
        except np.linalg.LinAlgError:
            rng = np.random.default_rng(0)
            planes = rng.standard_normal((8, ds.dim))
            planes /= np.linalg.norm(planes, axis=1, keepdims=True)
            v = planes[int(np.argmax([p @ m @ p for p in planes]))]
    v = v / np.linalg.norm(v)
    # deterministic sign: largest-magnitude component positive
    lead = int(np.argmax(np.abs(v)))
    if v[lead] < 0:
        v = -v
    b = -float(np.median(x @ v))
    return v, b


def _ascend(v, b, mu, ds, cfg):
    """Backtracking gradient ascent on the smoothed objective."""
    theta = np.append(v, b)
    d = ds.dim

    def fval(t):
        return _smoothed_value(t[:d], t[d], mu, ds, cfg.temperature)

    f, g = smoothed_objective_and_gradient(theta[:d], theta[d], mu, ds, cfg.temperature)
    step = 1.0
    for _ in range(cfg.max_inner_iters):
        gnorm2 = float(g @ g)
        if np.sqrt(gnorm2) <= cfg.grad_tol:
            break
        accepted = False
        while step > 1e-12:
            cand = theta + step * g
            fc = fval(cand)
            if np.isfinite(fc) and fc >= f + 1e-4 * step * gnorm2:
                theta, f = cand, fc
                accepted = True
                step *= 2.0
                break
            step *= 0.5
        if not accepted:
            break
        f, g = smoothed_objective_and_gradient(theta[:d], theta[d], mu, ds, cfg.temperature)
    return theta[:d], theta[d]


def learn_hash_function(mu, ds, cfg=SubproblemConfig(), seed=0):
    """Best hyperplane hash function for the given triplet weights.

    Runs local ascent from the spectral initializer and from cfg.restarts
    random planes; every start and every ascended point is a candidate, and
    the one with the largest binarized objective wins (earliest on ties).
    """
    if len(mu) == 0 or not np.any(mu.values > 0):
        raise ValueError("need at least one strictly positive dual weight")
    rng = np.random.default_rng(seed)

    starts = [spectral_init(mu, ds)]
    for _ in range(cfg.restarts):
        v = rng.standard_normal(ds.dim)
        v /= np.linalg.norm(v)
        starts.append((v, -float(np.median(ds.x @ v))))

    best = None
    best_obj = -np.inf
    for v0, b0 in starts:
        v1, b1 = _ascend(np.asarray(v0, dtype=np.float64), b0, mu, ds, cfg)
        for v, b in ((v0, b0), (v1, b1)):
            if not (np.all(np.isfinite(v)) and np.isfinite(b)) or not np.any(v != 0):
                continue
            h = HashFunction(np.asarray(v, dtype=np.float64), b)
            obj = triplet_objective(h, mu, ds)
            if np.isfinite(obj) and obj > best_obj:
                best, best_obj = h, obj
    if best is None:
        raise FloatingPointError("every subproblem candidate was non-finite")
    return best
