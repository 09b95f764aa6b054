"""Triplet-loss hashing by column generation.

Alternates two steps: a restricted master that fits non-negative bit weights
under a smooth convex loss on triplet margins, and the hash-function
subproblem weighted by duals recovered from the master's KKT conditions.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .hashcore import HashModel
from .hashlearn import DualWeights, SubproblemConfig, learn_hash_function

LOSSES = ("squared-hinge", "logistic")
REGULARIZERS = ("l1", "linf")

DUAL_FEASIBILITY_SLACK = 1e-6


class SolverError(RuntimeError):
    """Optimizer failed to converge; `best` carries the last iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class CGConfig:
    loss: str = "squared-hinge"
    regularizer: str = "l1"
    C: float = 10.0
    C_prime: float = 1.0
    bits: int = 16
    master_tol: float = 1e-6
    subproblem: SubproblemConfig = field(default_factory=SubproblemConfig)

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")
        if self.regularizer not in REGULARIZERS:
            raise ValueError(f"regularizer must be one of {REGULARIZERS}")
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.regularizer == "linf" and self.C_prime <= 0:
            raise ValueError("C_prime must be positive under linf regularization")
        if self.bits < 1:
            raise ValueError("bits must be >= 1")


@dataclass(frozen=True)
class MasterSolution:
    """Optimal (w, margins, objective) of the restricted master plus duals."""

    w: np.ndarray
    rho: np.ndarray
    objective: float
    duals: DualWeights


def _loss_value_grad(rho, kind):
    """Per-triplet loss f(rho) and derivative f'(rho)."""
    if kind == "squared-hinge":
        gap = np.maximum(1.0 - rho, 0.0)
        return gap**2, -2.0 * gap
    if kind == "logistic":
        val = np.logaddexp(0.0, -rho)
        deriv = -1.0 / (1.0 + np.exp(np.minimum(rho, 500.0)))
        return val, deriv
    raise ValueError(f"unknown loss {kind!r}")


def _loss_curvature(rho, kind):
    """Second derivative f''(rho) (one-sided 2*(rho<1) for the squared hinge)."""
    if kind == "squared-hinge":
        return np.where(rho < 1.0, 2.0, 0.0)
    if kind == "logistic":
        s = 1.0 / (1.0 + np.exp(np.minimum(-rho, 500.0)))
        return s * (1.0 - s)
    raise ValueError(f"unknown loss {kind!r}")


def recover_duals(triplets, rho, loss, C):
    """Per-triplet duals from primal margins via the KKT stationarity rule.

    mu = -C f'(rho): 2C max(1-rho, 0) for the squared hinge and
    C / (exp(rho) + 1) for the logistic loss. Always non-negative.
    """
    rho = np.asarray(rho, dtype=np.float64)
    _, deriv = _loss_value_grad(rho, loss)
    return DualWeights(triplets, np.maximum(-C * deriv, 0.0))


def dual_objective(mu_values, loss, C):
    """Value of the dual objective at the given multipliers (l1 master).

    Squared hinge: sum mu - mu^2 / (4C). Logistic: the conjugate-based
    expression sum (mu - C) log(C - mu) - mu log mu + C log C with the
    0 log 0 = 0 convention (the C log C term is an additive constant that
    makes strong duality hold exactly; it vanishes at C = 1).
    """
    mu = np.asarray(mu_values, dtype=np.float64)
    if loss == "squared-hinge":
        return float(np.sum(mu - mu**2 / (4.0 * C)))
    if loss == "logistic":
        mu = np.clip(mu, 0.0, C)
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(mu < C, (mu - C) * np.log(np.maximum(C - mu, 1e-300)), 0.0)
            b = np.where(mu > 0, mu * np.log(np.maximum(mu, 1e-300)), 0.0)
        return float(np.sum(a - b) + len(mu) * C * np.log(C))
    raise ValueError(f"unknown loss {loss!r}")


def delta_h_matrix(hashes, ts, ds):
    """Triplet-by-function matrix of |h(x_i)-h(x_k)| - |h(x_i)-h(x_j)|."""
    if len(ts) == 0:
        return np.zeros((0, len(hashes)))
    i, j, k = ts.triplets.T
    cols = []
    for h in hashes:
        bits = h(ds.x).astype(np.int8)
        cols.append(np.abs(bits[i] - bits[k]) - np.abs(bits[i] - bits[j]))
    return np.stack(cols, axis=1).astype(np.float64)


def _projected_grad_norm(w, g, lo, hi):
    return float(np.max(np.abs(w - np.clip(w - g, lo, hi)), initial=0.0))


def _solve_box(fun, hess, w0, lo, hi, tol):
    """Minimize a smooth convex objective over a box to projected-gradient
    sup-norm <= tol; quasi-Newton first, projected Newton polish on the free
    variables after."""
    bounds = [(l, h) for l, h in zip(lo, hi)]
    res = minimize(
        fun, w0, jac=True, method="L-BFGS-B", bounds=bounds,
        options=dict(maxiter=5000, maxfun=20000, ftol=1e-18, gtol=tol * 1e-2, maxls=60),
    )
    w = np.clip(res.x, lo, hi)
    f, g = fun(w)
    for _ in range(200):
        if _projected_grad_norm(w, g, lo, hi) <= tol:
            return w
        at_lo = np.isclose(w, lo) & (g > 0)
        at_hi = np.isclose(w, hi) & (g < 0)
        free = ~(at_lo | at_hi)
        if not np.any(free):
            break
        h = hess(w)[np.ix_(free, free)]
        h = h + 1e-12 * np.eye(h.shape[0])
        try:
            step_free = np.linalg.solve(h, -g[free])
        except np.linalg.LinAlgError:
            break
        direction = np.zeros_like(w)
        direction[free] = step_free
        moved = False
        step = 1.0
        for _ in range(60):
            cand = np.clip(w + step * direction, lo, hi)
            fc, gc = fun(cand)
            better_pg = _projected_grad_norm(cand, gc, lo, hi) < _projected_grad_norm(w, g, lo, hi)
            if fc < f or (fc == f and better_pg):
                moved = bool(np.any(cand != w))
                w, f, g = cand, fc, gc
                break
            step *= 0.5
        if not moved:
            break
    if _projected_grad_norm(w, g, lo, hi) <= tol:
        return w
    raise SolverError(
        f"master solver stalled at projected-gradient norm "
        f"{_projected_grad_norm(w, g, lo, hi):.3e} (tol {tol:.1e})",
        best=w,
    )


def solve_master(hashes, ts, ds, cfg, w0=None):
    """Optimal bit weights for the current working set of hash functions.

    l1: minimize 1.w + C sum f(rho) over w >= 0.
    linf: minimize sum f(rho) over 0 <= w <= C_prime (box form).
    rho is the per-triplet margin w . delta_h. Duals come from recover_duals.
    """
    if len(hashes) == 0:
        raise ValueError("working set of hash functions is empty")
    m = len(hashes)
    a = delta_h_matrix(hashes, ts, ds)

    if len(ts) == 0:
        w = np.zeros(m)
        return MasterSolution(w, np.zeros(0), 0.0, DualWeights(ts.triplets, np.zeros(0)))

    l1 = cfg.regularizer == "l1"
    lo = np.zeros(m)
    hi = np.full(m, np.inf if l1 else cfg.C_prime)

    def fun(w):
        rho = a @ w
        val, deriv = _loss_value_grad(rho, cfg.loss)
        if l1:
            return float(w.sum() + cfg.C * val.sum()), 1.0 + cfg.C * (a.T @ deriv)
        return float(val.sum()), a.T @ deriv

    def hess(w):
        curv = _loss_curvature(a @ w, cfg.loss)
        scale = cfg.C if l1 else 1.0
        return scale * (a.T * curv) @ a

    if w0 is None:
        w0 = np.zeros(m)
    w = _solve_box(fun, hess, np.clip(w0, lo, hi), lo, hi, cfg.master_tol)
    rho = a @ w
    objective = fun(w)[0]
    duals = recover_duals(ts.triplets, rho, cfg.loss, cfg.C)
    return MasterSolution(w, rho, objective, duals)


def train_cghash(ds, ts, cfg, seed=0, callback=None):
    """Column-generation training loop for triplet-loss hashing.

    Starts from uniform triplet weights 1/|T|; each round learns the hash
    function maximizing the dual-weighted triplet score, re-solves the master
    and refreshes the duals. Stops at the bit budget, when no dual constraint
    is violated (subproblem score <= 1), or when the subproblem returns a
    column already in the working set.

    Features are standardized internally for the sigmoid-smoothed subproblem;
    learned hyperplanes are folded back to raw coordinates. `callback`, when
    given, receives one dict per accepted bit with the master diagnostics.
    """
    if len(ts) == 0:
        raise ValueError("triplet set is empty")

    mean = ds.x.mean(axis=0)
    std = ds.x.std(axis=0)
    std[std == 0] = 1.0
    ds_std = type(ds)((ds.x - mean) / std, ds.labels)

    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(cfg.bits)]

    mu = DualWeights(ts.triplets, np.full(len(ts), 1.0 / len(ts)))
    hashes = []
    columns = []
    w = np.zeros(0)
    stop_note = ""

    for r in range(cfg.bits):
        t0 = time.perf_counter()
        if not np.any(mu.values > 0):
            # zero training loss: every dual constraint is slack
            stop_note = f" early-stop=zero-loss@bit{r + 1}"
            break
        h_std = learn_hash_function(mu, ds_std, cfg.subproblem, seeds[r])
        v_raw = h_std.v / std
        h = type(h_std)(v_raw, h_std.b - float(v_raw @ mean))

        i, j, k = ts.triplets.T
        bits_vec = h(ds.x).astype(np.int8)
        col = (np.abs(bits_vec[i] - bits_vec[k]) - np.abs(bits_vec[i] - bits_vec[j])).astype(
            np.float64
        )
        sub_obj = float(mu.values @ col)

        if r > 0 and sub_obj <= 1.0 + DUAL_FEASIBILITY_SLACK:
            stop_note = f" early-stop=dual-feasible@bit{r + 1}"
            break
        if any(np.array_equal(col, c) for c in columns):
            stop_note = f" early-stop=duplicate@bit{r + 1}"
            break

        hashes.append(h)
        columns.append(col)
        sol = solve_master(hashes, ts, ds, cfg, w0=np.append(w, 0.0))
        w = sol.w
        mu = sol.duals

        if callback is not None:
            dual_obj = (
                dual_objective(mu.values, cfg.loss, cfg.C)
                if cfg.regularizer == "l1"
                else None
            )
            callback(
                dict(
                    bit=r + 1,
                    subproblem_objective=sub_obj,
                    master_objective=sol.objective,
                    dual_objective=dual_obj,
                    duality_gap=None if dual_obj is None else abs(sol.objective - dual_obj),
                    seconds=time.perf_counter() - t0,
                )
            )

    tag = f"method=cghash loss={cfg.loss} reg={cfg.regularizer} bits={len(hashes)}{stop_note}"
    return HashModel(tuple(hashes), w, tag)
