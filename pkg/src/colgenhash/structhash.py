"""Ranking-loss hashing: 1-slack structured SVM solved by cutting planes,
wrapped in a column-generation loop over hash functions.

The master LP fits non-negative bit weights against aggregated ranking
constraints; its duals are spread over the incorrectly ranked pairs of each
constraint's rankings to form the triplet weights that drive the next
hash-function subproblem. Stage-wise mode re-solves only two weights per new
bit (the new bit's own and one shared by all previous bits) and ships a
unit-weight model.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .cghash import SolverError
from .hashcore import HashFunction, HashModel
from .hashlearn import DualWeights, SubproblemConfig, learn_hash_function
from .rankloss import RankScoreKind, label_loss, most_violated

LP_TOL = 1e-8


@dataclass(frozen=True)
class StructConfig:
    loss: RankScoreKind = field(default_factory=lambda: RankScoreKind("ndcg", K=10))
    C: float = 10.0
    bits: int = 16
    eps_cp: float = 0.01
    mode: str = "full"
    max_cp_iters: int = 100
    subproblem: SubproblemConfig = field(default_factory=SubproblemConfig)

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.bits < 1:
            raise ValueError("bits must be >= 1")
        if self.eps_cp <= 0:
            raise ValueError("eps_cp must be positive")
        if self.mode not in ("full", "stagewise"):
            raise ValueError("mode must be 'full' or 'stagewise'")
        if self.max_cp_iters < 1:
            raise ValueError("max_cp_iters must be >= 1")


@dataclass(frozen=True)
class WorkingSetEntry:
    """One aggregated constraint: which queries participate (c) and their
    rankings, with the averaged loss and feature delta cached."""

    c: np.ndarray
    y_per_query: tuple
    loss: float
    feat_delta: np.ndarray


@dataclass
class CuttingPlaneResult:
    """Solver state at exit: primal (w, xi), duals per working-set entry,
    aggregated (query, ranking) duals, and run diagnostics."""

    w: np.ndarray
    xi: float
    lambdas: np.ndarray
    working_set: list
    mu: dict
    iterations: int
    converged: bool
    max_lp_gap: float
    inference_seconds: float
    inference_calls: int


def codes_from_functions(functions, x):
    """(n, m) binary codes of rows under an ordered function list."""
    if not functions:
        return np.zeros((x.shape[0], 0), dtype=np.uint8)
    v = np.stack([f.v for f in functions])
    b = np.array([f.b for f in functions])
    return (x @ v.T + b > 0).astype(np.uint8)


def _pair_phi(codes, query_row, cand_rows):
    """phi(x_i, x_j) = -|code_i - code_j| for each candidate, shape (n_cand, m)."""
    diff = codes[np.asarray(cand_rows)].astype(np.int16) - codes[query_row].astype(np.int16)
    return -np.abs(diff).astype(np.float64)


def joint_feature(nbhd, y, codes):
    """Joint feature map of one query and a ranking.

    Sum over relevant j and irrelevant k of y_jk [phi(i,j) - phi(i,k)]
    normalized by |X+||X-|, with y_jk = +1 when j precedes k.
    """
    y = np.asarray(y, dtype=np.int64)
    pos = {int(idx): p for p, idx in enumerate(y)}
    want = set(nbhd.relevant) | set(nbhd.irrelevant)
    if len(y) != len(want) or set(pos) != want:
        raise ValueError("ranking does not cover the query's neighbor sets")
    m = codes.shape[1]
    out = np.zeros(m)
    for j in nbhd.relevant:
        phi_j = -np.abs(codes[j].astype(np.int16) - codes[nbhd.query].astype(np.int16))
        for k in nbhd.irrelevant:
            phi_k = -np.abs(codes[k].astype(np.int16) - codes[nbhd.query].astype(np.int16))
            y_jk = 1.0 if pos[j] < pos[k] else -1.0
            out += y_jk * (phi_j - phi_k)
    return out / (len(nbhd.relevant) * len(nbhd.irrelevant))


def _flip_weights(y, rel_set):
    """Per-candidate multiplicities of incorrectly ranked pairs.

    Walking the ranking once: a relevant item's weight is the number of
    irrelevant items before it, an irrelevant item's weight the number of
    relevant items after it.
    """
    y = np.asarray(y, dtype=np.int64)
    rel_mask = np.array([int(idx) in rel_set for idx in y])
    irr_seen = np.cumsum(~rel_mask)
    g = np.where(rel_mask, irr_seen - (~rel_mask).astype(int), 0)  # irr strictly before
    rel_after = np.cumsum(rel_mask[::-1])[::-1] - rel_mask.astype(int)
    f = np.where(~rel_mask, rel_after, 0)
    return y, rel_mask, np.where(rel_mask, g, f)


def delta_psi(nbhd, y, codes):
    """Psi(true) - Psi(y): 2/(PN) sum over flipped pairs of (|x~i-x~k| - |x~i-x~j|)."""
    rel_set = set(nbhd.relevant)
    y_arr = np.asarray(y, dtype=np.int64)
    want = rel_set | set(nbhd.irrelevant)
    if len(y_arr) != len(want) or set(y_arr.tolist()) != want:
        raise ValueError("ranking does not cover the query's neighbor sets")
    yy, rel_mask, counts = _flip_weights(y, rel_set)
    phi = _pair_phi(codes, nbhd.query, yy)
    signed = np.where(rel_mask, counts, -counts).astype(np.float64)
    return 2.0 * (signed @ phi) / (len(nbhd.relevant) * len(nbhd.irrelevant))


class _QueryPhi:
    """Per-query candidate features in the effective weight space."""

    __slots__ = ("cands", "phi", "lut")

    def __init__(self, cands, phi):
        self.cands = np.asarray(cands, dtype=np.int64)
        self.phi = phi
        self.lut = np.full(int(self.cands.max()) + 1, -1, dtype=np.int64)
        self.lut[self.cands] = np.arange(len(self.cands))

    def scores(self, w):
        vals = self.phi @ w
        return {int(c): float(v) for c, v in zip(self.cands, vals)}


def _entry_feat_delta(nbhd, y, kind, qphi):
    """delta-Psi in the effective feature space spanned by the query's phi rows."""
    p, n = len(nbhd.relevant), len(nbhd.irrelevant)
    phi_cand, lut = qphi.phi, qphi.lut
    if kind.kind == "sndcg":
        out = np.zeros(phi_cand.shape[1])
        for i in nbhd.relevant:
            simple = np.asarray(y[i], dtype=np.int64)
            cut = int(np.nonzero(simple == i)[0][0])
            if cut:
                out += cut * phi_cand[lut[int(i)]] - phi_cand[lut[simple[:cut]]].sum(axis=0)
        return 2.0 * out / (p * n)
    yy, rel_mask, counts = _flip_weights(y, set(nbhd.relevant))
    signed = np.where(rel_mask, counts, -counts).astype(np.float64)
    return 2.0 * (signed @ phi_cand[lut[yy]]) / (p * n)


def _maximal_loss_ranking(nbhd, kind):
    """Deterministic worst ranking: every relevant item behind every
    irrelevant one (for sndcg, last in each simple ranking)."""
    if kind.kind == "sndcg":
        irr = np.array(sorted(nbhd.irrelevant), dtype=np.int64)
        return {i: np.append(irr, i) for i in nbhd.relevant}
    return np.array(sorted(nbhd.irrelevant) + sorted(nbhd.relevant), dtype=np.int64)


def solve_1slack_master(ws, C):
    """Exact LP solve of the 1-slack restricted master.

    min 1.w + C xi  s.t.  w.feat_delta_e >= loss_e - xi  for every entry,
    w >= 0, xi >= 0. Returns (w, xi, lambdas) with the duals read from the
    optimal basis; raises SolverError on solver failure.
    """
    if not ws:
        raise ValueError("working set is empty")
    a = np.stack([e.feat_delta for e in ws])
    losses = np.array([e.loss for e in ws])
    n_e, m = a.shape
    c = np.append(np.ones(m), C)
    a_ub = np.hstack([-a, -np.ones((n_e, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=-losses, bounds=[(0, None)] * (m + 1), method="highs-ds")
    if not res.success:
        raise SolverError(f"1-slack master LP failed: {res.message}")
    w = np.maximum(res.x[:m], 0.0)
    xi = max(float(res.x[m]), 0.0)
    lambdas = np.maximum(-res.ineqlin.marginals, 0.0)
    slack = a @ w + xi - losses
    if np.max(np.abs(lambdas * slack), initial=0.0) > LP_TOL * (1.0 + abs(res.fun)):
        raise SolverError("complementary slackness violated beyond tolerance")
    return w, xi, lambdas


def _cutting_plane_core(phi_by_query, nbhds, kind, C, eps_cp, max_iters):
    """Algorithm shared by the full and stage-wise masters.

    phi_by_query[q] holds the query's candidate features (a _QueryPhi) in
    whatever effective weight space the caller set up.
    """
    if not nbhds:
        raise ValueError("need at least one query neighborhood")
    n = len(nbhds)
    c_vec = np.ones(n)
    y_cur = [_maximal_loss_ranking(nb, kind) for nb in nbhds]

    ws = []
    lambdas = np.zeros(0)
    w = None
    xi = 0.0
    max_gap = 0.0
    inf_seconds = 0.0
    inf_calls = 0
    converged = False
    iterations = 0

    for _ in range(max_iters):
        iterations += 1
        feat = np.zeros(phi_by_query[0].phi.shape[1])
        loss_sum = 0.0
        for q, nb in enumerate(nbhds):
            if c_vec[q]:
                feat += _entry_feat_delta(nb, y_cur[q], kind, phi_by_query[q])
                loss_sum += label_loss(kind, y_cur[q], nb)
        ws.append(WorkingSetEntry(c_vec.copy(), tuple(y_cur), loss_sum / n, feat / n))

        w, xi, lambdas = solve_1slack_master(ws, C)
        primal = float(w.sum() + C * xi)
        dual = float(lambdas @ np.array([e.loss for e in ws]))
        max_gap = max(max_gap, abs(primal - dual) / (1.0 + abs(primal)))

        c_vec = np.zeros(n)
        y_cur = []
        viol_cur = []
        t0 = time.perf_counter()
        for q, nb in enumerate(nbhds):
            qphi = phi_by_query[q]
            scores = qphi.scores(w)
            y_star = most_violated(scores, nb, kind)
            feat_q = _entry_feat_delta(nb, y_star, kind, qphi)
            viol = label_loss(kind, y_star, nb) - float(w @ feat_q)
            y_cur.append(y_star)
            viol_cur.append(viol)
            c_vec[q] = 1.0 if viol > 0 else 0.0
        inf_seconds += time.perf_counter() - t0
        inf_calls += n

        violation = float(np.sum([v for v, c in zip(viol_cur, c_vec) if c])) / n
        if violation <= xi + eps_cp:
            converged = True
            break

    mu = {}
    for lam, entry in zip(lambdas, ws):
        if lam <= 0:
            continue
        for q, nb in enumerate(nbhds):
            if entry.c[q]:
                key = (q, _ranking_key(entry.y_per_query[q], kind))
                mu[key] = mu.get(key, 0.0) + float(lam)

    return CuttingPlaneResult(
        w=w, xi=xi, lambdas=lambdas, working_set=ws, mu=mu,
        iterations=iterations, converged=converged, max_lp_gap=max_gap,
        inference_seconds=inf_seconds, inference_calls=inf_calls,
    )


def _ranking_key(y, kind):
    if kind.kind == "sndcg":
        return tuple((int(i), tuple(int(v) for v in y[i])) for i in sorted(y))
    return tuple(int(v) for v in y)


def cutting_plane(codes, nbhds, kind, C, eps_cp, max_cp_iters=100):
    """Cutting-plane solve of the 1-slack master over the given codes.

    Starts from the maximal-loss ranking for every query; each round adds the
    aggregated most-violated constraint, re-solves the LP, and stops when the
    aggregate violation exceeds the current slack by at most eps_cp. Returns
    a CuttingPlaneResult whose mu maps (query, ranking) to its summed dual.
    """
    phi_by_query = []
    for nb in nbhds:
        cands = sorted(nb.relevant) + sorted(nb.irrelevant)
        phi_by_query.append(_QueryPhi(cands, _pair_phi(codes, nb.query, cands)))
    return _cutting_plane_core(phi_by_query, nbhds, kind, C, eps_cp, max_cp_iters)


def aggregate_mu(lambdas, ws, nbhds):
    """Triplet-level dual weights from the 1-slack duals.

    Every (query, ranking) pair with positive aggregated dual spreads
    2/(|X+||X-|) times that dual onto each of its incorrectly ranked pairs.
    """
    acc = {}
    for lam, entry in zip(lambdas, ws):
        if lam <= 0:
            continue
        for q, nb in enumerate(nbhds):
            if not entry.c[q]:
                continue
            y = entry.y_per_query[q]
            p, n = len(nb.relevant), len(nb.irrelevant)
            unit = 2.0 * float(lam) / (p * n)
            for j, k in _flipped_pairs(y, nb):
                key = (nb.query, j, k)
                acc[key] = acc.get(key, 0.0) + unit
    if not acc:
        return DualWeights(np.empty((0, 3), dtype=np.int64), np.empty(0))
    items = sorted(acc.items())
    return DualWeights(
        np.array([t for t, _ in items], dtype=np.int64),
        np.array([v for _, v in items]),
    )


def _flipped_pairs(y, nbhd):
    """Pairs (relevant j, irrelevant k) with k ranked before j."""
    rel_set = set(nbhd.relevant)
    if isinstance(y, dict):
        for j in nbhd.relevant:
            simple = np.asarray(y[j], dtype=np.int64)
            cut = int(np.nonzero(simple == j)[0][0])
            for k in simple[:cut]:
                yield int(j), int(k)
        return
    irr_before = []
    for idx in np.asarray(y, dtype=np.int64):
        idx = int(idx)
        if idx in rel_set:
            for k in irr_before:
                yield idx, k
        else:
            irr_before.append(idx)


@dataclass(frozen=True)
class StagewiseSolution:
    w_t: float
    w_shared: float
    cp: CuttingPlaneResult


def solve_stagewise_master(shared_weight_prev, new_bit, codes, nbhds, kind, C, eps_cp,
                           max_cp_iters=100):
    """Two-variable cutting-plane master for stage-wise training.

    `new_bit` holds the newest bit of every row; `codes` the previous bits.
    The effective features collapse the previous bits onto one shared weight,
    so the LP has at most three columns. With no previous bits this is a
    one-variable problem and w_shared falls back to `shared_weight_prev`.
    """
    new_bit = np.asarray(new_bit, dtype=np.uint8).reshape(-1, 1)
    old = np.asarray(codes, dtype=np.uint8)
    has_old = old.size > 0 and old.shape[1] > 0

    phi_by_query = []
    for nb in nbhds:
        cands = sorted(nb.relevant) + sorted(nb.irrelevant)
        phi_new = _pair_phi(new_bit, nb.query, cands)
        if has_old:
            phi_old = _pair_phi(old, nb.query, cands).sum(axis=1, keepdims=True)
            phi = np.hstack([phi_old, phi_new])
        else:
            phi = phi_new
        phi_by_query.append(_QueryPhi(cands, phi))

    res = _cutting_plane_core(phi_by_query, nbhds, kind, C, eps_cp, max_cp_iters)
    if has_old:
        return StagewiseSolution(float(res.w[1]), float(res.w[0]), res)
    return StagewiseSolution(float(res.w[0]), float(shared_weight_prev), res)


def train_structhash(ds, nbhds, cfg, seed=0, callback=None):
    """Column-generation training loop for ranking-loss hashing.

    Triplet weights start uniform, C/n mass on one maximal-loss ranking per
    query; each round learns a hash function on the aggregated triplet duals,
    then refreshes weights and duals with the full or stage-wise master.
    Stage-wise models ship unit weights.
    """
    if not nbhds:
        raise ValueError("need at least one query neighborhood")
    n = len(nbhds)
    kind = cfg.loss

    mean = ds.x.mean(axis=0)
    std = ds.x.std(axis=0)
    std[std == 0] = 1.0
    ds_std = type(ds)((ds.x - mean) / std, ds.labels)

    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(cfg.bits)]

    # initial duals: every pair of the maximal-loss ranking is flipped
    acc = {}
    for nb in nbhds:
        unit = 2.0 * (cfg.C / n) / (len(nb.relevant) * len(nb.irrelevant))
        for j in nb.relevant:
            for k in nb.irrelevant:
                acc[(nb.query, j, k)] = unit
    items = sorted(acc.items())
    duals = DualWeights(np.array([t for t, _ in items], dtype=np.int64),
                        np.array([v for _, v in items]))

    functions = []
    w = np.zeros(0)
    w_shared = 0.0

    for r in range(cfg.bits):
        t0 = time.perf_counter()
        h_std = learn_hash_function(duals, ds_std, cfg.subproblem, seeds[r])
        v_raw = h_std.v / std
        functions.append(HashFunction(v_raw, h_std.b - float(v_raw @ mean)))
        codes = codes_from_functions(functions, ds.x)

        if cfg.mode == "full":
            res = cutting_plane(codes, nbhds, kind, cfg.C, cfg.eps_cp, cfg.max_cp_iters)
            w = res.w
        else:
            sol = solve_stagewise_master(
                w_shared, codes[:, -1], codes[:, :-1], nbhds, kind, cfg.C, cfg.eps_cp,
                cfg.max_cp_iters,
            )
            res = sol.cp
            w_shared = sol.w_shared
            w = np.append(np.full(r, sol.w_shared), sol.w_t)
        duals = aggregate_mu(res.lambdas, res.working_set, nbhds)
        if len(duals) == 0 or not np.any(duals.values > 0):
            # no active constraints: fall back to uniform weights on the truth-
            # violating pairs so the next subproblem stays well-posed
            duals = DualWeights(np.array([t for t, _ in items], dtype=np.int64),
                                np.array([v for _, v in items]))

        if callback is not None:
            callback(
                dict(
                    bit=r + 1,
                    cp_iterations=res.iterations,
                    cp_converged=res.converged,
                    master_objective=float(res.w.sum() + cfg.C * res.xi),
                    lp_gap=res.max_lp_gap,
                    inference_seconds=res.inference_seconds,
                    inference_calls=res.inference_calls,
                    seconds=time.perf_counter() - t0,
                )
            )

    if cfg.mode == "stagewise":
        w = np.ones(len(functions))
    k_note = f"@{kind.K}" if kind.kind == "ndcg" else ""
    tag = (
        f"method=structhash loss={kind.kind}{k_note} mode={cfg.mode} bits={len(functions)}"
    )
    return HashModel(tuple(functions), w, tag)
