"""Retrieval evaluation: Prec@K, NDCG@K, AP, AUC, PR curves, LSH baseline."""

from dataclasses import dataclass

import numpy as np

from .data import ConfigError
from .hashcore import HashFunction, HashModel, rank_database
from .rankloss import ndcg_discount


@dataclass(frozen=True)
class MetricsReport:
    """Per-metric means across queries as (method, bits, metric, K, value) rows."""

    rows: tuple

    def value(self, metric, K=None):
        for _, _, name, k, val in self.rows:
            if name == metric and k == K:
                return val
        raise KeyError(f"no row for metric {metric!r} with K={K}")

    def to_csv(self):
        lines = ["method,bits,metric,K,value"]
        for method, bits, metric, k, val in self.rows:
            lines.append(f"{method},{bits},{metric},{'' if k is None else k},{val:.12g}")
        return "\n".join(lines) + "\n"


def _relevance(ranking, gt):
    rel = set(gt.relevant)
    return np.array([int(idx) in rel for idx in ranking], dtype=np.float64)


def precision_at_k(ranking, gt, K):
    """Fraction of the top K that is relevant."""
    if not 1 <= K <= len(ranking):
        raise ValueError("K must lie in [1, ranking length]")
    return float(_relevance(ranking[:K], gt).sum() / K)


def ndcg_at_k(ranking, gt, K):
    """Discount-weighted relevance of the top K, normalized to [0, 1]."""
    if not 1 <= K <= len(ranking):
        raise ValueError("K must lie in [1, ranking length]")
    disc = np.array([ndcg_discount(i) for i in range(1, K + 1)])
    return float(disc @ _relevance(ranking[:K], gt) / disc.sum())


def mean_average_precision(ranking, gt):
    """Binary-relevance average precision of one ranked list.

    Mean of precision-at-p over the positions p holding relevant items; the
    evaluation report averages this across queries.
    """
    if not gt.relevant:
        raise ValueError("ground truth has no relevant items")
    hits = _relevance(ranking, gt)
    csum = np.cumsum(hits)
    positions = np.nonzero(hits)[0]
    if len(positions) == 0:
        return 0.0
    precs = csum[positions] / (positions + 1)
    return float(precs.sum() / len(gt.relevant))


def ranking_auc(ranking, gt):
    """Fraction of (relevant, irrelevant) pairs the ranking orders correctly."""
    pos = {int(idx): p for p, idx in enumerate(ranking)}
    correct = 0
    for j in gt.relevant:
        for k in gt.irrelevant:
            if pos[int(j)] < pos[int(k)]:
                correct += 1
    return correct / (len(gt.relevant) * len(gt.irrelevant))


def precision_recall_curve(ranking, gt):
    """(recall, precision) at every prefix length, uninterpolated."""
    if not gt.relevant:
        raise ValueError("ground truth has no relevant items")
    hits = np.cumsum(_relevance(ranking, gt))
    n = len(ranking)
    recall = hits / len(gt.relevant)
    precision = hits / np.arange(1, n + 1)
    return list(zip(recall.tolist(), precision.tolist()))


def lsh_baseline(d, bits, seed=0):
    """Random-hyperplane hashing: seeded standard-Gaussian normals, zero bias,
    unit weights."""
    rng = np.random.default_rng(seed)
    fns = tuple(HashFunction(rng.standard_normal(d), 0.0) for _ in range(bits))
    return HashModel(fns, np.ones(bits), f"method=lsh bits={bits}")


def _method_name(model):
    for tok in model.loss_tag.split():
        if tok.startswith("method="):
            return tok.split("=", 1)[1]
    return model.loss_tag or "unknown"


def evaluate(model, queries, db, gt, Ks):
    """Rank the database for every ground-truth query and average the metrics.

    Emits one row per (metric, K) for NDCG@K and Prec@K, one row each for AP
    and AUC, and the mean PR curve as pr_recall / pr_precision rows indexed by
    prefix length.
    """
    if not gt:
        raise ConfigError("no ground-truth neighborhoods supplied")
    for nb in gt:
        if not 0 <= nb.query < queries.n:
            raise ConfigError(f"ground-truth query {nb.query} outside the query set")
        members = nb.relevant + nb.irrelevant
        if members and (min(members) < 0 or max(members) >= db.n):
            raise ConfigError("ground-truth neighbor indices outside the database")
    for k in Ks:
        if not 1 <= k <= db.n:
            raise ConfigError(f"metric cutoff {k} outside [1, database size]")

    prec = {k: [] for k in Ks}
    ndcg = {k: [] for k in Ks}
    aps, aucs = [], []
    pr_recall = np.zeros(db.n)
    pr_precision = np.zeros(db.n)

    for nb in gt:
        ranking = rank_database(model, queries.x[nb.query], db)
        for k in Ks:
            prec[k].append(precision_at_k(ranking, nb, k))
            ndcg[k].append(ndcg_at_k(ranking, nb, k))
        aps.append(mean_average_precision(ranking, nb))
        aucs.append(ranking_auc(ranking, nb))
        curve = precision_recall_curve(ranking, nb)
        pr_recall += [r for r, _ in curve]
        pr_precision += [p for _, p in curve]

    nq = len(gt)
    method, bits = _method_name(model), model.bits
    rows = []
    for k in Ks:
        rows.append((method, bits, "ndcg", k, float(np.mean(ndcg[k]))))
        rows.append((method, bits, "prec", k, float(np.mean(prec[k]))))
    rows.append((method, bits, "map", None, float(np.mean(aps))))
    rows.append((method, bits, "auc", None, float(np.mean(aucs))))
    for p in range(db.n):
        rows.append((method, bits, "pr_recall", p + 1, pr_recall[p] / nq))
        rows.append((method, bits, "pr_precision", p + 1, pr_precision[p] / nq))
    return MetricsReport(tuple(rows))
