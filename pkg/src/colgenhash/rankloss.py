"""Ranking measures (AUC, NDCG, simplified NDCG) and loss-augmented inference.

A ranking is an index array, best candidate first, covering one query's
relevant and irrelevant neighbors. Inference finds the ranking maximizing
label loss minus margin, Delta(y) - w.dPsi(y), given per-candidate scores
s_j = w.phi(x_i, x_j); each measure has an exact specialized solver and
`brute_force_most_violated` provides the enumeration oracle.

The simplified-NDCG measure works on a family of "simple" rankings, one per
relevant example (that example interleaved with all irrelevant ones),
represented as a dict mapping the relevant index to its ranking.
"""

import itertools
from dataclasses import dataclass

import numpy as np

BRUTE_FORCE_LIMIT = 12


@dataclass(frozen=True)
class RankScoreKind:
    kind: str
    K: int | None = None

    def __post_init__(self):
        if self.kind not in ("auc", "ndcg", "sndcg"):
            raise ValueError("kind must be auc, ndcg or sndcg")
        if self.kind == "ndcg" and (self.K is None or self.K < 1):
            raise ValueError("ndcg requires a cutoff K >= 1")


def ndcg_discount(i):
    """Position discount: S(1) = 1, S(i) = 1/log2(i) afterwards."""
    return 1.0 if i == 1 else 1.0 / np.log2(i)


def sndcg_discount(j):
    """Simple-ranking discount S(j) = 1/log2(1 + j)."""
    return 1.0 / np.log2(1.0 + j)


def _check_coverage(y, gt):
    y = np.asarray(y, dtype=np.int64)
    want = set(gt.relevant) | set(gt.irrelevant)
    if len(y) != len(want) or set(y.tolist()) != want:
        raise ValueError("ranking does not cover exactly the query's neighbor sets")
    return y


def score_auc(y, gt):
    """Fraction of (relevant, irrelevant) pairs ordered correctly."""
    y = _check_coverage(y, gt)
    rel = set(gt.relevant)
    correct = 0
    seen_irr = 0
    # walk best-to-worst; a relevant item beats every irrelevant item after it
    for idx in y:
        if int(idx) in rel:
            correct += len(gt.irrelevant) - seen_irr
        else:
            seen_irr += 1
    return correct / (len(gt.relevant) * len(gt.irrelevant))


def score_ndcg(y, gt, K):
    """Discounted gain of relevant items in the top K, normalized to [0, 1]."""
    y = _check_coverage(y, gt)
    if not 1 <= K <= len(y):
        raise ValueError("K must lie in [1, ranking length]")
    rel = set(gt.relevant)
    discounts = np.array([ndcg_discount(i) for i in range(1, K + 1)])
    hits = np.array([int(idx) in rel for idx in y[:K]], dtype=np.float64)
    return float(discounts @ hits / discounts.sum())


def score_sndcg(family, gt):
    """Mean per-relevant discount at each relevant item's simple-ranking position."""
    irr_set = set(int(k) for k in gt.irrelevant)
    total = 0.0
    for i in gt.relevant:
        if i not in family:
            raise ValueError(f"missing simple ranking for relevant example {i}")
        simple = np.asarray(family[i], dtype=np.int64)
        members = set(simple.tolist())
        if len(simple) != len(irr_set) + 1 or members - {int(i)} != irr_set:
            raise ValueError(f"simple ranking for {i} must cover it and all irrelevant")
        pos = int(np.nonzero(simple == i)[0][0]) + 1
        total += sndcg_discount(pos)
    return total / len(gt.relevant)


def label_loss(kind, y, gt):
    """Delta(y, truth) = 1 - score(y, truth) under the chosen measure."""
    if kind.kind == "auc":
        return 1.0 - score_auc(y, gt)
    if kind.kind == "ndcg":
        return 1.0 - score_ndcg(y, gt, kind.K)
    return 1.0 - score_sndcg(y, gt)


def _score_arrays(scores, gt):
    """Candidate groups sorted by descending score, ties by ascending index."""
    rel = np.array(sorted(gt.relevant), dtype=np.int64)
    irr = np.array(sorted(gt.irrelevant), dtype=np.int64)
    s_rel = np.array([scores[int(i)] for i in rel], dtype=np.float64)
    s_irr = np.array([scores[int(i)] for i in irr], dtype=np.float64)
    ro = np.lexsort((rel, -s_rel))
    io = np.lexsort((irr, -s_irr))
    return rel[ro], s_rel[ro], irr[io], s_irr[io]


def margin_term(y, scores, gt):
    """w.dPsi(y): 2/(PN) * sum over incorrectly ordered pairs of (s_j - s_k)."""
    y = _check_coverage(y, gt)
    rel = set(gt.relevant)
    total = 0.0
    irr_before = []
    for idx in y:
        idx = int(idx)
        if idx in rel:
            total += len(irr_before) * scores[idx] - sum(irr_before)
        else:
            irr_before.append(scores[idx])
    return 2.0 * total / (len(gt.relevant) * len(gt.irrelevant))


def inference_objective(y, scores, gt, kind):
    """Delta(y) - w.dPsi(y), the quantity loss-augmented inference maximizes.

    For sndcg `y` is a simple-ranking family and the margin term accumulates
    over each relevant example's own ranking.
    """
    if kind.kind == "sndcg":
        p, n = len(gt.relevant), len(gt.irrelevant)
        margin = 0.0
        for i in gt.relevant:
            simple = np.asarray(y[i], dtype=np.int64)
            before = simple[: int(np.nonzero(simple == i)[0][0])]
            margin += (len(before) * scores[int(i)]
                       - sum(scores[int(k)] for k in before))
        return label_loss(kind, y, gt) - 2.0 * margin / (p * n)
    return label_loss(kind, y, gt) - margin_term(y, scores, gt)


def most_violated_auc(scores, gt):
    """Exact argmax of the AUC-loss-augmented objective.

    A flipped pair (j, k) pays 1/(PN) in loss and 2(s_j - s_k)/(PN) in
    margin, so flipping profits exactly when s_j - s_k < 1/2; sorting by
    descending score with every relevant score reduced by 1/2 realizes all
    profitable flips at once. Ties order by ascending index.
    """
    idx = np.array(sorted(gt.relevant) + sorted(gt.irrelevant), dtype=np.int64)
    adj = np.array(
        [scores[int(i)] - 0.5 for i in sorted(gt.relevant)]
        + [scores[int(i)] for i in sorted(gt.irrelevant)]
    )
    return idx[np.lexsort((idx, -adj))]


def most_violated_ndcg(scores, gt, K):
    """Exact argmax of the NDCG-loss-augmented objective.

    An optimal ranking keeps each group in descending-score order, so a
    dynamic program over interleaving states (a relevant and b irrelevant
    placed) finds the optimal merge in O(P*N). On ties the relevant item is
    placed first, keeping the result as close to the true ordering as the
    objective allows.
    """
    rel, s_rel, irr, s_irr = _score_arrays(scores, gt)
    p, n = len(rel), len(irr)
    if not 1 <= K <= p + n:
        raise ValueError("K must lie in [1, number of candidates]")
    z = sum(ndcg_discount(i) for i in range(1, K + 1))
    prefix_irr = np.concatenate([[0.0], np.cumsum(s_irr)])
    norm = 2.0 / (p * n)

    # rel_gain[a, b]: placing sorted-relevant a with b irrelevant already placed
    disc = np.array([ndcg_discount(i) / z if i <= K else 0.0 for i in range(1, p + n + 1)])
    pos_idx = np.arange(p)[:, None] + np.arange(n + 1)[None, :]
    rel_gain = -disc[pos_idx] - norm * np.outer(s_rel, np.arange(n + 1)) + norm * prefix_irr

    value = np.zeros((p + 1, n + 1))
    take_rel = np.zeros((p + 1, n + 1), dtype=bool)
    for a in range(p - 1, -1, -1):
        value[a, n] = rel_gain[a, n] + value[a + 1, n]
        take_rel[a, n] = True
    for b in range(n - 1, -1, -1):
        for a in range(p, -1, -1):
            via_irr = value[a, b + 1]
            if a < p:
                via_rel = rel_gain[a, b] + value[a + 1, b]
                if via_rel >= via_irr:
                    value[a, b] = via_rel
                    take_rel[a, b] = True
                    continue
            value[a, b] = via_irr

    order = np.empty(p + n, dtype=np.int64)
    a = b = 0
    for pos in range(p + n):
        if a < p and take_rel[a, b]:
            order[pos] = rel[a]
            a += 1
        else:
            order[pos] = irr[b]
            b += 1
    return order


def most_violated_sndcg(scores, gt):
    """Exact per-relevant inference for the simplified-NDCG objective.

    Each relevant example's simple ranking decomposes from the rest, so its
    optimal insertion position among the score-sorted irrelevant items is a
    linear scan over N+1 slots, done for all relevant examples at once.
    Ties resolve to the earliest position.
    """
    rel, s_rel, irr, s_irr = _score_arrays(scores, gt)
    p, n = len(rel), len(irr)
    prefix = np.concatenate([[0.0], np.cumsum(s_irr)])
    norm = 2.0 / (p * n)
    q = np.arange(1, n + 2)
    base = (1.0 - sndcg_discount(q)) / p + norm * prefix  # position-only terms
    vals = base[None, :] - norm * np.outer(s_rel, q - 1)
    best_q = np.argmax(vals, axis=1) + 1  # first maximum = earliest position
    family = {}
    for i, bq in zip(rel, best_q):
        family[int(i)] = np.concatenate([irr[: bq - 1], [i], irr[bq - 1 :]]).astype(np.int64)
    return family


def most_violated(scores, gt, kind):
    if kind.kind == "auc":
        return most_violated_auc(scores, gt)
    if kind.kind == "ndcg":
        return most_violated_ndcg(scores, gt, kind.K)
    return most_violated_sndcg(scores, gt)


def brute_force_most_violated(scores, gt, kind):
    """Enumeration oracle for loss-augmented inference on small instances.

    AUC/NDCG: every interleaving of the within-group score-sorted lists is
    scored with the definitional objective. SNDCG: every insertion position
    of every relevant example. Refuses more than 12 candidates.
    """
    rel, _, irr, _ = _score_arrays(scores, gt)
    p, n = len(rel), len(irr)
    if p + n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"instance too large for brute force ({p + n} > {BRUTE_FORCE_LIMIT})")

    if kind.kind == "sndcg":
        # contributions decompose per relevant example; each candidate simple
        # ranking is scored by scanning the constructed array itself
        family = {}
        for i in gt.relevant:
            best, best_val = None, -np.inf
            for q in range(1, n + 2):
                simple = np.concatenate([irr[: q - 1], [i], irr[q - 1 :]]).astype(np.int64)
                pos = int(np.nonzero(simple == i)[0][0]) + 1
                before = simple[: pos - 1]
                margin = len(before) * scores[int(i)] - sum(scores[int(k)] for k in before)
                val = (1.0 - sndcg_discount(pos)) / p - 2.0 * margin / (p * n)
                if val > best_val:
                    best, best_val = simple, val
            family[i] = best
        return family

    best, best_val = None, -np.inf
    for rel_positions in itertools.combinations(range(p + n), p):
        order = np.empty(p + n, dtype=np.int64)
        rel_set = set(rel_positions)
        a = b = 0
        for pos in range(p + n):
            if pos in rel_set:
                order[pos] = rel[a]
                a += 1
            else:
                order[pos] = irr[b]
                b += 1
        val = inference_objective(order, scores, gt, kind)
        if val > best_val:
            best, best_val = order, val
    return best
