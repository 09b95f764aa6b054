"""Ranking measures and loss-augmented inference, on an instance small enough
to enumerate by hand.

A query has relevant neighbors {0, 1} and irrelevant {2, 3}; each candidate
carries a score s_j = w.phi (here: minus its weighted Hamming distance).
Inference finds the ranking maximizing loss-minus-margin, i.e. the most
violated constraint of the structured SVM. The specialized solvers (pairwise
flip rule for AUC, an O(PN) dynamic program for NDCG, independent insertion
scans for simplified NDCG) must match exhaustive enumeration exactly.
"""

import numpy as np

from colgenhash.data import QueryNeighborhood
from colgenhash.rankloss import (
    RankScoreKind,
    brute_force_most_violated,
    inference_objective,
    most_violated,
    score_auc,
    score_ndcg,
    score_sndcg,
)

gt = QueryNeighborhood(99, (0, 1), (2, 3))

print("-- scores of hand-picked rankings --")
perfect = [0, 1, 2, 3]
mixed = [0, 2, 1, 3]
print(f"AUC(perfect) = {score_auc(perfect, gt):.4f}   AUC(mixed) = {score_auc(mixed, gt):.4f}")
print(f"NDCG@3(mixed) = {score_ndcg(mixed, gt, K=3):.4f}  "
      f"(relevant at positions 1 and 3)")
fam = {0: [2, 0, 3], 1: [1, 2, 3]}
print(f"SNDCG(one relevant second, one first) = {score_sndcg(fam, gt):.4f}\n")

print("-- most violated rankings at three weight regimes --")
for label, scores in [
    ("zero scores (w = 0)", {0: 0.0, 1: 0.0, 2: 0.0, 3: 0.0}),
    ("separating scores", {0: 2.0, 1: 1.8, 2: -1.0, 3: -1.2}),
    ("mixed scores", {0: 0.4, 1: -0.2, 2: 0.3, 3: -0.1}),
]:
    print(label)
    for kind in (RankScoreKind("auc"), RankScoreKind("ndcg", K=3), RankScoreKind("sndcg")):
        y = most_violated(scores, gt, kind)
        obj = inference_objective(y, scores, gt, kind)
        ref = inference_objective(
            brute_force_most_violated(scores, gt, kind), scores, gt, kind)
        shown = y if not isinstance(y, dict) else {k: list(map(int, v)) for k, v in y.items()}
        print(f"  {kind.kind:5s}: objective {obj:+.4f} (brute force {ref:+.4f})  y* = {shown}")
    print()

rng = np.random.default_rng(0)
worst = 0.0
for _ in range(300):
    ids = rng.permutation(20)[:6]
    g = QueryNeighborhood(50, tuple(int(v) for v in ids[:3]), tuple(int(v) for v in ids[3:]))
    scores = {int(i): float(rng.uniform(-2, 2)) for i in ids}
    for kind in (RankScoreKind("auc"), RankScoreKind("ndcg", K=4), RankScoreKind("sndcg")):
        a = inference_objective(most_violated(scores, g, kind), scores, g, kind)
        b = inference_objective(brute_force_most_violated(scores, g, kind), scores, g, kind)
        worst = max(worst, abs(a - b))
print(f"worst |fast - brute force| objective gap over 300 random instances: {worst:.2e}")
