"""The evaluation harness: ranked retrieval metrics and PR curves.

Rank the database for every query by weighted Hamming distance, then score
with precision@K, NDCG@K, average precision, pairwise AUC, and the
uninterpolated precision-recall curve. The report serializes to the CSV
format `method,bits,metric,K,value` used by the CLI's `eval` command.
"""

import numpy as np

import colgenhash as cg

ds = cg.synth_clusters(seed=7, d=16, n_clusters=3, per_cluster=230, spread=0.8)
train_idx = [c * 230 + i for c in range(3) for i in range(200)]
query_idx = [c * 230 + i for c in range(3) for i in range(200, 230)]
train = cg.Dataset(ds.x[train_idx], ds.labels[train_idx])
queries = cg.Dataset(ds.x[query_idx], ds.labels[query_idx])
gt = cg.build_cross_neighborhoods(queries, train, "label", 200, 400, seed=0)

nbhds = cg.build_neighborhoods(train, "label", 10, 20, seed=7)[::15]
model = cg.train_cghash(train, cg.generate_triplets(nbhds),
                        cg.CGConfig(bits=24, C=10.0), seed=7)
lsh = cg.lsh_baseline(16, 24, seed=7)

print(f"{'metric':12s} {'cghash':>8s} {'lsh':>8s}")
rep = {name: cg.evaluate(m, queries, train, gt, Ks=[5, 10, 50])
       for name, m in (("cghash", model), ("lsh", lsh))}
for metric, k in (("prec", 5), ("prec", 10), ("prec", 50),
                  ("ndcg", 10), ("map", None), ("auc", None)):
    label = f"{metric}@{k}" if k else metric
    a = rep["cghash"].value(metric, k)
    b = rep["lsh"].value(metric, k)
    print(f"{label:12s} {a:8.3f} {b:8.3f}")

print("\nprecision-recall curve (cghash), every 60th prefix:")
rows = [r for r in rep["cghash"].rows if r[2] == "pr_recall"]
prec_rows = {r[3]: r[4] for r in rep["cghash"].rows if r[2] == "pr_precision"}
print(f"{'prefix':>7s} {'recall':>8s} {'precision':>10s}")
for _, _, _, prefix, recall in rows[::60]:
    print(f"{prefix:7d} {recall:8.3f} {prec_rows[prefix]:10.3f}")

print("\nfirst CSV lines of the serialized report:")
for line in rep["cghash"].to_csv().splitlines()[:6]:
    print(" ", line)

# sanity: a ranking that ignores the labels scores at chance AUC
rng = np.random.default_rng(0)
unif_db = cg.Dataset(rng.uniform(size=(300, 8)), rng.integers(0, 3, 300))
unif_q = cg.Dataset(rng.uniform(size=(200, 8)), rng.integers(0, 3, 200))
unif_gt = cg.build_cross_neighborhoods(unif_q, unif_db, "label", 40, 80, seed=1)
chance = cg.evaluate(cg.lsh_baseline(8, 16, seed=3), unif_q, unif_db, unif_gt, [10])
print(f"\nLSH on unstructured data: AUC = {chance.value('auc'):.3f} (chance = 0.5)")
