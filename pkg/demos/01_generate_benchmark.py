"""Build the synthetic benchmark: clusters, neighborhoods, triplets.

Everything downstream trains on relative-similarity supervision. This script
shows the three supervision stages: a seeded Gaussian-cluster dataset,
per-query relevant/irrelevant neighbor sets, and the cartesian triplet
expansion that CGHash consumes.
"""

import numpy as np

import colgenhash as cg

# Three well-separated-ish clusters in 16 dimensions. spread controls how
# much they overlap; 0.8 leaves enough confusion that 32 bits are worth
# learning (at 0.2 a single hyperplane per pair of clusters is plenty).
ds = cg.synth_clusters(seed=7, d=16, n_clusters=3, per_cluster=200, spread=0.8)
print(f"dataset: {ds.n} rows, dimension {ds.dim}, labels {sorted(set(ds.labels.tolist()))}")

# Label-mode ground truth: same cluster = relevant. Pools are subsampled to
# 10 relevant / 20 irrelevant per query with the run seed.
nbhds = cg.build_neighborhoods(ds, "label", k_rel=10, k_irr=20, seed=7)
print(f"neighborhoods: {len(nbhds)} queries, "
      f"{len(nbhds[0].relevant)} relevant / {len(nbhds[0].irrelevant)} irrelevant each")

# Euclidean-percentile ground truth is the label-free alternative: the
# closest 2% of the dataset counts as relevant.
pct = cg.build_neighborhoods(ds, "l2-percentile", k_rel=50, k_irr=100,
                             percentile=0.02, seed=7)
sizes = {len(nb.relevant) for nb in pct}
print(f"l2-percentile mode: relevant pool sizes before capping = "
      f"{round(0.02 * ds.n)}, after capping = {sizes}")

# Every (query, relevant, irrelevant) combination becomes one triplet.
trips = cg.generate_triplets(nbhds[::15])
expect = sum(len(nb.relevant) * len(nb.irrelevant) for nb in nbhds[::15])
print(f"triplets from every 15th query: {len(trips)} (= sum of |rel|x|irr| = {expect})")

i, j, k = trips.triplets[0]
d_rel = np.linalg.norm(ds.x[i] - ds.x[j])
d_irr = np.linalg.norm(ds.x[i] - ds.x[k])
print(f"first triplet ({i}, {j}, {k}): query-to-relevant distance {d_rel:.2f}, "
      f"query-to-irrelevant {d_irr:.2f}")
