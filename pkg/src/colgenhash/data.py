"""Dataset ingestion, ground-truth neighborhoods, and triplet supervision."""

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


class ParseError(ValueError):
    """Malformed input file; message carries the offending 1-based line number."""


class ConfigError(ValueError):
    """Inconsistent or unsupported run configuration."""


@dataclass(frozen=True)
class Dataset:
    """Dense feature matrix with optional integer class labels.

    `x` has shape (n, d); `labels`, when present, has shape (n,).
    Rows are addressed by their 0-based index everywhere in this package.
    """

    x: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] < 1:
            raise ValueError(f"feature matrix must be 2-d with d >= 1, got shape {x.shape}")
        object.__setattr__(self, "x", x)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (x.shape[0],):
                raise ValueError(
                    f"need one label per row: {labels.shape} labels for {x.shape[0]} rows"
                )
            object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def dim(self):
        return self.x.shape[1]


@dataclass(frozen=True)
class QueryNeighborhood:
    """Ground truth for one query: disjoint relevant / irrelevant row-index sets.

    For within-dataset supervision all three fields index the same dataset and
    the query never appears in its own neighbor sets; for cross-retrieval
    ground truth `query` indexes the query set while the neighbor sets index
    the database.
    """

    query: int
    relevant: tuple
    irrelevant: tuple

    def __post_init__(self):
        rel, irr = set(self.relevant), set(self.irrelevant)
        if rel & irr:
            raise ValueError("relevant and irrelevant sets overlap")
        object.__setattr__(self, "relevant", tuple(sorted(rel)))
        object.__setattr__(self, "irrelevant", tuple(sorted(irr)))


@dataclass(frozen=True)
class TripletSet:
    """Relative-similarity supervision: (i, j, k) meaning j is closer to i than k."""

    triplets: np.ndarray = field(default_factory=lambda: np.empty((0, 3), dtype=np.int64))

    def __post_init__(self):
        t = np.asarray(self.triplets, dtype=np.int64).reshape(-1, 3)
        if len(t):
            i, j, k = t[:, 0], t[:, 1], t[:, 2]
            if np.any(i == j) or np.any(i == k) or np.any(j == k):
                raise ValueError("triplet indices must be pairwise distinct")
        object.__setattr__(self, "triplets", t)

    def __len__(self):
        return len(self.triplets)


def load_dataset(path, fmt="dense-csv", labels_last=False, dim=None):
    """Read a dataset file.

    fmt='dense-csv': comma-separated reals, one row per line; if labels_last,
    the final column is an integer class label.
    fmt='sparse-index-value': lines of `label idx:val ...` with 1-based feature
    indices, expanded to a dense matrix of width `dim` (inferred from the
    largest index seen when not given).

    Raises ParseError naming the 1-based line of the first malformed row.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    lines = [(no, ln) for no, ln in enumerate(lines, start=1) if ln.strip()]
    if not lines:
        raise ParseError(f"{path}: line 1: empty file")

    if fmt == "dense-csv":
        return _parse_dense(path, lines, labels_last)
    if fmt == "sparse-index-value":
        return _parse_sparse(path, lines, dim)
    raise ConfigError(f"unknown dataset format {fmt!r}")


def _parse_dense(path, lines, labels_last):
    rows, labels = [], []
    width = None
    for no, ln in lines:
        fields = ln.split(",")
        if width is None:
            width = len(fields)
            if labels_last and width < 2:
                raise ParseError(f"{path}: line {no}: need at least one feature before the label")
        elif len(fields) != width:
            raise ParseError(
                f"{path}: line {no}: expected {width} fields, got {len(fields)}"
            )
        try:
            vals = [float(f) for f in fields]
        except ValueError:
            raise ParseError(f"{path}: line {no}: non-numeric value") from None
        if labels_last:
            lab = vals[-1]
            if lab != int(lab):
                raise ParseError(f"{path}: line {no}: label column must be an integer")
            labels.append(int(lab))
            vals = vals[:-1]
        rows.append(vals)
    return Dataset(np.array(rows), np.array(labels) if labels_last else None)


def _parse_sparse(path, lines, dim):
    parsed = []
    max_idx = 0
    for no, ln in lines:
        toks = ln.split()
        try:
            lab = float(toks[0])
            if lab != int(lab):
                raise ValueError
            pairs = []
            for tok in toks[1:]:
                idx_s, val_s = tok.split(":", 1)
                idx = int(idx_s)
                if idx < 1:
                    raise ValueError
                pairs.append((idx, float(val_s)))
        except (ValueError, IndexError):
            raise ParseError(f"{path}: line {no}: malformed sparse entry") from None
        max_idx = max(max_idx, max((i for i, _ in pairs), default=0))
        parsed.append((int(lab), pairs))
    d = dim if dim is not None else max_idx
    if d < 1:
        raise ParseError(f"{path}: line 1: cannot infer dimension from all-empty rows")
    if max_idx > d:
        bad = next(no for (no, ln), (_, ps) in zip(lines, parsed)
                   if any(i > d for i, _ in ps))
        raise ParseError(f"{path}: line {bad}: feature index exceeds dimension {d}")
    x = np.zeros((len(parsed), d))
    labels = np.empty(len(parsed), dtype=np.int64)
    for r, (lab, pairs) in enumerate(parsed):
        labels[r] = lab
        for idx, val in pairs:
            x[r, idx - 1] = val
    return Dataset(x, labels)


def build_neighborhoods(ds, mode, k_rel, k_irr, percentile=0.02, seed=0):
    """Construct per-query relevant/irrelevant neighbor sets.

    mode='label': relevant are the other same-label rows, irrelevant the rest.
    mode='l2-percentile': for each query, the `percentile` fraction of the
    dataset with smallest Euclidean distance (query excluded) is relevant.

    Pools are then subsampled (Fisher-Yates, seeded) to at most k_rel / k_irr
    members. Queries whose relevant or irrelevant pool is empty are dropped.
    """
    if k_rel < 1 or k_irr < 1:
        raise ConfigError("k_rel and k_irr must be >= 1")
    rng = np.random.default_rng(seed)
    n = ds.n

    if mode == "label":
        if ds.labels is None:
            raise ConfigError("label mode requires a labelled dataset")
        pools = _label_pools(ds)
    elif mode == "l2-percentile":
        if not 0.0 < percentile < 1.0:
            raise ConfigError("percentile must lie strictly between 0 and 1")
        pools = _percentile_pools(ds, percentile)
    else:
        raise ConfigError(f"unknown neighborhood mode {mode!r}")

    out = []
    dropped = 0
    for q in range(n):
        rel, irr = pools[q]
        if len(rel) == 0 or len(irr) == 0:
            dropped += 1
            continue
        rel = _subsample(rel, k_rel, rng)
        irr = _subsample(irr, k_irr, rng)
        assert q not in rel and q not in irr
        out.append(QueryNeighborhood(q, tuple(rel), tuple(irr)))
    if dropped:
        log.info("dropped %d queries with an empty neighbor pool", dropped)
    return out


def build_cross_neighborhoods(queries, db, mode, k_rel, k_irr, percentile=0.02, seed=0):
    """Ground truth for retrieval evaluation: each query against a database.

    Same modes and subsampling as build_neighborhoods, but `query` indexes the
    query set and the neighbor sets index `db`. Queries with an empty pool are
    dropped.
    """
    if k_rel < 1 or k_irr < 1:
        raise ConfigError("k_rel and k_irr must be >= 1")
    if queries.dim != db.dim:
        raise ValueError("query and database dimensions differ")
    rng = np.random.default_rng(seed)
    idx = np.arange(db.n)

    out = []
    dropped = 0
    for q in range(queries.n):
        if mode == "label":
            if queries.labels is None or db.labels is None:
                raise ConfigError("label mode requires labels on both datasets")
            same = db.labels == queries.labels[q]
            rel, irr = idx[same], idx[~same]
        elif mode == "l2-percentile":
            if not 0.0 < percentile < 1.0:
                raise ConfigError("percentile must lie strictly between 0 and 1")
            n_rel = max(1, int(round(percentile * db.n)))
            d2 = np.sum((db.x - queries.x[q]) ** 2, axis=1)
            order = np.argsort(d2, kind="stable")
            rel, irr = np.sort(order[:n_rel]), np.sort(order[n_rel:])
        else:
            raise ConfigError(f"unknown neighborhood mode {mode!r}")
        if len(rel) == 0 or len(irr) == 0:
            dropped += 1
            continue
        out.append(QueryNeighborhood(
            q, tuple(_subsample(rel, k_rel, rng)), tuple(_subsample(irr, k_irr, rng))
        ))
    if dropped:
        log.info("dropped %d queries with an empty neighbor pool", dropped)
    return out


def _label_pools(ds):
    labels = ds.labels
    idx = np.arange(ds.n)
    pools = []
    for q in range(ds.n):
        same = labels == labels[q]
        same[q] = False
        pools.append((idx[same], idx[(labels != labels[q])]))
    return pools


def _percentile_pools(ds, percentile):
    # "top percentile of the whole dataset": the cutoff count is a fraction of
    # n, while the candidate pool excludes the query row itself.
    n = ds.n
    n_rel = max(1, int(round(percentile * n)))
    d2 = np.sum((ds.x[:, None, :] - ds.x[None, :, :]) ** 2, axis=2)
    np.fill_diagonal(d2, np.inf)
    pools = []
    for q in range(n):
        order = np.argsort(d2[q], kind="stable")[: n - 1]
        pools.append((np.sort(order[:n_rel]), np.sort(order[n_rel:])))
    return pools


def _subsample(pool, cap, rng):
    pool = np.sort(np.asarray(pool))
    if len(pool) <= cap:
        return pool
    return np.sort(rng.permutation(pool)[:cap])


def generate_triplets(nbhds):
    """Expand neighborhoods into the full cartesian triplet set.

    Emits (i, j, k) for every query i, j in relevant(i), k in irrelevant(i),
    in (i, j, k) lexicographic order.
    """
    trips = []
    for nb in sorted(nbhds, key=lambda nb: nb.query):
        for j in nb.relevant:
            for k in nb.irrelevant:
                trips.append((nb.query, j, k))
    return TripletSet(np.array(trips, dtype=np.int64).reshape(-1, 3))


def synth_clusters(seed, d, n_clusters, per_cluster, spread):
    """Seeded Gaussian-blob benchmark: labels are cluster ids.

    Centers are uniform in [-1, 1]^d; rows are center plus isotropic noise of
    standard deviation `spread`. Identical arguments give an identical dataset.
    """
    if d < 1 or n_clusters < 1 or per_cluster < 1:
        raise ConfigError("d, n_clusters and per_cluster must all be >= 1")
    if spread < 0:
        raise ConfigError("spread must be non-negative")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-1.0, 1.0, size=(n_clusters, d))
    rows = np.repeat(centers, per_cluster, axis=0)
    rows = rows + spread * rng.standard_normal(rows.shape)
    labels = np.repeat(np.arange(n_clusters), per_cluster)
    return Dataset(rows, labels)


def save_dense_csv(ds, path):
    """Write a dataset as dense-csv (label appended as last column if present)."""
    with open(path, "w", encoding="utf-8") as fh:
        for r in range(ds.n):
            cells = [format(v, ".17g") for v in ds.x[r]]
            if ds.labels is not None:
                cells.append(str(int(ds.labels[r])))
            fh.write(",".join(cells) + "\n")
