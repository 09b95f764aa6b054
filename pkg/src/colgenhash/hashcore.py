"""Hash-function evaluation, binary codes, weighted Hamming distance, retrieval.

Binary codes are plain uint8 arrays of 0/1 values, one entry per hash
function. For unit-weight retrieval the codes are additionally bit-packed into
machine words so distances reduce to XOR + popcount.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class HashFunction:
    """One thresholded hyperplane: h(x) = 1 if v.x + b > 0 else 0.

    The boundary v.x + b = 0 maps to bit 0 (a fixed convention; nothing
    downstream may depend on which side ties land, only on reproducibility).
    """

    v: np.ndarray
    b: float

    def __post_init__(self):
        v = np.asarray(self.v, dtype=np.float64)
        if v.ndim != 1 or not np.any(v != 0):
            raise ValueError("hyperplane normal must be a 1-d vector with a nonzero entry")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self):
        return self.v.shape[0]

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected dimension {self.dim}, got {x.shape[-1]}")
        return (x @ self.v + self.b > 0).astype(np.uint8)


@dataclass(frozen=True)
class HashModel:
    """An ordered bank of hash functions with non-negative per-bit weights."""

    functions: tuple
    weights: np.ndarray
    loss_tag: str = ""

    def __post_init__(self):
        fns = tuple(self.functions)
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (len(fns),):
            raise ValueError("need exactly one weight per hash function")
        if np.any(w < 0):
            raise ValueError("hash-function weights must be non-negative")
        if len({f.dim for f in fns}) > 1:
            raise ValueError("hash functions disagree on input dimension")
        object.__setattr__(self, "functions", fns)
        object.__setattr__(self, "weights", w)

    @property
    def bits(self):
        return len(self.functions)

    @property
    def dim(self):
        return self.functions[0].dim

    @property
    def plane_matrix(self):
        """(V, b) with V of shape (m, d): codes are (X @ V.T + b > 0)."""
        return np.stack([f.v for f in self.functions]), np.array([f.b for f in self.functions])


def encode(model, x):
    """Binary code of a single feature vector under every function of the model."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise ValueError(f"expected a vector of dimension {model.dim}, got shape {x.shape}")
    v, b = model.plane_matrix
    return (v @ x + b > 0).astype(np.uint8)


def encode_all(model, ds):
    """Codes for every dataset row, shape (n, m)."""
    if ds.dim != model.dim:
        raise ValueError(f"dataset dimension {ds.dim} != model dimension {model.dim}")
    v, b = model.plane_matrix
    return (ds.x @ v.T + b > 0).astype(np.uint8)


def weighted_hamming(w, a, b):
    """sum_r w_r * |a_r - b_r| over two equal-length binary codes."""
    w = np.asarray(w, dtype=np.float64)
    a = np.asarray(a)
    b = np.asarray(b)
    if not (w.shape == a.shape == b.shape):
        raise ValueError(f"length mismatch: w {w.shape}, a {a.shape}, b {b.shape}")
    return float(w @ np.abs(a.astype(np.int8) - b.astype(np.int8)))


def delta_h(h, x_i, x_j, x_k):
    """|h(x_i) - h(x_k)| - |h(x_i) - h(x_j)| on the function's binary outputs."""
    bi, bj, bk = int(h(x_i)), int(h(x_j)), int(h(x_k))
    return abs(bi - bk) - abs(bi - bj)


def pack_codes(codes):
    """Pack an (n, m) 0/1 array into (n, ceil(m/8)) uint8 words."""
    codes = np.ascontiguousarray(codes, dtype=np.uint8)
    return np.packbits(codes, axis=1)


def packed_hamming(packed_query, packed_db):
    """Plain Hamming distances from one packed code to many, via popcount."""
    return np.bitwise_count(packed_db ^ packed_query).sum(axis=1)


def rank_database(model, query, db):
    """Database row indices by ascending weighted Hamming distance to the query.

    Ties break by ascending row index. Uniform weights take the packed
    popcount path; general weights are accumulated per bit.
    """
    q_code = encode(model, query)
    db_codes = encode_all(model, db)
    w = model.weights
    if w.size and np.all(w == w[0]):
        dist = w[0] * packed_hamming(pack_codes(q_code[None, :])[0], pack_codes(db_codes))
    else:
        dist = np.abs(db_codes.astype(np.int8) - q_code.astype(np.int8)) @ w
    return np.argsort(dist, kind="stable")
