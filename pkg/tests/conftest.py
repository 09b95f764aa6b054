"""Shared fixtures: the frozen 3-cluster benchmark used by the acceptance suite."""

import time
from dataclasses import dataclass, field

import pytest

import colgenhash as cg
from colgenhash.rankloss import RankScoreKind


def split_clusters(seed, d, per_cluster, train_per, spread, clusters=3):
    """One synthetic draw split per cluster into train and query rows."""
    full = cg.synth_clusters(seed, d, clusters, per_cluster, spread)
    tr_idx = [c * per_cluster + i for c in range(clusters) for i in range(train_per)]
    q_idx = [c * per_cluster + i for c in range(clusters) for i in range(train_per, per_cluster)]
    train = cg.Dataset(full.x[tr_idx], full.labels[tr_idx])
    queries = cg.Dataset(full.x[q_idx], full.labels[q_idx])
    return train, queries


@dataclass
class BenchmarkRun:
    train: object
    queries: object
    gt: list
    nbhds: list
    models: dict = field(default_factory=dict)
    histories: dict = field(default_factory=dict)
    walls: dict = field(default_factory=dict)
    prec10: dict = field(default_factory=dict)
    eval_walls: dict = field(default_factory=dict)


@pytest.fixture(scope="session")
def benchmark():
    """32-bit training runs of every method on the frozen cluster benchmark.

    Protocol (calibrated once, then frozen): 3 clusters in 16 dimensions,
    spread 0.8, 200 train / 100 query rows per cluster, seed 7; supervision
    from 40 label-mode neighborhoods with 10 relevant / 20 irrelevant each.
    """
    train, queries = split_clusters(7, 16, 300, 200, 0.8)
    gt = cg.build_cross_neighborhoods(queries, train, "label", 200, 400, seed=0)
    nbhds = cg.build_neighborhoods(train, "label", 10, 20, seed=7)[::15]
    run = BenchmarkRun(train, queries, gt, nbhds)

    def record(name, fn):
        hist = []
        t0 = time.perf_counter()
        model = fn(hist.append)
        run.walls[name] = time.perf_counter() - t0
        run.histories[name] = hist
        run.models[name] = model
        t0 = time.perf_counter()
        rep = cg.evaluate(model, queries, train, gt, [10])
        run.eval_walls[name] = time.perf_counter() - t0
        run.prec10[name] = rep.value("prec", 10)

    record("lsh", lambda cb: cg.lsh_baseline(16, 32, seed=7))
    ts = cg.generate_triplets(nbhds)
    record("cghash", lambda cb: cg.train_cghash(
        train, ts, cg.CGConfig(bits=32, C=10.0), seed=7, callback=cb))
    sh = dict(loss=RankScoreKind("ndcg", K=10), C=100.0, bits=32, eps_cp=0.01, max_cp_iters=200)
    record("structhash_full", lambda cb: cg.train_structhash(
        train, nbhds, cg.StructConfig(mode="full", **sh), seed=7, callback=cb))
    record("structhash_stage", lambda cb: cg.train_structhash(
        train, nbhds, cg.StructConfig(mode="stagewise", **sh), seed=7, callback=cb))
    return run


@pytest.fixture(scope="session")
def inference_timing():
    """NDCG vs simplified-NDCG stage-wise runs at protocol-scale neighbor
    pools (50 relevant / 100 irrelevant), for the inference-speed trend."""
    train, _ = split_clusters(7, 16, 300, 200, 0.8)
    nbhds = cg.build_neighborhoods(train, "label", 50, 100, seed=7)[::30]
    out = {}
    for kind in (RankScoreKind("ndcg", K=10), RankScoreKind("sndcg")):
        hist = []
        cfg = cg.StructConfig(loss=kind, C=100.0, bits=6, eps_cp=0.01, mode="stagewise")
        cg.train_structhash(train, nbhds, cfg, seed=7, callback=hist.append)
        seconds = sum(h["inference_seconds"] for h in hist)
        iters = sum(h["cp_iterations"] for h in hist)
        out[kind.kind] = seconds / iters
    return out
