"""Command-line surface: synth / train / encode / search / eval.

Model files are version-tagged text so models round-trip across runs:

    HASHMODEL v1
    bits=<m> dim=<d> method=<tag> loss=<tag>
    w <m weights>
    h <v coefficients> <bias>        (m lines)

All floats are written with 17 significant digits, which round-trips IEEE
doubles exactly. Exit codes: 0 success, 1 usage/config error, 2 runtime error.
"""

import argparse
import sys
import time

import numpy as np

from . import data as dt
from .cghash import CGConfig, train_cghash
from .evaluation import evaluate, lsh_baseline
from .hashcore import HashFunction, HashModel, encode_all, rank_database, weighted_hamming, encode
from .rankloss import RankScoreKind
from .structhash import StructConfig, train_structhash

F = "{:.17g}".format


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_model(model))


def serialize_model(model):
    tags = dict(tok.split("=", 1) for tok in model.loss_tag.split() if "=" in tok)
    lines = [
        "HASHMODEL v1",
        f"bits={model.bits} dim={model.dim} "
        f"method={tags.get('method', 'unknown')} loss={tags.get('loss', 'none')}",
        "w " + " ".join(F(x) for x in model.weights),
    ]
    for fn in model.functions:
        lines.append("h " + " ".join(F(x) for x in fn.v) + " " + F(fn.b))
    return "\n".join(lines) + "\n"


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "HASHMODEL v1":
        raise dt.ParseError(f"{path}: line 1: not a HASHMODEL v1 file")
    try:
        head = dict(tok.split("=", 1) for tok in lines[1].split())
        m, d = int(head["bits"]), int(head["dim"])
    except (IndexError, KeyError, ValueError):
        raise dt.ParseError(f"{path}: line 2: malformed header") from None
    if len(lines) < 3 + m:
        raise dt.ParseError(f"{path}: line {len(lines)}: expected {3 + m} lines")
    if not lines[2].startswith("w "):
        raise dt.ParseError(f"{path}: line 3: expected weight line")
    w = np.array([float(t) for t in lines[2][2:].split()])
    if w.shape != (m,):
        raise dt.ParseError(f"{path}: line 3: expected {m} weights")
    fns = []
    for r in range(m):
        parts = lines[3 + r].split()
        if parts[0] != "h" or len(parts) != d + 2:
            raise dt.ParseError(f"{path}: line {4 + r}: expected 'h' with {d + 1} numbers")
        vals = [float(t) for t in parts[1:]]
        fns.append(HashFunction(np.array(vals[:d]), vals[d]))
    tag = f"method={head.get('method', 'unknown')} loss={head.get('loss', 'none')}"
    return HashModel(tuple(fns), w, tag)


def _load(args, path):
    return dt.load_dataset(path, fmt=args.format, labels_last=args.labels == "last")


def cmd_synth(args):
    ds = dt.synth_clusters(args.seed, args.dim, args.clusters, args.per_cluster, args.spread)
    dt.save_dense_csv(ds, args.out)
    print(f"wrote {ds.n} rows of dimension {ds.dim} to {args.out}")
    return 0


def _neighborhoods(args, ds):
    return dt.build_neighborhoods(
        ds, args.nbhd_mode, args.k_rel, args.k_irr, percentile=args.percentile, seed=args.seed
    )


def cmd_train(args):
    if args.method == "cghash" and args.loss not in ("squared-hinge", "logistic"):
        raise dt.ConfigError("cghash needs --loss squared-hinge or logistic")
    if args.method == "structhash" and args.loss not in ("auc", "ndcg", "sndcg"):
        raise dt.ConfigError("structhash needs --loss auc, ndcg or sndcg")
    if args.reg != "linf" and args.c_prime is not None:
        raise dt.ConfigError("--c-prime is only meaningful with --reg linf")

    ds = _load(args, args.data)
    log_rows = []

    def on_bit(info):
        log_rows.append(info)

    t0 = time.perf_counter()
    if args.method == "lsh":
        model = lsh_baseline(ds.dim, args.bits, args.seed)
    else:
        nbhds = _neighborhoods(args, ds)
        if args.max_queries and len(nbhds) > args.max_queries:
            stride = max(1, len(nbhds) // args.max_queries)
            nbhds = nbhds[::stride][: args.max_queries]
        if args.method == "cghash":
            cfg = CGConfig(
                loss=args.loss, regularizer=args.reg, C=args.C,
                C_prime=args.c_prime if args.c_prime is not None else 1.0,
                bits=args.bits, master_tol=args.master_tol,
            )
            model = train_cghash(ds, dt.generate_triplets(nbhds), cfg,
                                 seed=args.seed, callback=on_bit)
        else:
            cfg = StructConfig(
                loss=RankScoreKind(args.loss, K=args.ndcg_k if args.loss == "ndcg" else None),
                C=args.C, bits=args.bits, eps_cp=args.eps_cp, mode=args.mode,
                max_cp_iters=args.max_cp_iters,
            )
            model = train_structhash(ds, nbhds, cfg, seed=args.seed, callback=on_bit)

    save_model(model, args.out)
    log_path = args.log if args.log else args.out + ".log.csv"
    with open(log_path, "w", encoding="utf-8") as fh:
        fh.write("bit,master_objective,cp_iterations,seconds\n")
        for row in log_rows:
            cp = row.get("cp_iterations", "")
            fh.write(
                f"{row['bit']},{row.get('master_objective', '')},{cp},{row['seconds']:.6f}\n"
            )
    print(
        f"trained {model.bits}-bit {args.method} model in "
        f"{time.perf_counter() - t0:.2f}s -> {args.out} (log: {log_path})"
    )
    return 0


def cmd_encode(args):
    model = load_model(args.model)
    ds = _load(args, args.data)
    codes = encode_all(model, ds)
    with open(args.out, "w", encoding="utf-8") as fh:
        for r in range(ds.n):
            fh.write(f"{r} " + " ".join(str(int(b)) for b in codes[r]) + "\n")
    print(f"encoded {ds.n} rows x {model.bits} bits -> {args.out}")
    return 0


def cmd_search(args):
    model = load_model(args.model)
    db = _load(args, args.db)
    if not 0 <= args.query_index < db.n:
        raise dt.ConfigError(f"query index {args.query_index} outside [0, {db.n})")
    query = db.x[args.query_index]
    order = rank_database(model, query, db)
    q_code = encode(model, query)
    codes = encode_all(model, db)
    top = order[: args.top_k] if args.top_k else order
    for rank, idx in enumerate(top, start=1):
        dist = weighted_hamming(model.weights, q_code, codes[idx])
        print(f"{rank},{int(idx)},{dist:g}")
    return 0


def cmd_eval(args):
    model = load_model(args.model)
    queries = _load(args, args.queries)
    db = _load(args, args.db)
    gt = dt.build_cross_neighborhoods(
        queries, db, args.nbhd_mode, args.k_rel, args.k_irr,
        percentile=args.percentile, seed=args.seed,
    )
    ks = [int(k) for k in args.Ks.split(",")]
    report = evaluate(model, queries, db, gt, ks)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(report.to_csv())
    for method, bits, metric, k, val in report.rows:
        if not metric.startswith("pr_"):
            suffix = f"@{k}" if k is not None else ""
            print(f"{method} {bits}-bit {metric}{suffix} = {val:.4f}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_io_flags(p):
    p.add_argument("--format", choices=["dense-csv", "sparse-index-value"], default="dense-csv")
    p.add_argument("--labels", choices=["last", "none"], default="none",
                   help="'last' marks the final dense-csv column as an integer label")


def _add_nbhd_flags(p):
    p.add_argument("--nbhd-mode", choices=["label", "l2-percentile"], default="label")
    p.add_argument("--k-rel", type=int, default=50)
    p.add_argument("--k-irr", type=int, default=100)
    p.add_argument("--percentile", type=float, default=0.02)


def build_parser():
    parser = _Parser(prog="colgenhash", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a seeded Gaussian-cluster benchmark as dense-csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--per-cluster", type=int, required=True)
    p.add_argument("--spread", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a hashing model")
    p.add_argument("--method", choices=["cghash", "structhash", "lsh"], required=True)
    p.add_argument("--data", required=True)
    _add_io_flags(p)
    _add_nbhd_flags(p)
    p.add_argument("--loss", default="squared-hinge",
                   help="cghash: squared-hinge|logistic; structhash: auc|ndcg|sndcg")
    p.add_argument("--reg", choices=["l1", "linf"], default="l1")
    p.add_argument("--C", type=float, default=10.0)
    p.add_argument("--c-prime", type=float, default=None)
    p.add_argument("--bits", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--master-tol", type=float, default=1e-6)
    p.add_argument("--eps-cp", type=float, default=0.01)
    p.add_argument("--mode", choices=["full", "stagewise"], default="full")
    p.add_argument("--max-cp-iters", type=int, default=100)
    p.add_argument("--ndcg-k", type=int, default=10)
    p.add_argument("--max-queries", type=int, default=0,
                   help="subsample the training neighborhoods to at most this many queries")
    p.add_argument("--out", required=True)
    p.add_argument("--log", default=None, help="sidecar CSV path (default: <out>.log.csv)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("encode", help="write binary codes, one row per line")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    _add_io_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("search", help="rank the database for one stored query row")
    p.add_argument("--model", required=True)
    p.add_argument("--db", required=True)
    _add_io_flags(p)
    p.add_argument("--query-index", type=int, required=True)
    p.add_argument("--top-k", type=int, default=10)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("eval", help="retrieval metrics of a model on a query/database split")
    p.add_argument("--model", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--db", required=True)
    _add_io_flags(p)
    _add_nbhd_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--Ks", default="10", help="comma-separated metric cutoffs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except dt.ConfigError as exc:
        print(f"colgenhash: config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"colgenhash: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
