"""Command line: ``icq gen | ingest | query | bench``."""

import argparse
import json
import logging
import os
import sys
import warnings

from . import datagen
from .bench import SweepConfig, run_suite, write_table
from .engine import METHODS, QuerySpec, icq_process, read_queries, write_results
from .space import FloorplanError, IndoorSpace, UnlocatableError
from .trajectories import SamplingGrid, TrajectoryError, TrajectoryStore, read_trajectories

log = logging.getLogger("icq")


def _load_store(args):
    space = IndoorSpace.load(args.floorplan)
    records = read_trajectories(args.trajectories, strict=getattr(args, "strict", False))
    store = TrajectoryStore(space, SamplingGrid(0.0, args.dt)).ingest(records)
    if args.kprime:
        store = store.split(args.kprime)
    return store


def _data_paths(args):
    if getattr(args, "data", None):
        for name, fname in (("floorplan", "floorplan.json"), ("trajectories", "trajectories.csv"),
                            ("queries", "queries.json"), ("truth", "ground_truth.json")):
            if getattr(args, name, None) is None:
                setattr(args, name, os.path.join(args.data, fname))
    for name in ("floorplan", "trajectories"):
        if getattr(args, name, None) is None:
            raise SystemExit(f"error: --{name} is required")


def cmd_gen(args):
    cfg = datagen.SimConfig.from_file(args.config) if args.config else datagen.SimConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.objects is not None:
        cfg.n_objects = args.objects
    if args.full_scale:
        cfg = datagen.SimConfig.full_scale(seed=cfg.seed)
    ds = datagen.generate(cfg)
    datagen.save(ds, args.out)
    n_rec = sum(len(r) for r in ds.records.values())
    print(f"wrote {len(ds.records)} objects, {n_rec} records, {len(ds.queries)} queries to {args.out}")
    return 0


def cmd_ingest(args):
    _data_paths(args)
    store = _load_store(args)
    pieces = store.pieces()
    summary = {
        "objects": len(store),
        "pieces": len(pieces),
        "records": sum(len(p) for p in pieces),
        "partitions": len(store.space.part_ids),
        "doors": len(store.space.doors),
        "kprime": store.kprime,
    }
    text = json.dumps(summary, indent=1)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def cmd_query(args):
    _data_paths(args)
    store = _load_store(args)
    if args.object:
        specs = [QuerySpec(args.object, args.t_start, args.t_end, args.delta, args.eta, args.k,
                           args.method or "constrained", "cli")]
    elif args.queries:
        specs = read_queries(args.queries)
        if args.method:
            for s in specs:
                s.method = args.method
    else:
        raise SystemExit("error: give --object or --queries")
    results = [icq_process(store, s, ll=args.ll, v_max=args.v_max) for s in specs]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_results(fh, results)
    else:
        write_results(sys.stdout, results)
    return 0


def cmd_bench(args):
    _data_paths(args)
    store = _load_store(args)
    if not args.queries:
        raise SystemExit("error: bench needs --queries (or --data)")
    specs = read_queries(args.queries)
    truth = {}
    if args.truth and os.path.exists(args.truth):
        with open(args.truth) as fh:
            truth = json.load(fh)
    sweep_cfg = {}
    if args.config:
        with open(args.config) as fh:
            sweep_cfg = json.load(fh)
    dims = sweep_cfg.pop("dimensions", None) or [args.dimension]
    methods = tuple(args.method.split(",")) if args.method else tuple(sweep_cfg.pop("methods", METHODS))
    values = sweep_cfg.pop("values", {})
    os.makedirs(args.out, exist_ok=True)
    for dim in dims:
        sweep = SweepConfig(dimension=dim, values=values.get(dim), methods=methods,
                            repetitions=args.repetitions, instances=args.instances, **sweep_cfg)
        if args.ll is not None and dim != "ll":
            sweep.defaults["ll"] = args.ll

        def progress(method, params, qid, r):
            log.info("%s %s=%s %s: %d contacts, %.1f ms", method, dim, params[dim], qid, len(r.contacts),
                     r.wall_ms)

        rows = run_suite(store, specs, truth, sweep, progress)
        path = os.path.join(args.out, f"sweep_{dim}.csv")
        write_table(path, rows)
        print(f"wrote {path} ({len(rows)} rows)")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="icq", description="Indoor contact queries over uncertain positioning data")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(sp):
        sp.add_argument("--data", help="directory written by 'icq gen'")
        sp.add_argument("--floorplan")
        sp.add_argument("--trajectories")
        sp.add_argument("--kprime", type=int, default=6, help="split parameter (0 disables splitting)")
        sp.add_argument("--dt", type=float, default=10.0, help="sampling interval in seconds")
        sp.add_argument("--strict", action="store_true", help="require et - t == 5 s on every record")

    g = sub.add_parser("gen", help="generate a synthetic benchmark")
    g.add_argument("--config", help="JSON file with SimConfig fields")
    g.add_argument("--seed", type=int)
    g.add_argument("--objects", type=int)
    g.add_argument("--full-scale", action="store_true", help="5 floors, 24 h, 2000 objects")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    i = sub.add_parser("ingest", help="validate and split trajectories")
    data_args(i)
    i.add_argument("--out", help="write the summary JSON here")
    i.set_defaults(func=cmd_ingest)

    q = sub.add_parser("query", help="run one query or a query file")
    data_args(q)
    q.add_argument("--queries", help="JSON query file")
    q.add_argument("--object")
    q.add_argument("--t-start", type=float, default=float("-inf"))
    q.add_argument("--t-end", type=float, default=float("inf"))
    q.add_argument("--delta", type=float, default=2.0)
    q.add_argument("--eta", type=float, default=0.5)
    q.add_argument("--k", type=int, default=18)
    q.add_argument("--method", choices=METHODS)
    q.add_argument("--ll", type=float, default=0.4)
    q.add_argument("--v-max", type=float, default=1.4)
    q.add_argument("--out", help="results file (default: stdout)")
    q.set_defaults(func=cmd_query)

    b = sub.add_parser("bench", help="parameter sweep with effectiveness metrics")
    data_args(b)
    b.add_argument("--queries")
    b.add_argument("--truth")
    b.add_argument("--config", help="JSON sweep file: dimensions, values, methods, defaults")
    b.add_argument("--dimension", default="k", choices=["delta", "eta", "k", "ll"])
    b.add_argument("--method", help="comma-separated methods")
    b.add_argument("--ll", type=float)
    b.add_argument("--repetitions", type=int, default=1)
    b.add_argument("--instances", type=int, default=20)
    b.add_argument("--out", required=True, help="output directory")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except (FloorplanError, TrajectoryError, UnlocatableError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
