"""Command-line entry point: ``pwclust <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from .changepoint import list_estimate
from .clustering import cluster_matrix, compare_partitions, pairwise_delta
from .errors import PwclustError
from .io import (DataError, TimeSeries, ingest, read_report, write_json, write_report,
                 write_samples)
from .experiment import load_config, load_dataset_spec, run_sweep, summarize, to_tsv
from .processes import generate_dataset
from .pwdelta import delta_details

log = logging.getLogger("pwclust")

EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _lambda(text: str) -> float:
    val = float(text)
    if not 0.0 < val < 1.0:
        raise argparse.ArgumentTypeError("lambda must lie in (0, 1)")
    return val


def _truth_path(out: Path) -> Path:
    name = out.name
    stem = name[:-len(".jsonl")] if name.endswith(".jsonl") else out.stem
    return out.with_name(stem + ".truth.json")


def cmd_generate(args) -> int:
    dataset = load_dataset_spec(args.spec)
    samples = generate_dataset(dataset.specs, args.n, args.seed, dataset.shared_noise)
    out = Path(args.out)
    write_samples(out, [TimeSeries(i, s.values) for i, s in zip(dataset.ids, samples)])
    truth = {
        "ids": list(dataset.ids),
        "labels": dataset.labels,
        "change_points": {i: list(s.change_points) for i, s in zip(dataset.ids, samples)},
        "alpha": dataset.alpha,
        "n": args.n,
        "seed": args.seed,
    }
    write_json(Path(args.truth_out) if args.truth_out else _truth_path(out), truth)
    return 0


def _warn_alpha(lam: float, truth_path):
    if truth_path is None:
        return
    alpha = read_report(truth_path).get("alpha")
    if alpha is not None and lam > alpha:
        warnings.warn(f"lambda={lam} exceeds the data's minimum segment fraction "
                      f"alpha={alpha}; consistency needs lambda <= alpha", stacklevel=2)


def _candidates(samples, lam):
    out, timings = [], {}
    t0 = time.perf_counter()
    for s in samples:
        out.append(list_estimate(s.values, lam))
    timings["list_estimate_s"] = time.perf_counter() - t0
    return out, timings


def cmd_changepoints(args) -> int:
    samples, norm = ingest(args.input)
    _warn_alpha(args.lam, args.truth)
    cands, timings = _candidates(samples, args.lam)
    body = {
        "config": {"lambda": args.lam, "normalization": norm.as_dict()},
        "samples": [{"id": s.id, **c.as_dict()} for s, c in zip(samples, cands)],
    }
    write_report(args.out, "changepoints", body, timings)
    return 0


def cmd_delta(args) -> int:
    samples, _ = ingest(args.input)
    by_id = {s.id: s for s in samples}
    ids = [p.strip() for p in args.pair.split(",")]
    if len(ids) != 2:
        raise UsageError("--pair takes two ids separated by a comma")
    for i in ids:
        if i not in by_id:
            raise DataError(f"no sample with id {i!r}")
    res = delta_details(by_id[ids[0]].values, by_id[ids[1]].values, args.lam)
    print(repr(res.value))
    return 0


def cmd_cluster(args) -> int:
    samples, norm = ingest(args.input)
    n = len(samples)
    if not 1 <= args.m <= n:
        raise UsageError(f"--m must satisfy 1 <= m <= N (number of samples); got m={args.m}, N={n}")
    _warn_alpha(args.lam, args.truth)
    cands, timings = _candidates(samples, args.lam)
    t0 = time.perf_counter()
    if n > 1:
        d = pairwise_delta([s.values for s in samples], args.lam, cands)
    else:
        d = np.zeros((1, 1))
    timings["pairwise_delta_s"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    res = cluster_matrix(d, args.m)
    timings["clustering_s"] = time.perf_counter() - t0
    ids = [s.id for s in samples]
    body = {
        "config": {"lambda": args.lam, "m": args.m, "normalization": norm.as_dict(),
                   "policy": "per pair: u_max=floor(log2 n_eff), v_max=ceil(-log2 s_min) capped at 24",
                   "seed": None},
        "ids": ids,
        "candidates": {s.id: list(c.candidates) for s, c in zip(samples, cands)},
        "distances": d,
        "centers": [ids[c] for c in res.centers],
        "labels": {i: lab for i, lab in zip(ids, res.labels)},
        "clusters": [[ids[i] for i in g] for g in res.clusters()],
    }
    write_report(args.out, "cluster", body, timings)
    return 0


def cmd_evaluate(args) -> int:
    report = read_report(args.report)
    body = report.get("body", report)
    if "labels" not in body:
        raise DataError(f"{args.report}: not a cluster report")
    truth = read_report(args.truth)
    t_labels = dict(zip(truth["ids"], truth["labels"]))
    ids = body["ids"]
    missing = [i for i in ids if i not in t_labels]
    if missing:
        raise DataError(f"truth file has no label for {missing[0]!r}")
    res = compare_partitions([body["labels"][i] for i in ids], [t_labels[i] for i in ids])
    print(f"exact_match\t{str(res['exact_match']).lower()}")
    print(f"pair_accuracy\t{res['pair_accuracy']!r}")
    return 0


def cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    dataset = cfg["dataset"]
    if cfg["lambda"] > dataset.alpha:
        warnings.warn(f"lambda={cfg['lambda']} exceeds alpha={dataset.alpha}", stacklevel=2)
    if not 1 <= cfg["m"] <= len(dataset.ids):
        raise UsageError(f"m must satisfy 1 <= m <= N; got m={cfg['m']}, N={len(dataset.ids)}")
    t0 = time.perf_counter()
    rows = run_sweep(dataset, cfg["n_list"], cfg["seeds"], cfg["lambda"], cfg["m"], args.jobs)
    elapsed = time.perf_counter() - t0
    table = to_tsv(summarize(rows))
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
    else:
        sys.stdout.write(table)
    if args.cells:
        Path(args.cells).write_text(to_tsv(rows), encoding="utf-8")
    if args.report:
        body = {"config": {k: cfg[k] for k in ("specs", "n_list", "seeds", "lambda", "m")},
                "cells": rows, "summary": summarize(rows)}
        write_report(args.report, "experiment", body, {"sweep_s": elapsed})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pwclust", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="draw synthetic samples from a dataset spec")
    g.add_argument("--spec", required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--truth-out", help="ground-truth sidecar (default: <out>.truth.json)")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("changepoints", help="candidate change points per sample")
    c.add_argument("--input", required=True)
    c.add_argument("--lambda", dest="lam", type=_lambda, required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--truth", help="sidecar from generate; used to check lambda <= alpha")
    c.set_defaults(func=cmd_changepoints)

    d = sub.add_parser("delta", help="print the estimated distance between two samples")
    d.add_argument("--input", required=True)
    d.add_argument("--pair", required=True, help="idA,idB")
    d.add_argument("--lambda", dest="lam", type=_lambda, required=True)
    d.set_defaults(func=cmd_delta)

    k = sub.add_parser("cluster", help="cluster all samples of a file")
    k.add_argument("--input", required=True)
    k.add_argument("--m", type=int, required=True)
    k.add_argument("--lambda", dest="lam", type=_lambda, required=True)
    k.add_argument("--out", required=True)
    k.add_argument("--truth", help="sidecar from generate; used to check lambda <= alpha")
    k.set_defaults(func=cmd_cluster)

    e = sub.add_parser("evaluate", help="compare a cluster report with ground truth")
    e.add_argument("--report", required=True)
    e.add_argument("--truth", required=True)
    e.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("experiment", help="seeded sweep over n; prints a convergence table")
    x.add_argument("--config", required=True)
    x.add_argument("--out", help="summary table (TSV); default stdout")
    x.add_argument("--cells", help="per-(n, seed) table (TSV)")
    x.add_argument("--report", help="JSON report with config, cells and summary")
    x.add_argument("--jobs", type=int, default=1)
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"pwclust: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PwclustError, OSError, KeyError) as exc:
        print(f"pwclust: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"pwclust: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
