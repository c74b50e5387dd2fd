"""Dataset specification files and seeded convergence sweeps.

A dataset spec is JSON::

    {
      "processes": {
        "fair":   {"kind": "iid_finite", "values": [0.25, 0.75], "probs": [0.5, 0.5]},
        "sticky": {"kind": "markov_finite", "values": [0.25, 0.75],
                   "transition": [[0.9, 0.1], [0.1, 0.9]]}
      },
      "samples": [
        {"id": "a", "thetas": [0.5, 1.0], "segments": ["fair", "sticky"], "repeat": 2}
      ],
      "shared_noise": false
    }

``repeat`` expands one entry into ``id_0, id_1, ...``.  The ground truth groups
samples whose segment sets coincide.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clustering import cluster_matrix, compare_partitions, pairwise_delta
from .errors import PreconditionError
from .processes import PiecewiseSpec, generate_dataset, ground_truth, spec_from_dict


@dataclass(frozen=True)
class DatasetSpec:
    ids: tuple
    specs: tuple
    shared_noise: bool = False

    @property
    def alpha(self) -> float:
        return min(s.alpha for s in self.specs)

    @property
    def labels(self) -> list:
        return ground_truth(self.specs)

    @property
    def n_classes(self) -> int:
        return len(set(self.labels))


def parse_dataset_spec(doc: dict) -> DatasetSpec:
    if not isinstance(doc, dict):
        raise PreconditionError("dataset spec must be a JSON object")
    try:
        procs = {name: spec_from_dict(d) for name, d in doc["processes"].items()}
        ids, specs = [], []
        for entry in doc["samples"]:
            segs = tuple(procs[name] for name in entry["segments"])
            pw = PiecewiseSpec(tuple(entry["thetas"]), segs)
            rep = int(entry.get("repeat", 1))
            base = str(entry["id"])
            for r in range(rep):
                ids.append(base if rep == 1 else f"{base}_{r}")
                specs.append(pw)
    except KeyError as exc:
        raise PreconditionError(f"dataset spec is missing {exc}") from None
    if len(set(ids)) != len(ids):
        raise PreconditionError("sample ids in the dataset spec must be unique")
    return DatasetSpec(tuple(ids), tuple(specs), bool(doc.get("shared_noise", False)))


def load_dataset_spec(path) -> DatasetSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_dataset_spec(json.load(fh))


def _cell(args):
    dataset, n, seed, lam, m = args
    samples = generate_dataset(dataset.specs, n, seed, dataset.shared_noise)
    d = pairwise_delta([s.values for s in samples], lam)
    truth = dataset.labels
    res = cluster_matrix(d, m)
    cmp = compare_partitions(res, truth)
    same, cross = [], []
    for i in range(len(truth)):
        for j in range(i + 1, len(truth)):
            (same if truth[i] == truth[j] else cross).append(float(d[i, j]))
    return {
        "n": n, "seed": seed,
        "delta_same_mean": statistics.fmean(same) if same else float("nan"),
        "delta_cross_mean": statistics.fmean(cross) if cross else float("nan"),
        "delta_same_max": max(same) if same else float("nan"),
        "delta_cross_min": min(cross) if cross else float("nan"),
        "exact_match": int(cmp["exact_match"]),
        "pair_accuracy": cmp["pair_accuracy"],
    }


def run_sweep(dataset: DatasetSpec, n_list, seeds, lam: float, m: int, jobs: int = 1) -> list:
    """Evaluate every ``(n, seed)`` cell; rows come back in ``n``-major, seed-minor order."""
    cells = [(dataset, int(n), int(s), float(lam), int(m)) for n in n_list for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_cell, cells))
    return [_cell(c) for c in cells]


def summarize(rows: list) -> list:
    out = []
    for n in sorted({r["n"] for r in rows}):
        sub = [r for r in rows if r["n"] == n]
        out.append({
            "n": n,
            "runs": len(sub),
            "delta_same_median": float(np.median([r["delta_same_mean"] for r in sub])),
            "delta_cross_median": float(np.median([r["delta_cross_mean"] for r in sub])),
            "separated_rate": statistics.fmean(
                float(r["delta_same_max"] < r["delta_cross_min"]) for r in sub),
            "exact_match_rate": statistics.fmean(r["exact_match"] for r in sub),
            "pair_accuracy_mean": statistics.fmean(r["pair_accuracy"] for r in sub),
        })
    return out


def to_tsv(rows: list) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), delimiter="\t", lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def load_config(path) -> dict:
    """Read an experiment config; ``specs`` may be inline or a path relative to the config."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    missing = {"specs", "n_list", "seeds", "lambda", "m"} - set(cfg)
    if missing:
        raise PreconditionError(f"config is missing keys: {sorted(missing)}")
    specs = cfg["specs"]
    if isinstance(specs, str):
        specs = json.loads((path.parent / specs).read_text(encoding="utf-8"))
    seeds = cfg["seeds"]
    if isinstance(seeds, int):
        seeds = list(range(seeds))
    return {
        "dataset": parse_dataset_spec(specs),
        "specs": specs,
        "n_list": [int(n) for n in cfg["n_list"]],
        "seeds": [int(s) for s in seeds],
        "lambda": float(cfg["lambda"]),
        "m": int(cfg["m"]),
    }
