"""Farthest-point initialization and nearest-center assignment over estimated distances.

Sample indices and cluster labels are 0-based.  Every argmax/argmin breaks
ties toward the smallest index, so results depend only on the distance matrix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .changepoint import list_estimate
from .errors import DegenerateDistanceError, PreconditionError
from .pwdelta import delta_details


@dataclass
class ClusteringResult:
    m: int
    centers: tuple
    labels: tuple
    distances: np.ndarray | None = None
    params: dict = field(default_factory=dict)

    def clusters(self) -> list:
        groups = [[] for _ in range(self.m)]
        for i, lab in enumerate(self.labels):
            groups[lab].append(i)
        return groups


def pairwise_delta(samples, lam: float, candidates=None) -> np.ndarray:
    """Symmetric matrix of estimated distances, one evaluation per unordered pair.

    Candidate lists are computed once per sample (or taken from ``candidates``).
    """
    ys = [np.asarray(s, dtype=np.float64) for s in samples]
    n = len(ys)
    if n < 2:
        raise PreconditionError("need at least two samples")
    if candidates is None:
        candidates = [list_estimate(y, lam) for y in ys]
    d = np.zeros((n, n))
    for i, j in itertools.combinations(range(n), 2):
        val = delta_details(ys[i], ys[j], lam, candidates[i], candidates[j]).value
        d[i, j] = d[j, i] = val
    return d


def _check_matrix(d) -> np.ndarray:
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise PreconditionError("distance matrix must be square")
    return d


def farthest_point_init(d, m: int) -> tuple:
    """Pick ``m`` centers: index 0 first, then each point farthest from those chosen.

    Raises
    ------
    DegenerateDistanceError
        If the farthest remaining point is already a center, i.e. every
        point is at distance 0 from the current centers.
    """
    d = _check_matrix(d)
    n = d.shape[0]
    if not 1 <= m <= n:
        raise PreconditionError(f"number of clusters m={m} must satisfy 1 <= m <= N={n}")
    centers = [0]
    nearest = d[:, 0].copy()
    for _ in range(1, m):
        c = int(np.argmax(nearest))
        if c in centers:
            raise DegenerateDistanceError(
                f"cannot place {m} distinct centers: all samples lie at distance 0 "
                f"from the first {len(centers)} centers")
        centers.append(c)
        nearest = np.minimum(nearest, d[:, c])
    return tuple(centers)


def assign_remaining(d, centers) -> ClusteringResult:
    d = _check_matrix(d)
    centers = tuple(int(c) for c in centers)
    if len(set(centers)) != len(centers):
        raise PreconditionError("centers must be distinct")
    labels = np.argmin(d[:, list(centers)], axis=1)
    for k, c in enumerate(centers):
        labels[c] = k
    return ClusteringResult(len(centers), centers, tuple(int(x) for x in labels), d)


def cluster_matrix(d, m: int) -> ClusteringResult:
    return assign_remaining(d, farthest_point_init(d, m))


def cluster(samples, m: int, lam: float) -> ClusteringResult:
    """Partition ``samples`` into ``m`` clusters using the estimated class distance."""
    if not 1 <= m <= len(samples):
        raise PreconditionError(
            f"number of clusters m={m} must satisfy 1 <= m <= N={len(samples)}")
    if len(samples) == 1:
        d = np.zeros((1, 1))
    else:
        d = pairwise_delta(samples, lam)
    res = cluster_matrix(d, m)
    res.params = {"lambda": lam, "m": m}
    return res


def _as_labels(part) -> list:
    if isinstance(part, ClusteringResult):
        return list(part.labels)
    part = list(part)
    # a list of groups: [[0, 1], [2, 3]]
    if part and all(isinstance(g, (list, tuple, set, frozenset)) for g in part):
        n = sum(len(g) for g in part)
        labels = [-1] * n
        for k, g in enumerate(part):
            for i in g:
                labels[i] = k
        if -1 in labels:
            raise PreconditionError("groups do not partition 0..N-1")
        return labels
    return part


def compare_partitions(a, g) -> dict:
    """Exact-match flag and pairwise co-membership agreement between two partitions.

    Either argument may be a :class:`ClusteringResult`, a label sequence, or a
    list of index groups.
    """
    la, lg = _as_labels(a), _as_labels(g)
    if len(la) != len(lg):
        raise PreconditionError("partitions cover different numbers of samples")
    n = len(la)
    agree = total = 0
    for i, j in itertools.combinations(range(n), 2):
        total += 1
        agree += (la[i] == la[j]) == (lg[i] == lg[j])
    acc = agree / total if total else 1.0
    return {"exact_match": agree == total, "pair_accuracy": acc}
