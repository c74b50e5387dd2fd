"""Dyadic-cube empirical frequencies and the empirical distributional distance.

All series handled here are expected to live in ``[0, 1)``; the CLI performs
the affine rescale before anything reaches this module.

For a window length ``u`` and a resolution ``v`` the unit cube ``[0, 1)^u`` is
split into ``2^(u*v)`` half-open dyadic cubes.  A window ``x[i:i+u]`` falls in
the cube whose index is ``floor(x[i+j] * 2^v)`` in every coordinate ``j``.

Distances are computed by refining cubes level by level: the cube of a window
at resolution ``v`` is its cube at ``v - 1`` plus one bit per coordinate.  Only
occupied cubes are ever materialized, and a window that is alone in its cube
stays alone at every finer resolution, so it is retired from the refinement and
its contribution is counted in closed form.  This keeps the cost near
``O(n * u_max * v_max * log n)`` even when ``v_max`` is large.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import DegenerateInputError, DomainError, PreconditionError

# Upper bound on the resolution level picked by ``default_policy``.
V_CAP = 24


def weight(j: int) -> float:
    """Summable positive weight ``1 / (j (j + 1))``; the weights over ``j >= 1`` sum to 1."""
    if j < 1:
        raise PreconditionError(f"weight index must be >= 1, got {j}")
    return 1.0 / (j * (j + 1))


@dataclass(frozen=True)
class TruncationPolicy:
    """Finite truncation of the double sum over window lengths and resolutions."""

    u_max: int
    v_max: int

    def __post_init__(self):
        if int(self.u_max) != self.u_max or self.u_max < 1:
            raise PreconditionError(f"u_max must be a positive integer, got {self.u_max}")
        if int(self.v_max) != self.v_max or self.v_max < 1:
            raise PreconditionError(f"v_max must be a positive integer, got {self.v_max}")
        if self.v_max > 52:
            raise PreconditionError("v_max above 52 exceeds double precision")

    weight = staticmethod(weight)

    def max_value(self) -> float:
        """Upper bound on any distance computed under this policy."""
        su = sum(weight(u) for u in range(1, self.u_max + 1))
        sv = sum(weight(v) for v in range(1, self.v_max + 1))
        return 2.0 * su * sv

    def as_dict(self) -> dict:
        return {"u_max": self.u_max, "v_max": self.v_max}


@dataclass(frozen=True)
class DyadicCube:
    u: int
    v: int
    index: tuple

    def __post_init__(self):
        if len(self.index) != self.u:
            raise PreconditionError("cube index must have one entry per coordinate")
        side = 1 << self.v
        if any(not 0 <= i < side for i in self.index):
            raise PreconditionError(f"cube index entries must lie in 0..{side - 1}")


@dataclass(frozen=True)
class FrequencyTable:
    """Occupied cubes at one scale with their window counts."""

    u: int
    v: int
    counts: dict
    window_count: int

    def frequency(self, index: tuple) -> float:
        if self.window_count == 0:
            return 0.0
        return self.counts.get(tuple(index), 0) / self.window_count


def as_unit_array(x) -> np.ndarray:
    """Return ``x`` as a 1-d float array, checking it lies in ``[0, 1)``."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 1:
        raise PreconditionError("series must be one-dimensional")
    if a.size and not np.all(np.isfinite(a)):
        raise DomainError("series contains non-finite values")
    if a.size and (a.min() < 0.0 or a.max() >= 1.0):
        raise DomainError("series values must lie in [0, 1); normalize the data first")
    return a


def cube_index(point: Sequence[float], v: int) -> tuple:
    """Index of the level-``v`` dyadic cube containing ``point``."""
    if v < 1:
        raise PreconditionError(f"level must be >= 1, got {v}")
    scale = float(1 << v)
    out = []
    for p in point:
        p = float(p)
        if not 0.0 <= p < 1.0:
            raise DomainError(f"coordinate {p!r} outside [0, 1)")
        out.append(int(math.floor(p * scale)))
    return tuple(out)


def frequency_table(x, u: int, v: int) -> FrequencyTable:
    a = as_unit_array(x)
    n = a.size
    if n < u:
        return FrequencyTable(u, v, {}, 0)
    q = np.floor(a * float(1 << v)).astype(np.int64)
    windows = np.lib.stride_tricks.sliding_window_view(q, u)
    keys, counts = np.unique(windows, axis=0, return_counts=True)
    table = {tuple(int(k) for k in key): int(c) for key, c in zip(keys, counts)}
    return FrequencyTable(u, v, table, n - u + 1)


def empirical_frequency(x, cube: DyadicCube) -> float:
    """Fraction of the length-``u`` windows of ``x`` that fall in ``cube``.

    Returns 0 when the series is shorter than the window.
    """
    a = as_unit_array(x)
    n = a.size
    if n < cube.u:
        return 0.0
    hits = 0
    for i in range(n - cube.u + 1):
        if cube_index(a[i:i + cube.u], cube.v) == tuple(cube.index):
            hits += 1
    return hits / (n - cube.u + 1)


def min_nonzero_gap(x, y) -> float:
    """Smallest strictly positive difference among all values of ``x`` and ``y``.

    Raises
    ------
    DegenerateInputError
        If every value is identical.
    """
    z = np.unique(np.concatenate([np.asarray(x, dtype=np.float64).ravel(),
                                  np.asarray(y, dtype=np.float64).ravel()]))
    if z.size < 2:
        raise DegenerateInputError("all values are identical; no non-zero gap exists")
    return float(np.diff(z).min())


def default_policy(n: int, s_min: float) -> TruncationPolicy:
    """Truncation with ``u_max = floor(log2 n)`` and ``v_max = ceil(-log2 s_min)``.

    Both are floored at 1 and ``v_max`` is capped at ``V_CAP``.
    """
    n = int(n)
    if n < 1:
        raise PreconditionError(f"effective length must be >= 1, got {n}")
    if not 0.0 < s_min <= 1.0:
        raise PreconditionError(f"s_min must lie in (0, 1], got {s_min}")
    u_max = max(1, n.bit_length() - 1)
    # s = m * 2**e with m in [0.5, 1) gives ceil(-log2 s) = 1 - e exactly
    _, e = math.frexp(s_min)
    v_max = min(max(1, 1 - e), V_CAP)
    return TruncationPolicy(u_max, v_max)


def policy_for(x, y, n: int) -> TruncationPolicy:
    """Default policy for comparing ``x`` and ``y`` at effective length ``n``.

    Falls back to ``v_max = 1`` when all values coincide.
    """
    try:
        s_min = min_nonzero_gap(x, y)
    except DegenerateInputError:
        return default_policy(n, 1.0)
    return default_policy(n, min(s_min, 1.0))


# ---------------------------------------------------------------------------
# refinement engine


def _quantize(z: np.ndarray, v_max: int) -> np.ndarray:
    return np.floor(z * float(1 << v_max)).astype(np.int64)


def _group(keys: np.ndarray, span: int, counts: bool = True) -> tuple:
    """Dense ranks of ``keys`` (in key order) and the size of each rank's group.

    ``span`` bounds the keys from above; a counting pass replaces the sort
    when the span is small.  With ``counts=False`` the second item is the
    number of distinct keys instead.
    """
    if span <= max(4 * keys.size, 1 << 16):
        hist = np.bincount(keys, minlength=span)
        occupied = hist > 0
        rank = np.cumsum(occupied) - 1
        sizes = hist[occupied]
        return rank[keys], (sizes if counts else sizes.size)
    _, inv, sizes = np.unique(keys, return_inverse=True, return_counts=True)
    return inv.ravel(), (sizes if counts else sizes.size)


def _refine(z: np.ndarray, starts: Callable[[int], np.ndarray],
            policy: TruncationPolicy) -> Iterator[tuple]:
    """Walk all scales and report the cube ids of the windows still sharing a cube.

    ``starts(u)`` gives the start positions (into ``z``) of the length-``u``
    windows to track.  For every ``(v, u)``, ``v`` outermost, yields
    ``(u, v, alive, ids, retired)`` where ``alive`` indexes ``starts(u)`` for
    windows whose cube holds at least one other tracked window, ``ids`` labels
    their cubes (equal id iff same cube), and ``retired`` indexes the windows
    that became alone in their cube at this level.  Ids depend only on cube
    contents, never on the order of ``z``.
    """
    u_max, v_max = policy.u_max, policy.v_max
    if u_max > 32:
        raise PreconditionError("u_max above 32 is not supported")
    q = _quantize(z, v_max)
    itype = np.int32 if z.size < 2 ** 31 else np.int64
    start_cache = {u: starts(u).astype(itype) for u in range(1, u_max + 1)}
    alive = {u: np.arange(start_cache[u].size, dtype=itype) for u in start_cache}
    prev = {u: np.zeros(start_cache[u].size, dtype=itype) for u in start_cache}
    for v in range(1, v_max + 1):
        # 32-bit work arrays: u_max <= 32 bits per key and half the memory traffic
        bits = ((q >> (v_max - v)) & 1).astype(np.uint32)
        # no keys are needed above the largest u that still has live windows
        u_top = max((u for u in alive if alive[u].size), default=0)
        pack = np.zeros(z.size, dtype=np.uint32)
        direct = False
        for u in range(1, u_max + 1):
            idx = alive[u]
            if u > u_top:
                yield u, v, idx, idx, idx
                continue
            # once few windows remain, packing them one by one beats a full pass
            direct = direct or idx.size * u_top <= z.size
            if not direct and u <= z.size:
                pack[:z.size - u + 1] |= bits[u - 1:] << np.uint32(u - 1)
            if idx.size == 0:
                yield u, v, idx, idx, idx
                continue
            s = start_cache[u][idx]
            if direct:
                fresh = np.zeros(idx.size, dtype=np.uint32)
                for j in range(u):
                    fresh |= bits[s + j] << np.uint32(j)
            else:
                fresh = pack[s]
            # rank the new bits first; low-complexity data has few distinct patterns
            fresh, n_fresh = _group(fresh.astype(np.int64), 1 << u, counts=False)
            keys = prev[u].astype(np.int64) * n_fresh + fresh
            inv, counts = _group(keys, (int(prev[u].max()) + 1) * n_fresh)
            lone = counts[inv] == 1
            retired = idx[lone]
            keep = ~lone
            alive[u] = idx[keep]
            prev[u] = inv[keep].astype(itype)
            yield u, v, alive[u], prev[u], retired


def _cross_l1(left: Sequence[np.ndarray], right: Sequence[np.ndarray],
              policy: TruncationPolicy) -> np.ndarray:
    """Weighted L1 distance for every pair (left[a], right[b]).

    All sequences must share one length.  Per scale the L1 of the raw window
    counts is an exact integer, so the result is symmetric and vanishes on
    identical inputs without floating-point slack.
    """
    seqs = list(left) + list(right)
    n = seqs[0].size
    if any(s.size != n for s in seqs):
        raise PreconditionError("all sequences must have the same length")
    na, nb, k = len(left), len(right), len(seqs)
    z = np.concatenate(seqs) if k else np.zeros(0)
    offsets = np.arange(k) * n

    def starts(u):
        if n < u:
            return np.zeros(0, dtype=np.int64)
        return (offsets[:, None] + np.arange(n - u + 1)[None, :]).ravel()

    def owner_of(u, idx):
        return idx // max(n - u + 1, 1)

    out = np.zeros((na, nb))
    lone = {u: np.zeros(k, dtype=np.int64) for u in range(1, policy.u_max + 1)}
    for u, v, alive, ids, retired in _refine(z, starts, policy):
        n_win = n - u + 1
        if n_win <= 0:
            # Both empirical measures vanish identically
            continue
        if retired.size:
            lone[u] += np.bincount(owner_of(u, retired), minlength=k)
        l1 = lone[u][:na, None] + lone[u][None, na:]
        if alive.size:
            owners = owner_of(u, alive).astype(np.int64)
            n_ids = int(ids.max()) + 1
            if n_ids * k <= 1 << 24:
                hist = np.bincount(owners * n_ids + ids, minlength=k * n_ids).reshape(k, n_ids)
            else:
                _, dense = np.unique(ids, return_inverse=True)
                dense = dense.ravel()
                n_ids = int(dense.max()) + 1
                hist = np.bincount(owners * n_ids + dense, minlength=k * n_ids).reshape(k, n_ids)
            for a in range(na):
                l1[a] += np.abs(hist[na:] - hist[a]).sum(axis=1)
        out += (weight(u) * weight(v)) * (l1 / n_win)
    return out


def dhat(x, y, n_eff: int, policy: TruncationPolicy) -> float:
    """Empirical distributional distance between the first ``n_eff`` points of two series.

    Parameters
    ----------
    x, y : array-like
        Series with values in ``[0, 1)``.
    n_eff : int
        Number of leading points used from each series.
    policy : TruncationPolicy
        Range of window lengths and resolutions summed over.

    Returns
    -------
    float
        ``sum_{u,v} w_u w_v sum_B |mu(x, B) - mu(y, B)|``; exactly 0 when the
        two prefixes coincide.
    """
    a, b = as_unit_array(x), as_unit_array(y)
    n_eff = int(n_eff)
    if n_eff < 1:
        raise PreconditionError(f"n_eff must be >= 1, got {n_eff}")
    if n_eff > a.size or n_eff > b.size:
        raise PreconditionError(
            f"n_eff={n_eff} exceeds series lengths ({a.size}, {b.size})")
    return float(_cross_l1([a[:n_eff]], [b[:n_eff]], policy)[0, 0])


def dhat_matrix(left: Sequence, right: Sequence, n_eff: int,
                policy: TruncationPolicy) -> np.ndarray:
    """``dhat`` for every pair drawn from ``left`` x ``right`` in one pass."""
    n_eff = int(n_eff)
    la = [as_unit_array(s) for s in left]
    ra = [as_unit_array(s) for s in right]
    for s in la + ra:
        if s.size < n_eff:
            raise PreconditionError(f"n_eff={n_eff} exceeds a series of length {s.size}")
    return _cross_l1([s[:n_eff] for s in la], [s[:n_eff] for s in ra], policy)


def window_pair_scores(y: np.ndarray, cuts: np.ndarray, w: int,
                       policy: TruncationPolicy) -> np.ndarray:
    """``dhat`` between ``y[t-w:t]`` and ``y[t:t+w]`` for every ``t`` in ``cuts``.

    Windows of one series overlap from one cut to the next, so cube ids are
    computed once over the whole series.  Each still-shared window is then
    credited to the few cuts whose left or right block contains it.
    """
    y = as_unit_array(y)
    cuts = np.asarray(cuts, dtype=np.int64)
    n = y.size
    if cuts.size and (cuts.min() < w or cuts.max() > n - w):
        raise PreconditionError("every cut needs a full window on both sides")
    if np.any(np.diff(cuts) <= 0):
        raise PreconditionError("cuts must be strictly increasing")

    def starts(u):
        return np.arange(max(n - u + 1, 0), dtype=np.int64)

    scores = np.zeros(cuts.size)
    lone_mask = {u: np.zeros(max(n - u + 1, 0), dtype=np.int64)
                 for u in range(1, policy.u_max + 1)}
    for u, v, alive, ids, retired in _refine(y, starts, policy):
        n_win = w - u + 1
        if n_win <= 0:
            continue
        lo_l, lo_r = cuts - w, cuts
        hi_l, hi_r = cuts - u + 1, cuts + w - u + 1
        mask = lone_mask[u]
        mask[retired] = 1
        csum = np.concatenate([[0], np.cumsum(mask)])
        l1 = (csum[hi_l] - csum[lo_l]) + (csum[hi_r] - csum[lo_r])
        if alive.size:
            l1 = l1 + _alive_pair_l1(alive, ids, cuts, u, w)
        scores += (weight(u) * weight(v)) * (l1 / n_win)
    return scores


def _expand(first: np.ndarray, stop: np.ndarray):
    """Flatten the index ranges ``[first[i], stop[i])``; returns (owner, value) pairs."""
    count = np.maximum(stop - first, 0)
    owner = np.repeat(np.arange(first.size), count)
    offset = np.arange(owner.size) - np.repeat(np.cumsum(count) - count, count)
    return owner, np.repeat(first, count) + offset


def _alive_pair_l1(alive, ids, cuts, u, w) -> np.ndarray:
    n_cuts = cuts.size
    _, ids = np.unique(ids, return_inverse=True)
    ids = ids.ravel()
    n_ids = int(ids.max()) + 1
    # few occupied cubes: count each cube in each block by binary search
    if n_ids * n_cuts * 4 < alive.size * 20:
        span = int(max(alive.max(), cuts.max() + w)) + 2
        keys = np.sort(ids * span + alive)
        base = np.arange(n_ids)[:, None] * span

        def count(lo, hi):
            return np.searchsorted(keys, base + hi) - np.searchsorted(keys, base + lo)

        left = count(cuts - w, cuts - u + 1)
        right = count(cuts, cuts + w - u + 1)
        return np.abs(left - right).sum(axis=0)
    # many cubes: a window at p sits in the left block of cut t iff
    # p+u <= t <= p+w, and in the right block iff p-w+u <= t <= p
    lo = np.searchsorted(cuts, alive + u, side="left")
    hi = np.searchsorted(cuts, alive + w, side="right")
    own_l, cut_l = _expand(lo, hi)
    lo = np.searchsorted(cuts, alive - w + u, side="left")
    hi = np.searchsorted(cuts, alive, side="right")
    own_r, cut_r = _expand(lo, hi)
    key_l = ids[own_l] * n_cuts + cut_l
    key_r = ids[own_r] * n_cuts + cut_r
    size = n_ids * n_cuts
    if size <= 1 << 22:
        diff = np.bincount(key_l, minlength=size) - np.bincount(key_r, minlength=size)
        return np.abs(diff.reshape(n_ids, n_cuts)).sum(axis=0)
    key = np.concatenate([key_l, key_r])
    sign = np.concatenate([np.ones(key_l.size), -np.ones(key_r.size)])
    uniq, inv = np.unique(key, return_inverse=True)
    diff = np.bincount(inv.ravel(), weights=sign)
    return np.bincount(uniq % n_cuts, weights=np.abs(diff), minlength=n_cuts)


# ---------------------------------------------------------------------------
# comparisons against an exact measure


def _window_tuples(a: np.ndarray, u: int, v: int) -> np.ndarray:
    q = np.floor(a * float(1 << v)).astype(np.int64)
    return np.lib.stride_tricks.sliding_window_view(q, u)


def l1_tuple_measures(tuples_a: np.ndarray, mass_a: np.ndarray,
                      tuples_b: np.ndarray, mass_b: np.ndarray) -> float:
    """``sum_B |P(B) - Q(B)|`` for two measures given as weighted cube-index tuples.

    Tuples may repeat; their masses are pooled per cube first.
    """
    if tuples_a.shape[0] == 0 and tuples_b.shape[0] == 0:
        return 0.0
    both = np.concatenate([tuples_a, tuples_b], axis=0)
    _, inv = np.unique(both, axis=0, return_inverse=True)
    inv = inv.ravel()
    m = int(inv.max()) + 1
    pa = np.bincount(inv[:tuples_a.shape[0]], weights=mass_a, minlength=m)
    pb = np.bincount(inv[tuples_a.shape[0]:], weights=mass_b, minlength=m)
    return float(np.abs(pa - pb).sum())


def dhat_vs_measure(x, oracle, n_eff: int, policy: TruncationPolicy) -> float:
    """Empirical distance between the first ``n_eff`` points of ``x`` and an exact measure.

    ``oracle`` must provide ``cube_masses(u, v) -> (tuples, masses)`` listing
    the occupied cubes of its ``u``-dimensional marginal at level ``v``.
    """
    a = as_unit_array(x)
    n_eff = int(n_eff)
    if not 1 <= n_eff <= a.size:
        raise PreconditionError(f"n_eff={n_eff} not in 1..{a.size}")
    a = a[:n_eff]
    total = 0.0
    for v in range(1, policy.v_max + 1):
        for u in range(1, policy.u_max + 1):
            mt, mm = oracle.cube_masses(u, v)
            if n_eff >= u:
                wt = _window_tuples(a, u, v)
                wm = np.full(wt.shape[0], 1.0 / wt.shape[0])
            else:
                wt = np.zeros((0, u), dtype=np.int64)
                wm = np.zeros(0)
            total += weight(u) * weight(v) * l1_tuple_measures(wt, wm, mt, mm)
    return total


def brute_dhat(x, y, n_eff: int, policy: TruncationPolicy) -> float:
    """Reference ``dhat`` by explicit dictionary counting; slow, for tests and audits."""
    a = [float(t) for t in as_unit_array(x)[:n_eff]]
    b = [float(t) for t in as_unit_array(y)[:n_eff]]
    total = 0.0
    for v in range(1, policy.v_max + 1):
        for u in range(1, policy.u_max + 1):
            if n_eff < u:
                continue
            ca = Counter(cube_index(a[i:i + u], v) for i in range(n_eff - u + 1))
            cb = Counter(cube_index(b[i:i + u], v) for i in range(n_eff - u + 1))
            l1 = sum(abs(ca[k] - cb[k]) for k in set(ca) | set(cb))
            total += weight(u) * weight(v) * l1 / (n_eff - u + 1)
    return total
