"""Synthetic piecewise stationary ergodic samples and exact measures for checking estimates.

Three segment families are available:

* ``iid_finite``: i.i.d. draws from finitely many dyadic support points;
* ``markov_finite``: a stationary, irreducible, aperiodic finite Markov chain
  whose states emit dyadic values;
* ``rotation``: ``x_t = frac(phase + t * angle)`` with a uniform phase, a
  stationary ergodic process that is not mixing.

The first two have exact cube masses (:class:`MeasureOracle`), which makes the
population distance between them computable by enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EnumerationLimitError, PreconditionError, UnsupportedOracleError
from .measure import V_CAP, TruncationPolicy, l1_tuple_measures, weight

ENUMERATION_LIMIT = 10 ** 7
KINDS = ("iid_finite", "markov_finite", "rotation")


def _check_values(values) -> tuple:
    vals = tuple(float(v) for v in values)
    if not vals:
        raise PreconditionError("at least one support value is required")
    if len(set(vals)) != len(vals):
        raise PreconditionError("support values must be distinct")
    scale = float(1 << V_CAP)
    for v in vals:
        if not 0.0 <= v < 1.0:
            raise PreconditionError(f"support value {v} outside [0, 1)")
        if v * scale != math.floor(v * scale):
            raise PreconditionError(
                f"support value {v} is not a dyadic rational with denominator <= 2^{V_CAP}")
    return vals


def _normalize(p, what: str) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise PreconditionError(f"{what} must be finite and nonnegative")
    s = p.sum(axis=-1)
    if np.any(np.abs(s - 1.0) > 1e-12):
        raise PreconditionError(f"{what} must sum to 1 (got {s})")
    return p / (s[..., None] if p.ndim > 1 else s)


def stationary_distribution(t: np.ndarray) -> np.ndarray:
    k = t.shape[0]
    a = np.vstack([t.T - np.eye(k), np.ones((1, k))])
    rhs = np.zeros(k + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _is_primitive(t: np.ndarray) -> bool:
    k = t.shape[0]
    pos = (t > 0).astype(np.int64)
    power = pos.copy()
    # Wielandt: a primitive k x k matrix has a positive power at (k-1)^2 + 1
    for _ in range((k - 1) ** 2 + 1):
        if power.all():
            return True
        power = ((power @ pos) > 0).astype(np.int64)
    return bool(power.all())


@dataclass(frozen=True)
class ProcessSpec:
    """Generative description of one stationary ergodic segment distribution.

    Build instances with :func:`iid`, :func:`markov` or :func:`rotation`,
    which canonicalize the representation so that equal distributions of the
    same family compare equal.
    """

    kind: str
    values: tuple = ()
    probs: tuple = ()
    transition: tuple = ()
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError(f"unknown process kind {self.kind!r}")
        if self.kind == "rotation":
            if not 0.0 < self.angle < 1.0:
                raise PreconditionError("rotation angle must lie in (0, 1)")
            return
        _check_values(self.values)
        if self.kind == "iid_finite" and len(self.probs) != len(self.values):
            raise PreconditionError("need one probability per support value")
        if self.kind == "markov_finite":
            t = np.asarray(self.transition, dtype=np.float64)
            if t.shape != (len(self.values), len(self.values)):
                raise PreconditionError("transition matrix must be square, one row per state")
            if not _is_primitive(t):
                raise PreconditionError("transition matrix must be irreducible and aperiodic")

    @property
    def stationary(self) -> np.ndarray:
        """Initial law: the support probabilities, or the chain's stationary distribution."""
        if self.kind == "iid_finite":
            return np.asarray(self.probs)
        if self.kind == "markov_finite":
            return stationary_distribution(np.asarray(self.transition))
        raise UnsupportedOracleError("a rotation has no finite state distribution")

    def as_dict(self) -> dict:
        if self.kind == "rotation":
            return {"kind": self.kind, "angle": self.angle}
        if self.kind == "iid_finite":
            return {"kind": self.kind, "values": list(self.values), "probs": list(self.probs)}
        return {"kind": self.kind, "values": list(self.values),
                "transition": [list(r) for r in self.transition]}


def iid(values: Sequence[float], probs: Sequence[float]) -> ProcessSpec:
    vals = _check_values(values)
    p = _normalize(probs, "probabilities")
    if p.shape != (len(vals),):
        raise PreconditionError("need one probability per support value")
    order = np.argsort(vals)
    return ProcessSpec("iid_finite", tuple(vals[i] for i in order),
                       tuple(float(p[i]) for i in order))


def markov(values: Sequence[float], transition) -> ProcessSpec:
    vals = _check_values(values)
    t = _normalize(np.asarray(transition, dtype=np.float64), "transition rows")
    if t.shape != (len(vals), len(vals)):
        raise PreconditionError("transition matrix must be square, one row per state")
    order = np.argsort(vals)
    t = t[np.ix_(order, order)]
    return ProcessSpec("markov_finite", tuple(vals[i] for i in order), (),
                       tuple(tuple(float(x) for x in row) for row in t))


def rotation(angle: float) -> ProcessSpec:
    return ProcessSpec("rotation", angle=float(angle))


def spec_from_dict(d: dict) -> ProcessSpec:
    kind = d.get("kind")
    if kind == "iid_finite":
        return iid(d["values"], d["probs"])
    if kind == "markov_finite":
        return markov(d["values"], d["transition"])
    if kind == "rotation":
        return rotation(d["angle"])
    raise PreconditionError(f"unknown process kind {kind!r}")


@dataclass(frozen=True)
class PiecewiseSpec:
    """Segment-boundary fractions ``0 < theta_1 < ... <= 1`` and one process per segment."""

    thetas: tuple
    segments: tuple

    def __post_init__(self):
        th = tuple(float(t) for t in self.thetas)
        if len(th) != len(self.segments) or not th:
            raise PreconditionError("need one theta per segment")
        prev = 0.0
        for t in th:
            if not t > prev:
                raise PreconditionError("thetas must be strictly increasing and positive")
            prev = t
        if th[-1] > 1.0:
            raise PreconditionError("the last theta must be <= 1")
        for a, b in zip(self.segments, self.segments[1:]):
            if a == b:
                raise PreconditionError("adjacent segments must use different processes")
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def alpha(self) -> float:
        """Smallest segment length as a fraction of ``n``."""
        bounds = (0.0,) + self.thetas
        return min(b - a for a, b in zip(bounds, bounds[1:]))

    @property
    def class_spec(self) -> frozenset:
        """The set of segment distributions; equal sets mean equivalent processes."""
        return frozenset(self.segments)

    def change_points(self, n: int) -> tuple:
        return tuple(int(math.floor(n * t)) for t in self.thetas[:-1])

    def length(self, n: int) -> int:
        return int(math.floor(n * self.thetas[-1]))


@dataclass(frozen=True)
class GeneratedSample:
    values: np.ndarray
    change_points: tuple
    spec: PiecewiseSpec = field(repr=False)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _draw_segment(spec: ProcessSpec, uniforms: np.ndarray) -> np.ndarray:
    size = uniforms.size
    if spec.kind == "rotation":
        phase = uniforms[0] if size else 0.0
        return np.mod(phase + np.arange(size) * spec.angle, 1.0)
    vals = np.asarray(spec.values)
    k = vals.size
    if spec.kind == "iid_finite":
        cum = np.cumsum(spec.probs)
        idx = np.minimum(np.searchsorted(cum, uniforms, side="right"), k - 1)
        return vals[idx]
    t = np.asarray(spec.transition)
    cum_rows = np.cumsum(t, axis=1).tolist()
    cum0 = np.cumsum(spec.stationary)
    states = np.empty(size, dtype=np.int64)
    s = min(int(np.searchsorted(cum0, uniforms[0], side="right")), k - 1)
    states[0] = s
    for i in range(1, size):
        row = cum_rows[s]
        u = uniforms[i]
        s = 0
        while s < k - 1 and u >= row[s]:
            s += 1
        states[i] = s
    return vals[states]


def generate_piecewise(spec: PiecewiseSpec, n: int, seed=None) -> GeneratedSample:
    """Draw a sample of length ``floor(n * theta_last)`` with changes at ``floor(n * theta_j)``.

    Each segment is an independent realization started from its stationary
    law.  The output depends only on ``(spec, n, seed)``.
    """
    n = int(n)
    taus = spec.change_points(n)
    bounds = (0,) + taus + (spec.length(n),)
    if any(b <= a for a, b in zip(bounds, bounds[1:])):
        raise PreconditionError(f"n={n} leaves an empty segment (alpha={spec.alpha:.3g})")
    rng = _rng(seed)
    parts = []
    for proc, a, b in zip(spec.segments, bounds, bounds[1:]):
        parts.append(_draw_segment(proc, rng.random(b - a)))
    return GeneratedSample(np.concatenate(parts), taus, spec)


def generate_dataset(specs: Sequence[PiecewiseSpec], n: int, seed=None,
                     shared_noise: bool = False) -> list:
    """One sample per spec; independent streams, or one shared stream if ``shared_noise``."""
    if shared_noise:
        return [generate_piecewise(s, n, np.random.default_rng(seed)) for s in specs]
    children = np.random.SeedSequence(seed).spawn(len(specs))
    return [generate_piecewise(s, n, np.random.default_rng(c)) for s, c in zip(specs, children)]


def ground_truth(specs: Sequence[PiecewiseSpec]) -> list:
    """Labels grouping specs with equal sets of segment distributions, in order of first appearance."""
    seen: dict = {}
    labels = []
    for s in specs:
        labels.append(seen.setdefault(s.class_spec, len(seen)))
    return labels


class MeasureOracle:
    """Exact cube masses of a finite-state process.

    ``cube_masses(u, v)`` enumerates all ``|states|^u`` state paths, so its
    cost is guarded by ``ENUMERATION_LIMIT``.
    """

    def __init__(self, spec: ProcessSpec):
        if spec.kind not in ("iid_finite", "markov_finite"):
            raise UnsupportedOracleError(f"no exact measure for {spec.kind!r} processes")
        self.spec = spec
        self._paths: dict = {}

    @property
    def n_states(self) -> int:
        return len(self.spec.values)

    def check_feasible(self, u_max: int):
        if self.n_states ** u_max > ENUMERATION_LIMIT:
            raise EnumerationLimitError(
                f"{self.n_states}^{u_max} state tuples exceed the limit {ENUMERATION_LIMIT}")

    def paths(self, u: int):
        """All state paths of length ``u`` with their probabilities."""
        if u in self._paths:
            return self._paths[u]
        self.check_feasible(u)
        k = self.n_states
        init = np.asarray(self.spec.stationary)
        states = np.arange(k)[:, None]
        probs = init.copy()
        if self.spec.kind == "markov_finite":
            step = np.asarray(self.spec.transition)
        for _ in range(1, u):
            last = states[:, -1]
            if self.spec.kind == "iid_finite":
                nxt = np.broadcast_to(init, (states.shape[0], k))
            else:
                nxt = step[last]
            probs = (probs[:, None] * nxt).ravel()
            states = np.hstack([np.repeat(states, k, axis=0),
                                np.tile(np.arange(k), states.shape[0])[:, None]])
        self._paths[u] = (states, probs)
        return states, probs

    def cube_masses(self, u: int, v: int):
        states, probs = self.paths(u)
        q = np.floor(np.asarray(self.spec.values) * float(1 << v)).astype(np.int64)
        return q[states], probs

    def mass(self, cube) -> float:
        """Probability of one :class:`~pwclust.measure.DyadicCube`."""
        tuples, probs = self.cube_masses(cube.u, cube.v)
        hit = np.all(tuples == np.asarray(cube.index, dtype=np.int64)[None, :], axis=1)
        return float(probs[hit].sum())


def _oracle(x) -> MeasureOracle:
    return x if isinstance(x, MeasureOracle) else MeasureOracle(x)


def true_d(a, b, policy: TruncationPolicy) -> float:
    """Truncated population distance between two finite-state processes, by enumeration."""
    oa, ob = _oracle(a), _oracle(b)
    oa.check_feasible(policy.u_max)
    ob.check_feasible(policy.u_max)
    total = 0.0
    for v in range(1, policy.v_max + 1):
        for u in range(1, policy.u_max + 1):
            ta, pa = oa.cube_masses(u, v)
            tb, pb = ob.cube_masses(u, v)
            total += weight(u) * weight(v) * l1_tuple_measures(ta, pa, tb, pb)
    return total


def true_delta(first: Iterable, second: Iterable, policy: TruncationPolicy) -> float:
    """Sum of the two directed max-min distances between two sets of processes."""
    fa = [_oracle(x) for x in first]
    fb = [_oracle(x) for x in second]
    if not fa or not fb:
        raise PreconditionError("both classes need at least one distribution")
    d = np.array([[true_d(x, y, policy) for y in fb] for x in fa])
    return float(d.min(axis=1).max()) + float(d.min(axis=0).max())


def mu_star(interval: tuple, true_taus: Sequence[int]) -> int:
    """Index (0-based) of the segment covering most of a 1-based inclusive interval.

    Segment ``k`` spans positions ``taus[k-1]+1 .. taus[k]`` (``taus[-1] := 0``);
    ties go to the smaller index.
    """
    lo, hi = int(interval[0]), int(interval[1])
    if lo > hi or lo < 1:
        raise PreconditionError("interval must satisfy 1 <= start <= end")
    bounds = [0, *[int(t) for t in true_taus], max(hi, *true_taus) if true_taus else hi]
    best, best_len = 0, -1
    for k in range(len(bounds) - 1):
        a, b = bounds[k] + 1, bounds[k + 1]
        overlap = max(0, min(b, hi) - max(a, lo) + 1)
        if overlap > best_len:
            best, best_len = k, overlap
    return best
