"""Distance between two piecewise stationary samples via their estimated segments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .changepoint import CandidateList, floor_fraction, list_estimate
from .errors import PreconditionError
from .measure import TruncationPolicy, as_unit_array, dhat_matrix, policy_for


@dataclass(frozen=True)
class SegmentSet:
    """Consecutive segments as 1-based inclusive ``(start, end)`` pairs.

    Neighbouring segments share their boundary point.
    """

    parent: str
    segments: tuple

    def __len__(self):
        return len(self.segments)

    def slices(self, y: np.ndarray) -> list:
        return [y[s - 1:e] for s, e in self.segments]


def split_segments(y, cands: CandidateList, parent: str = "") -> SegmentSet:
    n = int(np.asarray(y).size)
    if cands.n != n:
        raise PreconditionError("candidate list was produced for a sample of another length")
    bounds = [1, *cands.candidates, n]
    segs = tuple((bounds[i - 1], bounds[i]) for i in range(1, len(bounds)))
    return SegmentSet(parent, segs)


@dataclass(frozen=True)
class DeltaResult:
    value: float
    forward: float
    backward: float
    n_eff: int
    policy: TruncationPolicy
    distances: np.ndarray


def _max_min(d: np.ndarray) -> float:
    # argmin/argmax resolve ties to the first index; the value is the same either way
    return float(d.min(axis=1).max())


def delta_details(y, y2, lam: float, cands: CandidateList | None = None,
                  cands2: CandidateList | None = None) -> DeltaResult:
    """Like :func:`delta_hat` but also returns the segment distance matrix.

    Precomputed candidate lists may be passed to avoid re-running the scan.
    """
    if not 0.0 < lam < 1.0:
        raise PreconditionError(f"lambda must lie in (0, 1), got {lam}")
    a, b = as_unit_array(y), as_unit_array(y2)
    if cands is None:
        cands = list_estimate(a, lam)
    if cands2 is None:
        cands2 = list_estimate(b, lam)
    segs_a = split_segments(a, cands).slices(a)
    segs_b = split_segments(b, cands2).slices(b)
    n_eff = min(floor_fraction(lam, a.size), floor_fraction(lam, b.size))
    if n_eff < 1:
        raise PreconditionError("lambda * n is below one point")
    policy = policy_for(a, b, n_eff)
    d = dhat_matrix(segs_a, segs_b, n_eff, policy)
    fwd = _max_min(d)
    bwd = _max_min(d.T)
    return DeltaResult(fwd + bwd, fwd, bwd, n_eff, policy, d)


def delta_hat(y, y2, lam: float, cands: CandidateList | None = None,
              cands2: CandidateList | None = None) -> float:
    """Estimate of the distance between the classes generating ``y`` and ``y2``.

    Each sample is cut at its candidate change points, every segment is
    truncated to ``n_eff = floor(min(lam*n1, lam*n2))`` points, and the
    result is the sum of the two directed max-min segment distances.
    Exactly symmetric, and exactly 0 for identical inputs.
    """
    return delta_details(y, y2, lam, cands, cands2).value
