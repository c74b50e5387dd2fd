"""Change-point list estimation by a two-window distance scan.

Positions are 1-based split points: a candidate ``t`` separates ``y[1..t]``
from ``y[t+1..n]`` (equivalently, ``t`` is the 0-based index where the right
part starts).

Inside a stationary stretch both windows estimate the same distribution and
the score tends to 0; a window pair straddling a change tends to the distance
between the adjacent segment distributions.  Greedy suppression with radius
``floor(lambda * n)`` then keeps the candidates apart.  Spurious extra
candidates are tolerated downstream, so no attempt is made to estimate the
number of changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputTooShortError, PreconditionError
from .measure import TruncationPolicy, as_unit_array, policy_for, window_pair_scores


def floor_fraction(lam: float, n: int) -> int:
    """``floor(lam * n)``, robust to products that land a hair below an integer."""
    return int(math.floor(lam * n + 1e-9))


@dataclass(frozen=True)
class ScoreProfile:
    window: int
    grid_step: int
    positions: np.ndarray
    scores: np.ndarray
    policy: TruncationPolicy


@dataclass(frozen=True)
class CandidateList:
    lam: float
    n: int
    candidates: tuple
    scores: tuple
    window: int = 0
    policy: TruncationPolicy | None = None

    @property
    def separation(self) -> int:
        return floor_fraction(self.lam, self.n)

    def __len__(self):
        return len(self.candidates)

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "n": self.n, "candidates": list(self.candidates),
                "scores": list(self.scores), "window": self.window,
                "policy": self.policy.as_dict() if self.policy else None}


def _check_lambda(lam: float):
    if not 0.0 < lam < 1.0:
        raise PreconditionError(f"lambda must lie in (0, 1), got {lam}")


def score_profile(y, lam: float) -> ScoreProfile:
    """Distance between adjacent windows of length ``w = floor(lam*n/3)`` on a grid.

    The grid runs over ``t = w+1, w+1+g, ...`` up to ``n - w`` with step
    ``g = max(1, floor(w/10))``.  Every window pair shares one truncation
    policy derived from the whole sample so scores are comparable.
    """
    _check_lambda(lam)
    y = as_unit_array(y)
    n = y.size
    w = floor_fraction(lam, n) // 3
    if w < 1 or n - w < w + 1:
        raise InputTooShortError(
            f"sample of length {n} is too short for lambda={lam} (window {w})")
    g = max(1, w // 10)
    positions = np.arange(w + 1, n - w + 1, g, dtype=np.int64)
    policy = policy_for(y, y, w)
    scores = window_pair_scores(y, positions, w, policy)
    return ScoreProfile(w, g, positions, scores, policy)


def list_estimate(y, lam: float) -> CandidateList:
    """Candidate change points at least ``floor(lam*n)`` apart and from both ends.

    Greedy: take the best remaining grid point (smaller position on ties)
    that is far enough from the ends and from every kept point; stop when
    none qualifies, its score is 0, or ``floor(1/lam)`` candidates are kept.
    """
    profile = score_profile(y, lam)
    n = int(np.asarray(y).size)
    sep = floor_fraction(lam, n)
    cap = int(math.floor(1.0 / lam + 1e-9))
    pos, sc = profile.positions, profile.scores
    eligible = (pos - 1 >= sep) & (n - pos >= sep)
    # stable sort on -score keeps the smaller position first among ties
    order = np.argsort(-sc, kind="stable")
    chosen: list[int] = []
    chosen_scores: list[float] = []
    for i in order:
        if len(chosen) >= cap or sc[i] <= 0.0:
            break
        if not eligible[i]:
            continue
        t = int(pos[i])
        if all(abs(t - c) >= sep for c in chosen):
            chosen.append(t)
            chosen_scores.append(float(sc[i]))
    pairs = sorted(zip(chosen, chosen_scores))
    return CandidateList(float(lam), n, tuple(p for p, _ in pairs), tuple(s for _, s in pairs),
                         profile.window, profile.policy)
