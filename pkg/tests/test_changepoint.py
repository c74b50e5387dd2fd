import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pwclust.changepoint import floor_fraction, list_estimate, score_profile
from pwclust.errors import InputTooShortError, PreconditionError
from pwclust.measure import brute_dhat
from pwclust.processes import PiecewiseSpec, generate_piecewise, iid

STEP = np.array([0.25] * 6 + [0.75] * 6)


def test_floor_fraction():
    assert floor_fraction(0.1, 30) == 3
    assert floor_fraction(1 / 3, 12) == 4
    assert floor_fraction(0.25, 10) == 2


def test_constant_profile_is_zero():
    prof = score_profile(np.full(200, 0.4), 0.2)
    assert prof.scores.size > 0
    assert np.all(prof.scores == 0.0)


def test_constant_gives_no_candidates():
    assert list_estimate(np.full(200, 0.4), 0.2).candidates == ()


def test_step_profile_peaks_at_change():
    prof = score_profile(STEP, 0.75)
    assert prof.window == 3 and prof.grid_step == 1
    assert list(prof.positions) == [4, 5, 6, 7, 8, 9]
    best = np.flatnonzero(prof.scores == prof.scores.max())
    assert list(prof.positions[best]) == [6]


def test_profile_scores_match_direct_dhat():
    rng = np.random.default_rng(5)
    y = rng.integers(0, 4, 90) / 4
    prof = score_profile(y, 0.3)
    w = prof.window
    for t, s in zip(prof.positions, prof.scores):
        assert s == pytest.approx(brute_dhat(y[t - w:t], y[t:t + w], w, prof.policy), abs=1e-12)


def test_step_list_contains_change():
    cands = list_estimate(STEP, 1 / 3)
    assert 6 in cands.candidates
    assert cands.separation == 4


def test_too_short():
    with pytest.raises(InputTooShortError):
        score_profile([0.1, 0.2, 0.3], 0.5)


@pytest.mark.parametrize("lam", [0.0, 1.0, -0.2])
def test_lambda_range(lam):
    with pytest.raises(PreconditionError):
        list_estimate(STEP, lam)


def _check_contract(cands, n, lam):
    sep = floor_fraction(lam, n)
    c = cands.candidates
    assert list(c) == sorted(set(c))
    assert len(c) <= int(np.floor(1 / lam + 1e-9))
    for t in c:
        assert t - 1 >= sep and n - t >= sep
    for a, b in zip(c, c[1:]):
        assert b - a >= sep
    assert all(s > 0 for s in cands.scores)


@settings(max_examples=60, deadline=None)
@given(st.integers(30, 300), st.sampled_from([0.1, 0.15, 0.2, 0.25, 0.3]),
       st.integers(0, 2 ** 32 - 1), st.integers(1, 6))
def test_separation_and_cardinality(n, lam, seed, levels):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, levels + 1, n) / (levels + 1)
    cands = list_estimate(y, lam)
    _check_contract(cands, n, lam)
    assert cands.candidates == list_estimate(y, lam).candidates


def test_finds_single_change_in_generated_sample():
    lo, hi = iid([0.25, 0.75], [0.8, 0.2]), iid([0.25, 0.75], [0.2, 0.8])
    spec = PiecewiseSpec((0.5, 1.0), (lo, hi))
    for seed in range(5):
        s = generate_piecewise(spec, 2 ** 12, seed)
        cands = list_estimate(s.values, 0.25)
        _check_contract(cands, 2 ** 12, 0.25)
        assert min(abs(c - 2 ** 11) for c in cands.candidates) <= 0.03 * 2 ** 12


def test_stationary_max_score_below_two_segment_max():
    a, b = iid([0.25, 0.75], [0.8, 0.2]), iid([0.25, 0.75], [0.2, 0.8])
    one = PiecewiseSpec((1.0,), (a,))
    two = PiecewiseSpec((0.5, 1.0), (a, b))
    n = 2 ** 14
    for seed in range(20):
        flat = score_profile(generate_piecewise(one, n, seed).values, 0.25).scores.max()
        step = score_profile(generate_piecewise(two, n, seed).values, 0.25).scores.max()
        assert flat < step
