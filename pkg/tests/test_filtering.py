"""Knockoff+ threshold: worked examples and the brute-force oracle."""

import math

import numpy as np
import pytest

from groupknock.errors import InvalidLevel
from groupknock.filtering import knockoff_threshold, select_groups


def brute_force_threshold(w, q):
    """Independent oracle: scan every candidate magnitude directly."""
    w = np.asarray(w, dtype=float)
    best = math.inf
    for t in sorted(set(np.abs(w[w != 0.0]))):
        n_sel = np.sum(w >= t)
        if n_sel == 0:
            continue
        if (1 + np.sum(w <= -t)) / n_sel <= q:
            best = t
            break
    selected = tuple(int(j) for j in np.flatnonzero(w >= best)) if best < math.inf else ()
    return best, selected


def test_worked_example_ratio_exactly_q():
    res = knockoff_threshold([5, 4, 3, 2, 1, -1], 0.4)
    assert res.tau == 1.0
    assert res.selected == (0, 1, 2, 3, 4)


def test_all_negative_gives_empty_selection():
    res = knockoff_threshold([-3.0, -0.5, -1.0], 0.5)
    assert math.isinf(res.tau)
    assert res.selected == ()


def test_nine_positives_one_negative():
    w = [1.0] * 9 + [-1.0]
    res = knockoff_threshold(w, 0.25)
    assert res.tau == 1.0
    assert res.selected == tuple(range(9))


def test_zero_statistics_never_selected():
    res = knockoff_threshold(np.zeros(6), 0.9)
    assert math.isinf(res.tau)
    assert res.selected == ()


def test_single_positive_needs_no_plus_one_headroom():
    # (1 + 0) / 1 = 1 > q: a lone positive is never selected at q < 1.
    assert knockoff_threshold([10.0, 0.0, 0.0], 0.2).selected == ()
    assert knockoff_threshold([10.0, -0.5, -0.2], 0.2).selected == ()


def test_invalid_level():
    with pytest.raises(InvalidLevel):
        knockoff_threshold([1.0, -1.0], 1.5)


def test_monotone_in_q():
    rng = np.random.default_rng(0)
    for _ in range(50):
        w = rng.standard_normal(20)
        prev: set = set()
        for q in (0.05, 0.1, 0.2, 0.4, 0.8):
            sel = set(knockoff_threshold(w, q).selected)
            assert prev <= sel
            prev = sel


def test_permutation_invariance():
    rng = np.random.default_rng(1)
    w = rng.standard_normal(15)
    perm = rng.permutation(15)
    base = knockoff_threshold(w, 0.3)
    permuted = knockoff_threshold(w[perm], 0.3)
    assert permuted.tau == base.tau
    assert set(perm[list(permuted.selected)]) == set(base.selected)


def test_matches_brute_force_oracle():
    rng = np.random.default_rng(2)
    for _ in range(300):
        m = int(rng.integers(1, 31))
        w = rng.standard_normal(m)
        w[rng.random(m) < 0.3] = 0.0  # atoms at zero
        q = float(rng.random())
        res = knockoff_threshold(w, q)
        tau_ref, sel_ref = brute_force_threshold(w, q)
        assert res.tau == tau_ref
        assert res.selected == sel_ref


def test_select_groups_accepts_importance_object():
    class Stub:
        w_stat = np.array([3.0, -1.0, 2.0, 1.0, 1.0, 1.0])

    res = select_groups(Stub(), 0.4)
    assert res.selected == knockoff_threshold(Stub.w_stat, 0.4).selected
