"""Selection metrics and the hypergeometric tail probability."""

from fractions import Fraction
from math import comb

import numpy as np
import pytest

from groupknock.errors import EmptyInput, InvalidCounts
from groupknock.metrics import ReplicationOutcome, aggregate, fdp_tpr, hypergeom_tail


class TestFdpTpr:
    def test_perfect_selection(self):
        assert fdp_tpr({1, 2}, {1, 2}) == (0.0, 1.0)

    def test_empty_selection(self):
        assert fdp_tpr(set(), {1, 2}) == (0.0, 0.0)

    def test_half_false(self):
        fdp, tpr = fdp_tpr({1, 2, 3, 4}, {1, 2})
        assert fdp == 0.5 and tpr == 1.0

    def test_empty_truth_is_vacuous(self):
        fdp, tpr = fdp_tpr({3}, set())
        assert fdp == 1.0 and tpr == 1.0
        assert fdp_tpr(set(), set()) == (0.0, 1.0)

    def test_precision_complement_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            sel = set(rng.choice(20, size=rng.integers(1, 10), replace=False).tolist())
            s0 = set(rng.choice(20, size=rng.integers(0, 10), replace=False).tolist())
            fdp, _ = fdp_tpr(sel, s0)
            precision = len(sel & s0) / len(sel)
            assert fdp + precision == pytest.approx(1.0)


def outcome(fdp, tpr=1.0, rid=0):
    return ReplicationOutcome(fdp=fdp, tpr=tpr, n_selected=1, replicate_id=rid, seed=rid)


class TestAggregate:
    def test_single_outcome(self):
        agg = aggregate([outcome(0.25, 0.75)])
        assert agg["gfdr"] == 0.25 and agg["power"] == 0.75
        assert agg["gfdr_stderr"] == 0.0

    def test_two_outcomes(self):
        agg = aggregate([outcome(0.1), outcome(0.3)])
        assert agg["gfdr"] == pytest.approx(0.2)

    def test_mean_of_bounded_values_stays_bounded(self):
        rng = np.random.default_rng(1)
        outs = [outcome(float(f), 1.0, i) for i, f in enumerate(rng.random(100) * 0.2)]
        assert aggregate(outs)["gfdr"] <= 0.2

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            aggregate([])


def exact_tail(k, u, s, q):
    """Rational-arithmetic oracle for small populations."""
    total = Fraction(0)
    for i in range(q, min(s, k) + 1):
        if s - i > u:
            continue
        total += Fraction(comb(k, i) * comb(u, s - i), comb(k + u, s))
    return total


class TestHypergeomTail:
    def test_reported_enrichment_values(self):
        # 21 confirmed vs 85 unconfirmed items
        assert hypergeom_tail(21, 85, 26, 11) == pytest.approx(0.00192, abs=5e-6)
        assert hypergeom_tail(21, 85, 41, 12) == pytest.approx(0.04673, abs=5e-5)
        assert hypergeom_tail(21, 85, 100, 21) == pytest.approx(0.256, abs=5e-4)

    def test_zero_threshold_is_certain(self):
        assert hypergeom_tail(21, 85, 26, 0) == 1.0

    def test_matches_exact_enumeration_small_populations(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            k = int(rng.integers(1, 20))
            u = int(rng.integers(1, 41 - k))
            s = int(rng.integers(1, k + u + 1))
            q = int(rng.integers(0, min(s, k) + 1))
            ref = float(exact_tail(k, u, s, q))
            assert hypergeom_tail(k, u, s, q) == pytest.approx(ref, abs=1e-9)

    def test_monotone_in_threshold(self):
        values = [hypergeom_tail(21, 85, 41, q) for q in range(0, 22)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_monotone_in_draw(self):
        values = [hypergeom_tail(21, 85, s, 5) for s in range(5, 107)]
        assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize(
        "args",
        [
            (21, 85, 200, 5),   # draw exceeds population
            (21, 85, 26, 22),   # threshold exceeds confirmed count
            (-1, 85, 10, 2),    # negative count
        ],
    )
    def test_invalid_counts(self, args):
        with pytest.raises(InvalidCounts):
            hypergeom_tail(*args)
