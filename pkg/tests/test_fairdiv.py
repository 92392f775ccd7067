import random
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairdistricts.fairdiv import (
    GoodsSplit,
    PiecewiseValuation,
    PointAllocation,
    adjusted_winner,
    cut_and_choose,
)
from fairdistricts.model import ValidationFailure


def uniform():
    return PiecewiseValuation.uniform()


class TestPiecewiseValuation:
    def test_mass_must_be_one(self):
        with pytest.raises(ValidationFailure, match="mass"):
            PiecewiseValuation.of([0, 1], [2])

    def test_zero_mass_rejected(self):
        with pytest.raises(ValidationFailure, match="mass"):
            PiecewiseValuation.of([0, 1], [0])

    def test_negative_density_rejected(self):
        with pytest.raises(ValidationFailure):
            PiecewiseValuation.of([0, "1/2", 1], [3, -1])

    def test_measure_and_quantile(self):
        v = PiecewiseValuation.of([0, "1/4", 1], [4, 0])
        assert v.measure(Fraction(0), Fraction(1, 8)) == Fraction(1, 2)
        assert v.quantile(Fraction(1, 2)) == Fraction(1, 8)
        # leftmost point rule: mass completes at 1/4, not at the end of the plateau
        assert v.quantile(Fraction(1)) == Fraction(1, 4)


class TestCutAndChoose:
    def test_both_uniform(self):
        result = cut_and_choose(uniform(), uniform())
        assert result.cut == Fraction(1, 2)
        assert result.share_cutter == result.share_chooser == Fraction(1, 2)

    def test_chooser_concentrated_left(self):
        chooser = PiecewiseValuation.of([0, "1/2", 1], [2, 0])
        result = cut_and_choose(uniform(), chooser)
        assert result.cut == Fraction(1, 2)
        assert result.chooser_takes == "left"
        assert result.share_chooser == 1
        assert result.share_cutter == Fraction(1, 2)

    def test_cut_lands_in_cutter_support(self):
        cutter = PiecewiseValuation.of([0, "1/4", 1], [4, 0])
        result = cut_and_choose(cutter, uniform())
        assert result.cut == Fraction(1, 8)
        assert 0 < result.cut < Fraction(1, 4)

    def test_tie_goes_left(self):
        result = cut_and_choose(uniform(), uniform())
        assert result.chooser_takes == "left"

    @given(
        st.lists(st.integers(min_value=0, max_value=5), min_size=4, max_size=4),
        st.lists(st.integers(min_value=0, max_value=5), min_size=4, max_size=4),
    )
    @settings(max_examples=60, deadline=None)
    def test_envy_free(self, weights_a, weights_b):
        def valuation(weights):
            total = sum(weights)
            if total == 0:
                weights = [1] * len(weights)
                total = len(weights)
            quarters = [Fraction(i, 4) for i in range(5)]
            densities = [Fraction(4 * w, total) for w in weights]
            return PiecewiseValuation(tuple(quarters), tuple(densities))

        result = cut_and_choose(valuation(weights_a), valuation(weights_b))
        assert result.share_cutter == Fraction(1, 2)  # the cutter is indifferent
        assert result.share_chooser >= Fraction(1, 2)


class TestPointAllocationValidation:
    def test_sums_must_be_100(self):
        with pytest.raises(ValidationFailure, match="sum"):
            PointAllocation(("g",), (Fraction(90),), (Fraction(100),))

    def test_negative_bid_rejected(self):
        with pytest.raises(ValidationFailure, match="negative"):
            PointAllocation(("g", "h"), (Fraction(110), Fraction(-10)), (Fraction(50), Fraction(50)))

    def test_empty_goods_rejected(self):
        with pytest.raises(ValidationFailure, match="empty"):
            PointAllocation((), (), ())

    def test_from_bids_normalizes(self):
        allocation = PointAllocation.from_bids({"x": 3, "y": 1}, {"x": 1, "y": 1})
        assert allocation.points_a == (Fraction(75), Fraction(25))
        assert allocation.points_b == (Fraction(50), Fraction(50))


class TestGoodsSplit:
    def test_two_fractional_goods_rejected(self):
        with pytest.raises(ValidationFailure, match="one divided good"):
            GoodsSplit(("x", "y"), (Fraction(1, 2), Fraction(1, 3)))


def dominance_alternatives(points: PointAllocation):
    """Every allocation with at most one divided good, the divided share swept
    at 1/100 resolution: the brute-force efficiency grid."""
    n = len(points.goods)
    for divided in range(n):
        others = [i for i in range(n) if i != divided]
        for pattern in product((0, 1), repeat=len(others)):
            for hundredths in range(101):
                shares = [Fraction(0)] * n
                for good, bit in zip(others, pattern):
                    shares[good] = Fraction(bit)
                shares[divided] = Fraction(hundredths, 100)
                yield shares


def shares_value(points: PointAllocation, shares) -> tuple[Fraction, Fraction]:
    value_a = sum((p * s for p, s in zip(points.points_a, shares)), Fraction(0))
    value_b = sum((p * (1 - s) for p, s in zip(points.points_b, shares)), Fraction(0))
    return value_a, value_b


def assert_adjusted_winner_contract(points: PointAllocation):
    result = adjusted_winner(points)
    value_a, value_b = shares_value(points, result.split.shares_to_a)
    assert value_a == value_b == result.equalized_share  # equitable, exactly
    assert value_a >= 50 and value_b >= 50  # envy-free
    fractional = [s for s in result.split.shares_to_a if 0 < s < 1]
    assert len(fractional) <= 1  # at most one good divided
    for alt in dominance_alternatives(points):
        alt_a, alt_b = shares_value(points, alt)
        dominates = alt_a >= value_a and alt_b >= value_b and (alt_a > value_a or alt_b > value_b)
        assert not dominates, f"dominated by {alt}"
    return result


class TestAdjustedWinner:
    def test_two_goods_no_transfer(self):
        points = PointAllocation.from_bids({"g1": 60, "g2": 40}, {"g1": 40, "g2": 60})
        result = assert_adjusted_winner_contract(points)
        assert result.split.shares_to_a == (Fraction(1), Fraction(0))
        assert result.equalized_share == 60

    def test_single_good_halved(self):
        points = PointAllocation.from_bids({"g": 100}, {"g": 100})
        result = adjusted_winner(points)
        assert result.split.shares_to_a == (Fraction(1, 2),)
        assert result.equalized_share == 50

    def test_identical_bids_equalize_at_50(self):
        points = PointAllocation.from_bids({"x": 30, "y": 30, "z": 40}, {"x": 30, "y": 30, "z": 40})
        result = assert_adjusted_winner_contract(points)
        assert result.equalized_share == 50

    def test_zero_zero_good_stays_whole_with_a(self):
        points = PointAllocation.from_bids({"junk": 0, "g": 100}, {"junk": 0, "g": 100})
        result = adjusted_winner(points)
        shares = dict(zip(result.split.goods, result.split.shares_to_a))
        assert shares["junk"] == 1  # whole, never divided
        assert shares["g"] == Fraction(1, 2)
        assert result.equalized_share == 50

    def test_scale_invariance(self):
        rng = random.Random(17)
        for _ in range(25):
            goods = ["a", "b", "c"]
            bids_a = {g: rng.randrange(1, 50) for g in goods}
            bids_b = {g: rng.randrange(1, 50) for g in goods}
            base = adjusted_winner(PointAllocation.from_bids(bids_a, bids_b))
            scaled = adjusted_winner(
                PointAllocation.from_bids(bids_a, {g: 7 * v for g, v in bids_b.items()})
            )
            assert base.split == scaled.split

    def test_seeded_random_contract_smoke(self):
        rng = random.Random(5)
        for _ in range(40):
            n = rng.choice((2, 3))
            goods = [f"g{i}" for i in range(n)]
            cuts_a = sorted(rng.sample(range(1, 100), n - 1)) + [100]
            cuts_b = sorted(rng.sample(range(1, 100), n - 1)) + [100]
            bids_a, prev = {}, 0
            for g, c in zip(goods, cuts_a):
                bids_a[g] = c - prev
                prev = c
            bids_b, prev = {}, 0
            for g, c in zip(goods, cuts_b):
                bids_b[g] = c - prev
                prev = c
            assert_adjusted_winner_contract(PointAllocation.from_bids(bids_a, bids_b))
