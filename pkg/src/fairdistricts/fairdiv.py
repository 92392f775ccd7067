"""Classic two-party fair division procedures: cut-and-choose and Adjusted Winner.

Both run in exact rational arithmetic, so equitability ("both perceived shares
are equal") is checked as a literal equality, not a tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .model import EngineError, FractionLike, ValidationFailure, as_fraction


@dataclass(frozen=True)
class PiecewiseValuation:
    """A step-density valuation of the unit interval with total mass 1."""

    breakpoints: tuple[Fraction, ...]
    densities: tuple[Fraction, ...]

    def __post_init__(self):
        violations = []
        bp, dens = self.breakpoints, self.densities
        if len(bp) < 2 or len(dens) != len(bp) - 1:
            violations.append("need n+1 breakpoints for n densities")
        else:
            if bp[0] != 0 or bp[-1] != 1:
                violations.append("breakpoints must start at 0 and end at 1")
            if any(a >= b for a, b in zip(bp, bp[1:])):
                violations.append("breakpoints must be strictly increasing")
            if any(d < 0 for d in dens):
                violations.append("densities must be nonnegative")
            mass = sum((d * (b - a) for a, b, d in zip(bp, bp[1:], dens)), Fraction(0))
            if mass != 1:
                violations.append(f"total mass is {mass}, must be exactly 1")
        if violations:
            raise ValidationFailure("valuation", violations)

    @staticmethod
    def of(breakpoints: Sequence[FractionLike], densities: Sequence[FractionLike]) -> "PiecewiseValuation":
        return PiecewiseValuation(
            tuple(as_fraction(b) for b in breakpoints),
            tuple(as_fraction(d) for d in densities),
        )

    @staticmethod
    def uniform() -> "PiecewiseValuation":
        return PiecewiseValuation((Fraction(0), Fraction(1)), (Fraction(1),))

    def measure(self, lo: Fraction, hi: Fraction) -> Fraction:
        """Value of the interval [lo, hi]."""
        lo, hi = max(lo, Fraction(0)), min(hi, Fraction(1))
        total = Fraction(0)
        for a, b, d in zip(self.breakpoints, self.breakpoints[1:], self.densities):
            left, right = max(a, lo), min(b, hi)
            if left < right:
                total += d * (right - left)
        return total

    def quantile(self, q: Fraction) -> Fraction:
        """Leftmost x with measure([0, x]) = q."""
        if not (0 <= q <= 1):
            raise ValueError("quantile argument must lie in [0, 1]")
        acc = Fraction(0)
        for a, b, d in zip(self.breakpoints, self.breakpoints[1:], self.densities):
            if acc >= q:
                return a
            segment = d * (b - a)
            if d > 0 and acc + segment >= q:
                return a + (q - acc) / d
            acc += segment
        return Fraction(1)


@dataclass(frozen=True)
class CutAndChooseResult:
    cut: Fraction
    chooser_takes: str  # "left" or "right": the piece the non-cutting party picks
    share_cutter: Fraction
    share_chooser: Fraction


def cut_and_choose(val_cutter: PiecewiseValuation, val_chooser: PiecewiseValuation) -> CutAndChooseResult:
    """The cutter splits at a point it is indifferent between; the chooser takes
    the piece it values more (ties to the left piece).  Envy-free by
    construction: the cutter's share is exactly 1/2 in its own measure and the
    chooser's is at least 1/2 in its own."""
    cut = val_cutter.quantile(Fraction(1, 2))
    left = val_chooser.measure(Fraction(0), cut)
    right = 1 - left
    if left >= right:
        return CutAndChooseResult(cut, "left", Fraction(1, 2), left)
    return CutAndChooseResult(cut, "right", Fraction(1, 2), right)


@dataclass(frozen=True)
class PointAllocation:
    """Both parties spread exactly 100 points over the same goods."""

    goods: tuple[str, ...]
    points_a: tuple[Fraction, ...]
    points_b: tuple[Fraction, ...]

    def __post_init__(self):
        violations = []
        if not self.goods:
            violations.append("goods list is empty")
        if len(set(self.goods)) != len(self.goods):
            violations.append("duplicate good names")
        for name, pts in (("A", self.points_a), ("B", self.points_b)):
            if len(pts) != len(self.goods):
                violations.append(f"party {name} bids do not cover every good")
                continue
            if any(p < 0 for p in pts):
                violations.append(f"party {name} has negative bids")
            if sum(pts) != 100:
                violations.append(f"party {name} bids sum to {sum(pts)}, must be exactly 100")
        if violations:
            raise ValidationFailure("point allocation", violations)

    @staticmethod
    def from_bids(bids_a: Mapping[str, FractionLike], bids_b: Mapping[str, FractionLike]) -> "PointAllocation":
        """Build an allocation from raw bid tables, normalizing each party to 100.
        Normalization is part of the procedure: scaling one party's bids by any
        positive constant cannot change the outcome."""
        goods = tuple(sorted(set(bids_a) | set(bids_b)))

        def normalize(bids: Mapping[str, FractionLike], party: str) -> tuple[Fraction, ...]:
            raw = [as_fraction(bids.get(g, 0)) for g in goods]
            total = sum(raw)
            if total <= 0:
                raise ValidationFailure("point allocation", [f"party {party} bids sum to 0"])
            return tuple(100 * r / total for r in raw)

        return PointAllocation(goods, normalize(bids_a, "A"), normalize(bids_b, "B"))


@dataclass(frozen=True)
class GoodsSplit:
    """Per-good share assigned to party A (party B holds the complement)."""

    goods: tuple[str, ...]
    shares_to_a: tuple[Fraction, ...]

    def __post_init__(self):
        fractional = [s for s in self.shares_to_a if 0 < s < 1]
        if len(fractional) > 1:
            raise ValidationFailure("goods split", ["more than one divided good"])
        if any(not (0 <= s <= 1) for s in self.shares_to_a):
            raise ValidationFailure("goods split", ["share outside [0, 1]"])

    def share_of(self, good: str) -> Fraction:
        return self.shares_to_a[self.goods.index(good)]


@dataclass(frozen=True)
class AdjustedWinnerResult:
    split: GoodsSplit
    equalized_share: Fraction  # both parties' own-points valuation of their bundle


def adjusted_winner(points: PointAllocation) -> AdjustedWinnerResult:
    """Brams-Taylor Adjusted Winner.

    Each good initially goes to the higher bidder (ties to A; goods bid 0 by
    both also sit with A and never move).  Goods are then transferred from the
    current winner in nondecreasing order of the ratio winner-points over
    loser-points, dividing at most the single pivot good, until both parties'
    own-valuation shares are exactly equal.
    """
    goods, pa, pb = points.goods, points.points_a, points.points_b
    shares = [Fraction(1) if pa[i] >= pb[i] else Fraction(0) for i in range(len(goods))]
    value_a = sum((pa[i] * shares[i] for i in range(len(goods))), Fraction(0))
    value_b = sum((pb[i] * (1 - shares[i]) for i in range(len(goods))), Fraction(0))

    if value_a != value_b:
        a_is_winner = value_a > value_b
        win_pts, lose_pts = (pa, pb) if a_is_winner else (pb, pa)
        owned = [
            i
            for i in range(len(goods))
            if (shares[i] == 1) == a_is_winner and not (pa[i] == 0 and pb[i] == 0)
        ]
        owned.sort(key=lambda i: (lose_pts[i] == 0, win_pts[i] / lose_pts[i] if lose_pts[i] else 0, i))

        gap = value_a - value_b if a_is_winner else value_b - value_a
        for i in owned:
            step = win_pts[i] + lose_pts[i]
            if gap <= step:
                f = gap / step  # fraction of good i handed to the loser
                shares[i] = 1 - f if a_is_winner else f
                gap = Fraction(0)
                break
            shares[i] = Fraction(0) if a_is_winner else Fraction(1)
            gap -= step
        if gap != 0:
            raise EngineError("adjusted winner failed to equalize shares")  # unreachable

    value_a = sum((pa[i] * shares[i] for i in range(len(goods))), Fraction(0))
    value_b = sum((pb[i] * (1 - shares[i]) for i in range(len(goods))), Fraction(0))
    if value_a != value_b:
        raise EngineError("adjusted winner failed to equalize shares")  # unreachable
    return AdjustedWinnerResult(GoodsSplit(goods, tuple(shares)), value_a)
