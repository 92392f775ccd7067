"""Exhaustive enumeration of viable divisions, extremal ratings, and geometric targets.

The enumerator is the ground truth the protocol's fairness guarantees are checked
against, so it favors obvious correctness: districts are grown one at a time from
the smallest unassigned parcel (which makes district labels canonical by
construction), every emitted division is materialized and sorted into canonical
order, and all arithmetic is exact.

Maps whose parcels are structurally interchangeable (equal population, equal
share, identical closed neighborhoods, e.g. complete-adjacency "no geometric
constraints" maps) admit an exact shortcut for extremal searches: swapping two
such parcels is a graph automorphism that preserves any share-invariant rating,
so the search only needs one representative per interchangeability profile.
That collapses optimization over astronomically many partitions into a small
dynamic program without changing any value.  Enumeration itself never uses the
shortcut; it stays literal.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import prod
from typing import Iterable, Iterator, Optional, Sequence

from .model import (
    Division,
    EngineError,
    InfeasibilityError,
    ParcelMap,
    RatingSpec,
    Split,
    ValidationFailure,
    VotingModel,
    division_from_district_sets,
    validate_map,
    validate_split,
)

#: Twin-class extremal search is engaged only when the state space it induces is
#: comfortably small; otherwise plain enumeration is used.
CLASS_DP_STATE_LIMIT = 200_000

DistrictSets = tuple[frozenset[int], ...]


class NoViableDivisions(InfeasibilityError):
    pass


class InfeasibleSplit(InfeasibilityError):
    pass


# ---------------------------------------------------------------------------
# Connected-subset and division enumeration
# ---------------------------------------------------------------------------

def _connected_subsets(
    parcel_map: ParcelMap, anchor: int, size: int, allowed: frozenset[int]
) -> Iterator[frozenset[int]]:
    """All connected subsets of `allowed` with `size` members that contain `anchor`.

    Include/exclude recursion over an ordered frontier; each subset is produced
    exactly once because an excluded vertex is banned from the whole subtree.
    """
    if size == 1:
        yield frozenset((anchor,))
        return
    neighbors = parcel_map.neighbors

    def rec(cur: frozenset[int], cand: tuple[int, ...], banned: frozenset[int]):
        if len(cur) == size:
            yield cur
            return
        if not cand:
            return
        if len(cur) + len(cand) < size:
            # frontier alone is short; count everything still reachable
            reachable = set(cand)
            stack = list(cand)
            free = allowed - cur - banned
            while stack:
                u = stack.pop()
                for w in neighbors[u] & free:
                    if w not in reachable:
                        reachable.add(w)
                        stack.append(w)
            if len(cur) + len(reachable) < size:
                return
        v = cand[0]
        rest = cand[1:]
        fresh = tuple(
            sorted(
                w
                for w in neighbors[v]
                if w in allowed and w not in cur and w not in banned and w not in rest
            )
        )
        yield from rec(cur | {v}, rest + fresh, banned)
        yield from rec(cur, rest, banned | {v})

    start_cand = tuple(sorted(parcel_map.neighbors[anchor] & allowed))
    yield from rec(frozenset((anchor,)), start_cand, frozenset())


@lru_cache(maxsize=512)
def _piece_division_tuples(
    parcel_map: ParcelMap, piece: frozenset[int], count: int
) -> tuple[DistrictSets, ...]:
    """All partitions of `piece` into `count` connected districts of equal size,
    in canonical order.

    Districts inside each partition are ordered by their smallest member,
    which is also the order the recursion creates them in (each district is
    anchored at the smallest not-yet-assigned parcel, so no relabeling of the
    same partition is ever produced twice).
    """
    size = parcel_map.district_size
    if len(piece) != count * size:
        return ()
    results: list[DistrictSets] = []

    def rec(remaining: frozenset[int], parts: DistrictSets) -> None:
        if not remaining:
            results.append(parts)
            return
        anchor = min(remaining)
        for district in _connected_subsets(parcel_map, anchor, size, remaining):
            rest = remaining - district
            if rest and any(len(c) % size for c in parcel_map.components(rest)):
                continue  # some leftover component cannot be tiled by districts
            rec(rest, parts + (district,))

    rec(piece, ())

    order = sorted(piece)
    position = {p: i for i, p in enumerate(order)}

    def key(parts: DistrictSets) -> tuple[int, ...]:
        vec = [0] * len(order)
        for label, district in enumerate(parts):
            for member in district:
                vec[position[member]] = label
        return tuple(vec)

    results.sort(key=key)
    return tuple(results)


def _all_parcels(parcel_map: ParcelMap) -> frozenset[int]:
    return frozenset(range(len(parcel_map.parcels)))


@lru_cache(maxsize=4096)
def _piece_feasible(parcel_map: ParcelMap, piece: frozenset[int], count: int) -> bool:
    """Whether the piece admits at least one partition into `count` districts.
    Stops at the first one instead of materializing them all."""
    size = parcel_map.district_size
    if len(piece) != count * size:
        return False

    def rec(remaining: frozenset[int]) -> bool:
        if not remaining:
            return True
        anchor = min(remaining)
        for district in _connected_subsets(parcel_map, anchor, size, remaining):
            rest = remaining - district
            if rest and any(len(c) % size for c in parcel_map.components(rest)):
                continue
            if rec(rest):
                return True
        return False

    return rec(piece)


def _require_valid(parcel_map: ParcelMap) -> None:
    violations = validate_map(parcel_map)
    if violations:
        raise ValidationFailure("map", violations)


def _division_stream(parcel_map: ParcelMap) -> Iterator[Division]:
    predicate = parcel_map.division_predicate
    for parts in _piece_division_tuples(parcel_map, _all_parcels(parcel_map), parcel_map.n_districts):
        division = division_from_district_sets(parcel_map, parts)
        if predicate is None or predicate(parcel_map, division):
            yield division


def enumerate_divisions(parcel_map: ParcelMap) -> Iterator[Division]:
    """Yield every viable division exactly once, in canonical order.

    Canonical order is lexicographic on the canonicalized assignment vector
    (district labels by first appearance along the sorted parcel ids).
    """
    _require_valid(parcel_map)
    yield from _division_stream(parcel_map)


def count_divisions(parcel_map: ParcelMap) -> int:
    _require_valid(parcel_map)
    return sum(1 for _ in _division_stream(parcel_map))


def enumerate_divisions_refining(parcel_map: ParcelMap, split: Split) -> Iterator[Division]:
    """Yield the viable divisions in which every district lies inside one piece
    of the split: the cross product of dividing piece 1 into k districts and
    piece 2 into n-k, in canonical order."""
    _require_valid(parcel_map)
    violations = validate_split(parcel_map, split)
    if violations:
        raise ValidationFailure("split", violations)

    p1 = split.piece1_indices(parcel_map)
    p2 = split.piece2_indices(parcel_map)
    left = _piece_division_tuples(parcel_map, p1, split.k)
    right = _piece_division_tuples(parcel_map, p2, parcel_map.n_districts - split.k)
    predicate = parcel_map.division_predicate

    divisions = []
    for parts1 in left:
        for parts2 in right:
            division = division_from_district_sets(parcel_map, parts1 + parts2)
            if predicate is None or predicate(parcel_map, division):
                divisions.append(division)
    divisions.sort(key=lambda d: d.canonical_vector(parcel_map))
    yield from divisions


# ---------------------------------------------------------------------------
# Extremal ratings and targets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TargetReport:
    """Best and worst ratings over a division set, and their midpoint."""

    best: Fraction
    worst: Fraction
    target: Fraction
    witness_best: Division
    witness_worst: Division

    @staticmethod
    def from_extremes(
        best: Fraction, worst: Fraction, witness_best: Division, witness_worst: Division
    ) -> "TargetReport":
        return TargetReport(best, worst, Fraction(best + worst, 2), witness_best, witness_worst)


def extremal_rating(
    parcel_map: ParcelMap,
    divisions: Iterable[Division],
    spec: RatingSpec,
    model: VotingModel,
    sense: str,
) -> tuple[Fraction, Division]:
    """Exact optimum of the rating over a division stream, with the first
    witness (in stream order) attaining it."""
    if sense not in ("maximize", "minimize"):
        raise ValueError(f"sense must be 'maximize' or 'minimize', not {sense!r}")
    shares = model.share_vector(parcel_map)
    best: Optional[Fraction] = None
    witness: Optional[Division] = None
    for division in divisions:
        value = sum(
            (spec.district_value(parcel_map, d, shares) for d in division.districts(parcel_map)),
            Fraction(0),
        )
        if best is None or (value > best if sense == "maximize" else value < best):
            best, witness = value, division
    if best is None or witness is None:
        raise NoViableDivisions("no viable divisions")
    return best, witness


def _both_extremes(
    parcel_map: ParcelMap, divisions: Iterable[Division], spec: RatingSpec, model: VotingModel
) -> tuple[Fraction, Fraction, Division, Division]:
    shares = model.share_vector(parcel_map)
    hi = lo = None
    w_hi = w_lo = None
    for division in divisions:
        value = sum(
            (spec.district_value(parcel_map, d, shares) for d in division.districts(parcel_map)),
            Fraction(0),
        )
        if hi is None or value > hi:
            hi, w_hi = value, division
        if lo is None or value < lo:
            lo, w_lo = value, division
    if hi is None:
        raise NoViableDivisions("no viable divisions")
    return hi, lo, w_hi, w_lo


# -- twin-class compression -------------------------------------------------

def _twin_classes(
    parcel_map: ParcelMap, piece: frozenset[int], shares: Sequence[Fraction]
) -> tuple[tuple[int, ...], ...]:
    """Partition a parcel set into interchangeability classes.

    Two parcels belong to the same class when they have equal population, equal
    share under the model, and identical closed neighborhoods in the full map;
    transposing two such parcels is then a share-preserving automorphism.
    (Non-adjacent twins with equal open neighborhoods would also qualify but
    are not detected; missing them only costs speed, never correctness.)
    """
    groups: dict[tuple, list[int]] = {}
    for i in sorted(piece):
        p = parcel_map.parcels[i]
        sig = (p.population, shares[i], parcel_map.neighbors[i] | {i})
        groups.setdefault(sig, []).append(i)
    classes = sorted(groups.values(), key=lambda members: members[0])
    return tuple(tuple(members) for members in classes)


def _class_dp_eligible(
    parcel_map: ParcelMap, spec: RatingSpec, classes: tuple[tuple[int, ...], ...], piece_size: int
) -> bool:
    if not getattr(spec, "share_invariant", False):
        return False
    if parcel_map.division_predicate is not None:
        return False
    if len(classes) >= piece_size:
        return False
    states = prod(len(c) + 1 for c in classes)
    return states <= CLASS_DP_STATE_LIMIT


def _compositions(avail: tuple[int, ...], total: int) -> Iterator[tuple[int, ...]]:
    """All ways to draw `total` parcels across classes, lexicographically."""

    def rec(i: int, left: int, acc: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        if i == len(avail):
            if left == 0:
                yield acc
            return
        if left > sum(avail[i:]):
            return
        for take in range(min(avail[i], left) + 1):
            yield from rec(i + 1, left - take, acc + (take,))

    yield from rec(0, total, ())


def _class_dp_extreme(
    parcel_map: ParcelMap,
    classes: tuple[tuple[int, ...], ...],
    spec: RatingSpec,
    shares: Sequence[Fraction],
    sense: str,
) -> Optional[tuple[Fraction, DistrictSets]]:
    """Exact extremal rating over all partitions of the classes' members into
    equal-size connected districts, by dynamic programming over per-class
    remaining counts.  Returns None when no partition exists."""
    size = parcel_map.district_size
    maximize = sense == "maximize"
    memo: dict[tuple[int, ...], Optional[tuple[Fraction, DistrictSets]]] = {}

    def rec(avail: tuple[int, ...]) -> Optional[tuple[Fraction, DistrictSets]]:
        if not any(avail):
            return Fraction(0), ()
        cached = memo.get(avail, "miss")
        if cached != "miss":
            return cached
        best: Optional[tuple[Fraction, DistrictSets]] = None
        for take in _compositions(avail, size):
            members = []
            for cls, a, t in zip(classes, avail, take):
                if t:
                    members.extend(cls[a - t : a])
            district = frozenset(members)
            if not parcel_map.connected(district):
                continue
            sub = rec(tuple(a - t for a, t in zip(avail, take)))
            if sub is None:
                continue
            value = spec.district_value(parcel_map, district, shares) + sub[0]
            if best is None or (value > best[0] if maximize else value < best[0]):
                best = (value, (district,) + sub[1])
        memo[avail] = best
        return best

    return rec(tuple(len(c) for c in classes))


# -- piece optimization -----------------------------------------------------

@lru_cache(maxsize=4096)
def _optimal_piece(
    parcel_map: ParcelMap,
    piece: frozenset[int],
    count: int,
    spec: RatingSpec,
    model: VotingModel,
    sense: str,
) -> tuple[Fraction, DistrictSets]:
    if len(piece) != count * parcel_map.district_size:
        raise InfeasibilityError("infeasible piece")
    shares = model.share_vector(parcel_map)
    classes = _twin_classes(parcel_map, piece, shares)
    if _class_dp_eligible(parcel_map, spec, classes, len(piece)):
        result = _class_dp_extreme(parcel_map, classes, spec, shares, sense)
        if result is None:
            raise InfeasibilityError("infeasible piece")
        value, parts = result
        return value, tuple(sorted(parts, key=min))

    maximize = sense == "maximize"
    best: Optional[Fraction] = None
    witness: Optional[DistrictSets] = None
    for parts in _piece_division_tuples(parcel_map, piece, count):
        value = sum((spec.district_value(parcel_map, d, shares) for d in parts), Fraction(0))
        if best is None or (value > best if maximize else value < best):
            best, witness = value, parts
    if best is None or witness is None:
        raise InfeasibilityError("infeasible piece")
    return best, witness


def optimal_piece_division(
    parcel_map: ParcelMap,
    piece: Iterable[str],
    count: int,
    spec: RatingSpec,
    model: VotingModel,
    sense: str,
) -> tuple[Fraction, tuple[frozenset[str], ...]]:
    """Optimize an additive rating over all ways to divide a connected piece
    into `count` equal-size connected districts.  Returns the optimum and one
    witness (a tuple of district parcel-id sets)."""
    if sense not in ("maximize", "minimize"):
        raise ValueError(f"sense must be 'maximize' or 'minimize', not {sense!r}")
    _require_valid(parcel_map)
    piece_ids = frozenset(piece)
    unknown = sorted(p for p in piece_ids if p not in parcel_map.index)
    if unknown:
        raise ValidationFailure("piece", [f"unknown parcel ids: {', '.join(unknown)}"])
    piece_idx = frozenset(parcel_map.index[p] for p in piece_ids)
    if len(piece_idx) != count * parcel_map.district_size:
        raise InfeasibilityError(
            f"infeasible piece: {len(piece_idx)} parcels cannot form {count} districts "
            f"of {parcel_map.district_size}"
        )
    if not parcel_map.connected(piece_idx):
        raise InfeasibilityError("infeasible piece: not connected")

    whole = piece_idx == _all_parcels(parcel_map)
    if parcel_map.division_predicate is not None:
        if not whole:
            raise EngineError(
                "a division-level validity predicate cannot be decomposed onto a piece; "
                "optimal_piece_division supports it only for the whole map"
            )
        value, witness = extremal_rating(
            parcel_map, _division_stream(parcel_map), spec, model, sense
        )
        parts = tuple(sorted(witness.districts(parcel_map), key=min))
        return value, tuple(
            frozenset(parcel_map.parcel_ids[i] for i in d) for d in parts
        )

    value, parts = _optimal_piece(parcel_map, piece_idx, count, spec, model, sense)
    return value, tuple(frozenset(parcel_map.parcel_ids[i] for i in d) for d in parts)


# -- targets ------------------------------------------------------------------

def geometric_target(
    parcel_map: ParcelMap, spec: RatingSpec, model: VotingModel
) -> TargetReport:
    """Midpoint of a party's best and worst ratings over all viable divisions."""
    _require_valid(parcel_map)
    shares = model.share_vector(parcel_map)
    everything = _all_parcels(parcel_map)
    classes = _twin_classes(parcel_map, everything, shares)
    if _class_dp_eligible(parcel_map, spec, classes, len(everything)):
        hi = _class_dp_extreme(parcel_map, classes, spec, shares, "maximize")
        lo = _class_dp_extreme(parcel_map, classes, spec, shares, "minimize")
        if hi is None or lo is None:
            raise NoViableDivisions("no viable divisions")
        return TargetReport.from_extremes(
            hi[0],
            lo[0],
            division_from_district_sets(parcel_map, sorted(hi[1], key=min)),
            division_from_district_sets(parcel_map, sorted(lo[1], key=min)),
        )
    hi_v, lo_v, w_hi, w_lo = _both_extremes(parcel_map, _division_stream(parcel_map), spec, model)
    return TargetReport.from_extremes(hi_v, lo_v, w_hi, w_lo)


def ksplit_geometric_target(
    parcel_map: ParcelMap, split: Split, spec: RatingSpec, model: VotingModel
) -> TargetReport:
    """The geometric target restricted to divisions that respect the split.

    With no division predicate this decomposes exactly: the rating is additive
    and the two pieces are divided independently, so the best (worst) refining
    rating is the sum of the per-piece bests (worsts)."""
    _require_valid(parcel_map)
    violations = validate_split(parcel_map, split)
    if violations:
        raise ValidationFailure("split", violations)

    if parcel_map.division_predicate is not None:
        try:
            hi, lo, w_hi, w_lo = _both_extremes(
                parcel_map, enumerate_divisions_refining(parcel_map, split), spec, model
            )
        except NoViableDivisions:
            raise InfeasibleSplit("infeasible split") from None
        return TargetReport.from_extremes(hi, lo, w_hi, w_lo)

    p1 = split.piece1_indices(parcel_map)
    p2 = split.piece2_indices(parcel_map)
    n = parcel_map.n_districts
    try:
        hi1, hi1_parts = _optimal_piece(parcel_map, p1, split.k, spec, model, "maximize")
        lo1, lo1_parts = _optimal_piece(parcel_map, p1, split.k, spec, model, "minimize")
        hi2, hi2_parts = _optimal_piece(parcel_map, p2, n - split.k, spec, model, "maximize")
        lo2, lo2_parts = _optimal_piece(parcel_map, p2, n - split.k, spec, model, "minimize")
    except InfeasibilityError:
        raise InfeasibleSplit("infeasible split") from None
    return TargetReport.from_extremes(
        hi1 + hi2,
        lo1 + lo2,
        division_from_district_sets(parcel_map, sorted(hi1_parts + hi2_parts, key=min)),
        division_from_district_sets(parcel_map, sorted(lo1_parts + lo2_parts, key=min)),
    )


def clear_caches() -> None:
    """Drop memoized enumeration results (mainly for long-lived processes)."""
    _piece_division_tuples.cache_clear()
    _optimal_piece.cache_clear()
