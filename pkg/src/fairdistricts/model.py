"""Core domain objects: maps, divisions, splits, voting models, rating systems.

Everything is an immutable value with exact rational arithmetic (fractions.Fraction)
so that targets, ratings, and tie/indifference decisions never depend on float
tolerances.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

FractionLike = Union[Fraction, int, float, str]


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class ValidationFailure(EngineError):
    """Input data violates a structural invariant."""

    def __init__(self, subject: str, violations: Sequence[str]):
        self.subject = subject
        self.violations = list(violations)
        super().__init__(f"invalid {subject}: " + "; ".join(self.violations))


class InfeasibilityError(EngineError):
    """A requested computation has no feasible result (empty split, no sequence, ...)."""


def as_fraction(value: FractionLike) -> Fraction:
    """Coerce to an exact Fraction. Floats go through their decimal repr,
    so 0.6 becomes 3/5 rather than a 53-bit binary approximation."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a number here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def fraction_str(value: Fraction) -> str:
    """Serialize a Fraction compactly ('3/5', '2')."""
    return str(value)


@dataclass(frozen=True)
class Parcel:
    """One indivisible population unit (a node of the state graph)."""

    id: str
    population: int
    vote_share_a: Fraction
    rect: Optional[tuple[Fraction, Fraction, Fraction, Fraction]] = None


class ParcelMap:
    """A state: equal-population parcels, an adjacency graph, and a district count.

    Parcels are canonically ordered by id; all index-based structures
    (assignment vectors, neighbor sets) refer to that order.  An optional
    ``division_predicate`` stands in for legal constraints: enumeration and
    target computations only consider divisions it accepts.
    """

    def __init__(
        self,
        parcels: Iterable[Parcel],
        adjacency: Iterable[tuple[str, str]],
        n_districts: int,
        division_predicate: Optional[Callable[["ParcelMap", "Division"], bool]] = None,
    ):
        self.parcels = tuple(sorted(parcels, key=lambda p: p.id))
        self.adjacency = frozenset(
            (a, b) if a <= b else (b, a) for a, b in adjacency
        )
        self.n_districts = int(n_districts)
        self.division_predicate = division_predicate

        self.parcel_ids: tuple[str, ...] = tuple(p.id for p in self.parcels)
        self.index: dict[str, int] = {pid: i for i, pid in enumerate(self.parcel_ids)}
        self.by_id: dict[str, Parcel] = {p.id: p for p in self.parcels}

        nbrs: list[set[int]] = [set() for _ in self.parcels]
        for a, b in self.adjacency:
            ia, ib = self.index.get(a), self.index.get(b)
            if ia is None or ib is None or ia == ib:
                continue  # reported by validate_map, not silently repaired
            nbrs[ia].add(ib)
            nbrs[ib].add(ia)
        self.neighbors: tuple[frozenset[int], ...] = tuple(frozenset(s) for s in nbrs)

        self._signature = (
            tuple((p.id, p.population, p.vote_share_a, p.rect) for p in self.parcels),
            self.adjacency,
            self.n_districts,
        )
        self._hash = hash(self._signature)

    # Value semantics: two maps with the same parcels/edges/n are the same map
    # (the predicate is a behavioral attachment, not identity).
    def __eq__(self, other: object) -> bool:
        return isinstance(other, ParcelMap) and self._signature == other._signature

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"ParcelMap({len(self.parcels)} parcels, n_districts={self.n_districts})"

    @property
    def district_size(self) -> int:
        """Parcels per district under the equal-parcel model."""
        return len(self.parcels) // self.n_districts

    @property
    def total_population(self) -> int:
        return sum(p.population for p in self.parcels)

    def statewide_share_a(self) -> Fraction:
        """Population-weighted mean of party A's parcel vote shares."""
        total = self.total_population
        weighted = sum(p.population * p.vote_share_a for p in self.parcels)
        return Fraction(weighted, total)

    def connected(self, parcels: Iterable[int]) -> bool:
        """True iff the induced subgraph on the given parcel indices is connected."""
        members = set(parcels)
        if not members:
            return False
        start = next(iter(members))
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in self.neighbors[u] & members:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == len(members)

    def components(self, parcels: Iterable[int]) -> list[frozenset[int]]:
        """Connected components of the induced subgraph, ordered by smallest member."""
        remaining = set(parcels)
        out = []
        while remaining:
            start = min(remaining)
            seen = {start}
            queue = deque([start])
            while queue:
                u = queue.popleft()
                for v in self.neighbors[u] & remaining:
                    if v not in seen:
                        seen.add(v)
                        queue.append(v)
            out.append(frozenset(seen))
            remaining -= seen
        return out


def validate_map(parcel_map: ParcelMap) -> list[str]:
    """Check every ParcelMap invariant; return the list of violations (empty = ok)."""
    violations: list[str] = []
    ids = [p.id for p in parcel_map.parcels]
    seen: set[str] = set()
    for pid in ids:
        if pid in seen:
            violations.append(f"duplicate parcel id {pid!r}")
        seen.add(pid)

    if not parcel_map.parcels:
        violations.append("map has no parcels")
        return violations

    for p in parcel_map.parcels:
        if p.population <= 0:
            violations.append(f"parcel {p.id!r} has non-positive population")
        if not (0 <= p.vote_share_a <= 1):
            violations.append(f"parcel {p.id!r} vote share outside [0, 1]")

    for a, b in sorted(parcel_map.adjacency):
        if a == b:
            violations.append(f"self-loop on parcel {a!r}")
        for end in (a, b):
            if end not in parcel_map.index:
                violations.append(f"adjacency references unknown parcel id {end!r}")

    if parcel_map.n_districts <= 0:
        violations.append("n_districts must be positive")
        return violations

    pops = {p.population for p in parcel_map.parcels}
    if len(pops) > 1:
        violations.append("parcels do not all have equal population")
    if parcel_map.total_population % parcel_map.n_districts != 0:
        violations.append("total population is not divisible by n_districts")
    if len(parcel_map.parcels) % parcel_map.n_districts != 0:
        violations.append("parcel count is not divisible by n_districts")

    if not violations and not parcel_map.connected(range(len(parcel_map.parcels))):
        violations.append("parcel graph is not connected")
    return violations


@dataclass(frozen=True)
class VotingModel:
    """A prediction (or the realized outcome) of per-parcel vote shares for party A.

    Entries override the map's stored shares.  With ``default_to_map`` (the
    usual case) missing parcels fall back to the map; a model built with
    ``default_to_map=False`` must cover every parcel it is asked about.
    """

    overrides: tuple[tuple[str, Fraction], ...] = ()
    default_to_map: bool = True

    @staticmethod
    def outcome() -> "VotingModel":
        """The distinguished 'how everyone actually votes' model: the map's own shares."""
        return VotingModel()

    @staticmethod
    def from_mapping(shares: Mapping[str, FractionLike], default_to_map: bool = True) -> "VotingModel":
        items = tuple(sorted((pid, as_fraction(v)) for pid, v in shares.items()))
        return VotingModel(items, default_to_map)

    def validate(self, parcel_map: ParcelMap) -> list[str]:
        violations = []
        for pid, value in self.overrides:
            if pid not in parcel_map.index:
                violations.append(f"voting model names unknown parcel id {pid!r}")
            if not (0 <= value <= 1):
                violations.append(f"voting model share for {pid!r} outside [0, 1]")
        return violations

    def share_vector(self, parcel_map: ParcelMap) -> tuple[Fraction, ...]:
        """Per-parcel A-shares in the map's canonical parcel order."""
        table = dict(self.overrides)
        shares = []
        for p in parcel_map.parcels:
            if p.id in table:
                shares.append(table[p.id])
            elif self.default_to_map:
                shares.append(p.vote_share_a)
            else:
                raise EngineError(f"voting model has no entry for parcel {p.id!r} and no default")
        return tuple(shares)


def district_share(
    parcel_map: ParcelMap, district: frozenset[int], shares: Sequence[Fraction], party: str = "A"
) -> Fraction:
    """Population-weighted vote share of a party within one district."""
    pop = 0
    votes = Fraction(0)
    for i in district:
        p = parcel_map.parcels[i]
        pop += p.population
        votes += p.population * shares[i]
    share_a = Fraction(votes, pop)
    return share_a if party == "A" else 1 - share_a


@dataclass(frozen=True)
class WinRating:
    """Rate a division by the number of districts the party wins outright.

    A district counts iff the party's share strictly exceeds the threshold;
    a district sitting exactly at the threshold counts for neither party.
    """

    party: str = "A"
    threshold: Fraction = Fraction(1, 2)

    #: district value depends only on (population, share) data, so extremal
    #: searches may compress parcels that are structurally interchangeable
    share_invariant: bool = True

    def district_value(
        self, parcel_map: ParcelMap, district: frozenset[int], shares: Sequence[Fraction]
    ) -> Fraction:
        share = district_share(parcel_map, district, shares, self.party)
        return Fraction(1) if share > self.threshold else Fraction(0)

    def as_table(self) -> "TableRating":
        """The same rater expressed as an explicit additive table rating."""
        return TableRating(
            lambda m, district, shares, _self=self: _self.district_value(m, district, shares),
            label=f"win[{self.party}>{self.threshold}]",
            share_invariant=True,
        )


@dataclass(frozen=True, eq=False)
class TableRating:
    """An arbitrary additive rating: a per-district scoring function, summed.

    ``fn(parcel_map, district_indices, shares)`` returns that district's value.
    Set ``share_invariant=True`` only if the function provably depends on
    nothing but the parcels' populations and shares (enables compressed
    extremal search on symmetric maps).
    """

    fn: Callable[[ParcelMap, frozenset[int], Sequence[Fraction]], FractionLike]
    label: str = "table"
    share_invariant: bool = False

    def district_value(
        self, parcel_map: ParcelMap, district: frozenset[int], shares: Sequence[Fraction]
    ) -> Fraction:
        return as_fraction(self.fn(parcel_map, district, shares))

    def __hash__(self) -> int:
        return hash((id(self.fn), self.label, self.share_invariant))

    def __eq__(self, other: object) -> bool:
        return self is other


RatingSpec = Union[WinRating, TableRating]


class Division:
    """An assignment of every parcel to one of the districts 0..n-1."""

    __slots__ = ("assignment", "_items", "_hash")

    def __init__(self, assignment: Mapping[str, int]):
        items = tuple(sorted((str(k), int(v)) for k, v in assignment.items()))
        object.__setattr__(self, "assignment", dict(items))
        object.__setattr__(self, "_items", items)
        object.__setattr__(self, "_hash", hash(items))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Division) and self._items == other._items

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Division({self.assignment!r})"

    def vector(self, parcel_map: ParcelMap) -> tuple[int, ...]:
        """District labels in the map's canonical parcel order."""
        return tuple(self.assignment[pid] for pid in parcel_map.parcel_ids)

    def canonical_vector(self, parcel_map: ParcelMap) -> tuple[int, ...]:
        """Relabel districts by first appearance along the canonical parcel order,
        so the district containing the smallest parcel id is district 0."""
        raw = self.vector(parcel_map)
        relabel: dict[int, int] = {}
        out = []
        for label in raw:
            if label not in relabel:
                relabel[label] = len(relabel)
            out.append(relabel[label])
        return tuple(out)

    def canonicalized(self, parcel_map: ParcelMap) -> "Division":
        vec = self.canonical_vector(parcel_map)
        return Division(dict(zip(parcel_map.parcel_ids, vec)))

    def districts(self, parcel_map: ParcelMap) -> tuple[frozenset[int], ...]:
        """Parcel-index sets per district label (0..n-1)."""
        n = max(self.assignment.values()) + 1
        groups: list[set[int]] = [set() for _ in range(n)]
        for pid, label in self.assignment.items():
            groups[label].add(parcel_map.index[pid])
        return tuple(frozenset(g) for g in groups)


def division_from_district_sets(
    parcel_map: ParcelMap, districts: Iterable[Iterable[int]]
) -> Division:
    """Build a canonical-labeled Division from parcel-index district sets."""
    assignment: dict[str, int] = {}
    for label, members in enumerate(districts):
        for i in members:
            assignment[parcel_map.parcel_ids[i]] = label
    return Division(assignment).canonicalized(parcel_map)


def validate_division(parcel_map: ParcelMap, division: Division) -> list[str]:
    """Check every Division invariant against the map; return violations (empty = ok)."""
    violations: list[str] = []
    n = parcel_map.n_districts
    for pid, label in division.assignment.items():
        if pid not in parcel_map.index:
            violations.append(f"assignment names unknown parcel id {pid!r}")
        if not (0 <= label < n):
            violations.append(f"parcel {pid!r} assigned to out-of-range district {label}")
    missing = [pid for pid in parcel_map.parcel_ids if pid not in division.assignment]
    if missing:
        violations.append(f"parcels not assigned to any district: {', '.join(missing)}")
    if violations:
        return violations

    groups: list[list[int]] = [[] for _ in range(n)]
    for pid, label in division.assignment.items():
        groups[label].append(parcel_map.index[pid])
    size = parcel_map.district_size
    for label, members in enumerate(groups):
        if not members:
            violations.append(f"missing district: index {label} is unused")
        elif len(members) != size:
            violations.append(f"district {label} has {len(members)} parcels, expected {size}")
    for label, members in enumerate(groups):
        if members and not parcel_map.connected(members):
            violations.append(f"district {label} not connected")
    if not violations and parcel_map.division_predicate is not None:
        if not parcel_map.division_predicate(parcel_map, division):
            violations.append("division rejected by the map's extra validity predicate")
    return violations


def rate_division(
    parcel_map: ParcelMap, division: Division, spec: RatingSpec, model: VotingModel
) -> Fraction:
    """Additive rating of a division: the sum of the spec's per-district values."""
    shares = model.share_vector(parcel_map)
    return sum(
        (spec.district_value(parcel_map, d, shares) for d in division.districts(parcel_map)),
        Fraction(0),
    )


@dataclass(frozen=True)
class Split:
    """A bipartition of the state whose first piece holds exactly k districts' population."""

    k: int
    piece1: frozenset[str]

    def piece2(self, parcel_map: ParcelMap) -> frozenset[str]:
        return frozenset(parcel_map.parcel_ids) - self.piece1

    def piece1_indices(self, parcel_map: ParcelMap) -> frozenset[int]:
        return frozenset(parcel_map.index[p] for p in self.piece1)

    def piece2_indices(self, parcel_map: ParcelMap) -> frozenset[int]:
        return frozenset(range(len(parcel_map.parcels))) - self.piece1_indices(parcel_map)


def validate_split(parcel_map: ParcelMap, split: Split) -> list[str]:
    violations = []
    unknown = [p for p in split.piece1 if p not in parcel_map.index]
    if unknown:
        violations.append(f"split names unknown parcel ids: {', '.join(sorted(unknown))}")
        return violations
    n = parcel_map.n_districts
    if not (1 <= split.k <= n - 1):
        violations.append(f"split k={split.k} outside 1..{n - 1}")
        return violations
    expected = split.k * parcel_map.district_size
    if len(split.piece1) != expected:
        violations.append(
            f"piece 1 has {len(split.piece1)} parcels, expected {expected} for a {split.k}-split"
        )
    p1 = split.piece1_indices(parcel_map)
    p2 = split.piece2_indices(parcel_map)
    if p1 and not parcel_map.connected(p1):
        violations.append("piece 1 not connected")
    if p2 and not parcel_map.connected(p2):
        violations.append("piece 2 not connected")
    return violations


@dataclass(frozen=True)
class SplitSequence:
    """Nested splits for k = 1..n-1: piece 1 only ever grows."""

    splits: tuple[Split, ...]

    def validate(self, parcel_map: ParcelMap) -> list[str]:
        violations = []
        expected_ks = list(range(1, parcel_map.n_districts))
        if [s.k for s in self.splits] != expected_ks:
            violations.append(
                f"sequence must contain splits k={expected_ks}, got {[s.k for s in self.splits]}"
            )
        for s in self.splits:
            violations.extend(f"{s.k}-split: {v}" for v in validate_split(parcel_map, s))
        for prev, cur in zip(self.splits, self.splits[1:]):
            if not prev.piece1 < cur.piece1:
                violations.append(
                    f"piece 1 of the {cur.k}-split does not strictly contain piece 1 of the {prev.k}-split"
                )
        return violations


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------

def map_from_dict(data: Mapping) -> ParcelMap:
    parcels = []
    for entry in data["parcels"]:
        rect = entry.get("rect")
        parcels.append(
            Parcel(
                id=str(entry["id"]),
                population=int(entry["population"]),
                vote_share_a=as_fraction(entry["vote_share_A"]),
                rect=tuple(as_fraction(v) for v in rect) if rect is not None else None,
            )
        )
    adjacency = [(str(a), str(b)) for a, b in data["adjacency"]]
    return ParcelMap(parcels, adjacency, int(data["n_districts"]))


def map_to_dict(parcel_map: ParcelMap) -> dict:
    parcels = []
    for p in parcel_map.parcels:
        entry: dict = {
            "id": p.id,
            "population": p.population,
            "vote_share_A": fraction_str(p.vote_share_a),
        }
        if p.rect is not None:
            entry["rect"] = [fraction_str(v) for v in p.rect]
        parcels.append(entry)
    return {
        "parcels": parcels,
        "adjacency": [list(pair) for pair in sorted(parcel_map.adjacency)],
        "n_districts": parcel_map.n_districts,
    }


def load_map(path: Union[str, Path]) -> ParcelMap:
    """Parse and fully validate a map file; raise ValidationFailure on any defect."""
    raw = json.loads(Path(path).read_text())
    try:
        parcel_map = map_from_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationFailure(f"map file {path}", [str(exc)]) from exc

    violations = validate_map(parcel_map)
    if violations:
        raise ValidationFailure(f"map file {path}", violations)
    return parcel_map


def division_to_dict(division: Division) -> dict:
    return {"assignment": dict(sorted(division.assignment.items()))}


def division_from_dict(data: Mapping) -> Division:
    return Division({str(k): int(v) for k, v in data["assignment"].items()})


def dump_json(data, path: Union[str, Path]) -> None:
    """Write canonical JSON: sorted keys, fixed separators, trailing newline."""
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def dumps_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
