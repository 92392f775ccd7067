"""The redistricting protocol: split sequences, preferences, resolution, ranking.

Party agents are automated and truthful: they evaluate each option exactly
under their own voting model and additive rating, predict the opponent's piece
per a configurable opponent model, and declare the option with the higher
value (or indifference on exact equality).  All randomness flows from one
explicit seed, so a run is fully replayable from its transcript.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .enumeration import _optimal_piece, _piece_division_tuples, _piece_feasible
from .model import (
    Division,
    EngineError,
    InfeasibilityError,
    ParcelMap,
    RatingSpec,
    Split,
    SplitSequence,
    ValidationFailure,
    VotingModel,
    as_fraction,
    division_from_district_sets,
    fraction_str,
    rate_division,
    validate_map,
)

OPTION_A = "option_a"  # party A divides piece 1, party B divides piece 2
OPTION_B = "option_b"  # party B divides piece 1, party A divides piece 2
INDIFFERENT = "indifferent"

PESSIMISTIC = "pessimistic"
SELF_INTERESTED = "self-interested"


class NoSwitchPoint(InfeasibilityError):
    pass


class SequenceGenerationFailed(InfeasibilityError):
    pass


def derive_seed(master: int, label: str) -> int:
    """Stable sub-seed for an independent random stream."""
    digest = hashlib.sha256(f"{master}|{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class PartyAgent:
    """An automated party: its identity, beliefs, interests, and negotiation stance."""

    party: str  # "A" or "B"
    voting_model: VotingModel = field(default_factory=VotingModel)
    rating: RatingSpec = None  # type: ignore[assignment]
    opponent_model: str = PESSIMISTIC

    def __post_init__(self):
        if self.party not in ("A", "B"):
            raise ValueError(f"party must be 'A' or 'B', not {self.party!r}")
        if self.rating is None:
            from .model import WinRating

            object.__setattr__(self, "rating", WinRating(party=self.party))
        if self.opponent_model not in (PESSIMISTIC, SELF_INTERESTED):
            raise ValueError(f"unknown opponent model {self.opponent_model!r}")


@dataclass(frozen=True)
class OptionEvaluation:
    """An agent's predicted rating of one option, broken down by piece."""

    piece1_value: Fraction
    piece2_value: Fraction

    @property
    def total(self) -> Fraction:
        return self.piece1_value + self.piece2_value


@dataclass(frozen=True)
class SplitPreference:
    k: int
    option_a: OptionEvaluation
    option_b: OptionEvaluation
    preference: str  # OPTION_A | OPTION_B | INDIFFERENT


@dataclass(frozen=True)
class PreferenceDeclaration:
    party: str
    entries: tuple[SplitPreference, ...]

    def preference_for(self, k: int) -> str:
        for entry in self.entries:
            if entry.k == k:
                return entry.preference
        raise KeyError(f"no declared preference for the {k}-split")


@dataclass(frozen=True)
class Resolution:
    branch: str  # agreement | single-indifference | double-indifference | switch-point
    k: int
    option: str
    i0: Optional[int] = None
    prescriptions: tuple[tuple[int, str], ...] = ()


@dataclass(frozen=True)
class Transcript:
    """Replayable record of one protocol run on one split sequence."""

    seed: int
    label: str
    sequence: SplitSequence
    declaration_a: PreferenceDeclaration
    declaration_b: PreferenceDeclaration
    resolution: Resolution
    division: Division
    ratings: tuple[tuple[str, Fraction], ...]  # per party, own rating of the division

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "label": self.label,
            "sequence": {
                "splits": [
                    {"k": s.k, "piece1": sorted(s.piece1)} for s in self.sequence.splits
                ]
            },
            "declarations": {
                decl.party: [
                    {
                        "k": e.k,
                        "option_a": {
                            "piece1": fraction_str(e.option_a.piece1_value),
                            "piece2": fraction_str(e.option_a.piece2_value),
                            "total": fraction_str(e.option_a.total),
                        },
                        "option_b": {
                            "piece1": fraction_str(e.option_b.piece1_value),
                            "piece2": fraction_str(e.option_b.piece2_value),
                            "total": fraction_str(e.option_b.total),
                        },
                        "preference": e.preference,
                    }
                    for e in decl.entries
                ]
                for decl in (self.declaration_a, self.declaration_b)
            },
            "resolution": {
                "branch": self.resolution.branch,
                "k": self.resolution.k,
                "option": self.resolution.option,
                "i0": self.resolution.i0,
                "prescriptions": [list(p) for p in self.resolution.prescriptions],
            },
            "division": {"assignment": dict(sorted(self.division.assignment.items()))},
            "ratings": {party: fraction_str(value) for party, value in self.ratings},
        }

    @staticmethod
    def from_dict(data: Mapping) -> "Transcript":
        splits = tuple(
            Split(k=int(s["k"]), piece1=frozenset(s["piece1"]))
            for s in data["sequence"]["splits"]
        )

        def decl(party: str) -> PreferenceDeclaration:
            entries = tuple(
                SplitPreference(
                    k=int(e["k"]),
                    option_a=OptionEvaluation(
                        as_fraction(e["option_a"]["piece1"]),
                        as_fraction(e["option_a"]["piece2"]),
                    ),
                    option_b=OptionEvaluation(
                        as_fraction(e["option_b"]["piece1"]),
                        as_fraction(e["option_b"]["piece2"]),
                    ),
                    preference=e["preference"],
                )
                for e in data["declarations"][party]
            )
            return PreferenceDeclaration(party, entries)

        res = data["resolution"]
        return Transcript(
            seed=int(data["seed"]),
            label=data["label"],
            sequence=SplitSequence(splits),
            declaration_a=decl("A"),
            declaration_b=decl("B"),
            resolution=Resolution(
                branch=res["branch"],
                k=int(res["k"]),
                option=res["option"],
                i0=None if res["i0"] is None else int(res["i0"]),
                prescriptions=tuple((int(k), opt) for k, opt in res["prescriptions"]),
            ),
            division=Division(data["division"]["assignment"]),
            ratings=tuple(
                (party, as_fraction(v)) for party, v in sorted(data["ratings"].items())
            ),
        )


# ---------------------------------------------------------------------------
# Split sequence generation
# ---------------------------------------------------------------------------

SWEEP_DIRECTIONS = ("vertical", "horizontal", "diag-down", "diag-up")


@dataclass(frozen=True)
class Sweep:
    """Deterministic sweep: accrete parcels into piece 1 along a geometric axis."""

    direction: str
    reverse: bool = False

    def __post_init__(self):
        if self.direction not in SWEEP_DIRECTIONS:
            raise ValueError(f"unknown sweep direction {self.direction!r}")

    @property
    def label(self) -> str:
        return f"sweep:{self.direction}" + (":rev" if self.reverse else "")


@dataclass(frozen=True)
class RandomGrowth:
    """Grow piece 1 by uniformly random frontier accretion, restarting on dead ends."""

    restarts: int = 200

    @property
    def label(self) -> str:
        return "random-growth"


Strategy = object  # Sweep | RandomGrowth


def parse_strategy(text: str) -> Strategy:
    parts = text.split(":")
    if parts[0] == "sweep" and len(parts) in (2, 3):
        reverse = len(parts) == 3 and parts[2] == "rev"
        if len(parts) == 3 and not reverse:
            raise ValueError(f"unknown sweep modifier {parts[2]!r}")
        return Sweep(direction=parts[1], reverse=reverse)
    if text == "random-growth":
        return RandomGrowth()
    raise ValueError(f"unknown strategy {text!r}")


def _sweep_order(parcel_map: ParcelMap, strategy: Sweep) -> list[int]:
    missing = [p.id for p in parcel_map.parcels if p.rect is None]
    if missing:
        raise SequenceGenerationFailed(
            "sweep strategies need rect geometry on every parcel; missing for: "
            + ", ".join(missing)
        )

    def key(i: int):
        x, y, w, h = parcel_map.parcels[i].rect
        cx, cy = x + w / 2, y + h / 2
        if strategy.direction == "vertical":
            primary, secondary = cx, cy
        elif strategy.direction == "horizontal":
            primary, secondary = cy, cx
        elif strategy.direction == "diag-down":
            primary, secondary = cx + cy, cx
        else:  # diag-up
            primary, secondary = cx - cy, cx
        if strategy.reverse:
            primary, secondary = -primary, -secondary
        return (primary, secondary, parcel_map.parcel_ids[i])

    return sorted(range(len(parcel_map.parcels)), key=key)


def _snapshot_splits(
    parcel_map: ParcelMap, growth: Sequence[int]
) -> tuple[Split, ...]:
    size = parcel_map.district_size
    splits = []
    piece1: list[str] = []
    for pos, idx in enumerate(growth, start=1):
        piece1.append(parcel_map.parcel_ids[idx])
        if pos % size == 0 and pos // size <= parcel_map.n_districts - 1:
            splits.append(Split(k=pos // size, piece1=frozenset(piece1)))
    return tuple(splits)


def _candidate_ok(parcel_map: ParcelMap, piece1: set[int], idx: int, everything: set[int]) -> bool:
    """May `idx` join piece 1?  Both pieces must stay connected, and whenever the
    addition completes a k-split boundary, both pieces must actually be
    divisible into districts (a connected piece is not automatically tileable,
    and the protocol has to divide every split it is handed)."""
    if piece1 and not any(v in piece1 for v in parcel_map.neighbors[idx]):
        return False
    complement = everything - piece1 - {idx}
    if complement and not parcel_map.connected(complement):
        return False
    size = parcel_map.district_size
    grown = len(piece1) + 1
    if grown % size == 0 and grown // size <= parcel_map.n_districts - 1:
        k = grown // size
        new_piece = frozenset(piece1 | {idx})
        if not _piece_feasible(parcel_map, new_piece, k):
            return False
        if not _piece_feasible(
            parcel_map, frozenset(complement), parcel_map.n_districts - k
        ):
            return False
    return True


def generate_split_sequence(
    parcel_map: ParcelMap, strategy: Strategy, seed: Optional[int] = None
) -> SplitSequence:
    """Produce a nested split sequence (k = 1..n-1) whose splits the protocol
    can actually play: both pieces of every split are connected and divisible
    into districts.  Sweeps are deterministic; random growth is a pure
    function of the seed."""
    violations = validate_map(parcel_map)
    if violations:
        raise ValidationFailure("map", violations)
    n = parcel_map.n_districts
    total = len(parcel_map.parcels)
    goal = (n - 1) * parcel_map.district_size
    everything = set(range(total))

    if isinstance(strategy, Sweep):
        order = _sweep_order(parcel_map, strategy)
        piece1: set[int] = set()
        growth: list[int] = []
        while len(piece1) < goal:
            chosen = None
            for idx in order:
                if idx in piece1:
                    continue
                if _candidate_ok(parcel_map, piece1, idx, everything):
                    chosen = idx
                    break
            if chosen is None:
                raise SequenceGenerationFailed("no valid sequence")
            piece1.add(chosen)
            growth.append(chosen)
        sequence = SplitSequence(_snapshot_splits(parcel_map, growth))
    elif isinstance(strategy, RandomGrowth):
        if seed is None:
            raise ValueError("random-growth needs a seed")
        rng = random.Random(seed)
        sequence = None
        for _ in range(strategy.restarts):
            piece1 = set()
            growth = []
            candidates = [rng.randrange(total)]
            ok = True
            while len(piece1) < goal:
                valid = [
                    idx
                    for idx in sorted(candidates)
                    if _candidate_ok(parcel_map, piece1, idx, everything)
                ]
                if not valid:
                    ok = False
                    break
                idx = rng.choice(valid)
                piece1.add(idx)
                growth.append(idx)
                frontier = set()
                for member in piece1:
                    frontier |= parcel_map.neighbors[member]
                candidates = sorted(frontier - piece1)
            if ok:
                sequence = SplitSequence(_snapshot_splits(parcel_map, growth))
                break
        if sequence is None:
            raise SequenceGenerationFailed("no valid sequence")
    else:
        raise TypeError(f"unknown strategy object {strategy!r}")

    violations = sequence.validate(parcel_map)
    if violations:
        raise SequenceGenerationFailed("no valid sequence: " + "; ".join(violations))
    return sequence


# ---------------------------------------------------------------------------
# Preference, resolution, realization
# ---------------------------------------------------------------------------

def _require_no_predicate(parcel_map: ParcelMap) -> None:
    if parcel_map.division_predicate is not None:
        raise EngineError(
            "protocol piece optimization is undefined for maps with a division-level "
            "validity predicate; drop the predicate or express it per district"
        )


def _self_interested_opponent_value(
    parcel_map: ParcelMap,
    piece: frozenset[int],
    count: int,
    agent_spec: RatingSpec,
    agent_model: VotingModel,
    opp_spec: RatingSpec,
    opp_model: VotingModel,
) -> Fraction:
    """Agent's rating of the opponent's piece when the opponent optimizes its own
    rating, ties broken against the agent."""
    agent_shares = agent_model.share_vector(parcel_map)
    opp_shares = opp_model.share_vector(parcel_map)
    best_opp: Optional[Fraction] = None
    worst_for_agent: Optional[Fraction] = None
    for parts in _piece_division_tuples(parcel_map, piece, count):
        opp_value = sum(
            (opp_spec.district_value(parcel_map, d, opp_shares) for d in parts), Fraction(0)
        )
        agent_value = sum(
            (agent_spec.district_value(parcel_map, d, agent_shares) for d in parts), Fraction(0)
        )
        if best_opp is None or opp_value > best_opp:
            best_opp, worst_for_agent = opp_value, agent_value
        elif opp_value == best_opp and agent_value < worst_for_agent:
            worst_for_agent = agent_value
    if best_opp is None:
        raise InfeasibilityError("infeasible piece")
    return worst_for_agent


def evaluate_option_detail(
    agent: PartyAgent,
    parcel_map: ParcelMap,
    split: Split,
    option: str,
    opponent: Optional[PartyAgent] = None,
) -> OptionEvaluation:
    """Predicted rating of the division realized from one option, split by piece.

    The agent's own piece is divided to maximize its rating.  The opponent's
    piece is predicted per the agent's opponent model: pessimistic (minimizes
    the agent's rating) or self-interested (the opponent maximizes its own
    rating, ties broken against the agent; requires `opponent`)."""
    _require_no_predicate(parcel_map)
    if option not in (OPTION_A, OPTION_B):
        raise ValueError(f"unknown option {option!r}")
    n = parcel_map.n_districts
    p1 = split.piece1_indices(parcel_map)
    p2 = split.piece2_indices(parcel_map)
    divider1 = "A" if option == OPTION_A else "B"
    own_piece, own_count, opp_piece, opp_count = (
        (p1, split.k, p2, n - split.k)
        if agent.party == divider1
        else (p2, n - split.k, p1, split.k)
    )

    own_value, _ = _optimal_piece(
        parcel_map, own_piece, own_count, agent.rating, agent.voting_model, "maximize"
    )
    if agent.opponent_model == PESSIMISTIC:
        opp_value, _ = _optimal_piece(
            parcel_map, opp_piece, opp_count, agent.rating, agent.voting_model, "minimize"
        )
    else:
        if opponent is None:
            raise ValueError("self-interested evaluation needs the opponent agent")
        opp_value = _self_interested_opponent_value(
            parcel_map,
            opp_piece,
            opp_count,
            agent.rating,
            agent.voting_model,
            opponent.rating,
            opponent.voting_model,
        )

    if own_piece is p1:
        return OptionEvaluation(piece1_value=own_value, piece2_value=opp_value)
    return OptionEvaluation(piece1_value=opp_value, piece2_value=own_value)


def evaluate_option(
    agent: PartyAgent,
    parcel_map: ParcelMap,
    split: Split,
    option: str,
    opponent: Optional[PartyAgent] = None,
) -> Fraction:
    return evaluate_option_detail(agent, parcel_map, split, option, opponent).total


def declare_preferences(
    agent: PartyAgent,
    parcel_map: ParcelMap,
    sequence: SplitSequence,
    opponent: Optional[PartyAgent] = None,
) -> PreferenceDeclaration:
    """Per split: the option with the strictly higher evaluation, or indifference
    on exact equality (rational arithmetic, no epsilon)."""
    entries = []
    for split in sequence.splits:
        eval_a = evaluate_option_detail(agent, parcel_map, split, OPTION_A, opponent)
        eval_b = evaluate_option_detail(agent, parcel_map, split, OPTION_B, opponent)
        if eval_a.total > eval_b.total:
            preference = OPTION_A
        elif eval_b.total > eval_a.total:
            preference = OPTION_B
        else:
            preference = INDIFFERENT
        entries.append(SplitPreference(split.k, eval_a, eval_b, preference))
    return PreferenceDeclaration(agent.party, tuple(entries))


def resolve(
    sequence: SplitSequence,
    prefs_a: PreferenceDeclaration,
    prefs_b: PreferenceDeclaration,
    rng: random.Random,
) -> Resolution:
    """Apply the resolution rules in order of precedence.

    1. some split where both parties prefer the same option;
    2. some split where exactly one party is indifferent (use the other's choice);
    3. some split where both are indifferent (option at random);
    4. otherwise preferences are opposite everywhere: find the first i0 where
       party A prefers option B and flips to option A at i0+1, then pick one of
       the four (split, option) prescriptions uniformly at random.

    Within a rule, the lowest qualifying k wins.
    """
    if len(prefs_a.entries) != len(prefs_b.entries) or len(prefs_a.entries) != len(
        sequence.splits
    ):
        raise EngineError("declarations do not cover the same split sequence")

    pref_a = {e.k: e.preference for e in prefs_a.entries}
    pref_b = {e.k: e.preference for e in prefs_b.entries}
    ks = [s.k for s in sequence.splits]

    for k in ks:
        a, b = pref_a[k], pref_b[k]
        if a == b and a != INDIFFERENT:
            return Resolution(branch="agreement", k=k, option=a)
    for k in ks:
        a, b = pref_a[k], pref_b[k]
        if (a == INDIFFERENT) != (b == INDIFFERENT):
            option = b if a == INDIFFERENT else a
            return Resolution(branch="single-indifference", k=k, option=option)
    for k in ks:
        if pref_a[k] == INDIFFERENT and pref_b[k] == INDIFFERENT:
            option = rng.choice((OPTION_A, OPTION_B))
            return Resolution(branch="double-indifference", k=k, option=option)

    for k in ks[:-1]:
        if pref_a[k] == OPTION_B and pref_a[k + 1] == OPTION_A:
            prescriptions = (
                (k, OPTION_A),
                (k, OPTION_B),
                (k + 1, OPTION_A),
                (k + 1, OPTION_B),
            )
            chosen_k, chosen_option = rng.choice(prescriptions)
            return Resolution(
                branch="switch-point",
                k=chosen_k,
                option=chosen_option,
                i0=k,
                prescriptions=prescriptions,
            )
    raise NoSwitchPoint("no switch point")


def realize_division(
    parcel_map: ParcelMap,
    split: Split,
    option: str,
    agent_a: PartyAgent,
    agent_b: PartyAgent,
) -> Division:
    """Create the division for an option: each party divides its piece to
    maximize its own rating."""
    _require_no_predicate(parcel_map)
    if option not in (OPTION_A, OPTION_B):
        raise ValueError(f"unknown option {option!r}")
    divider1 = agent_a if option == OPTION_A else agent_b
    divider2 = agent_b if option == OPTION_A else agent_a
    n = parcel_map.n_districts
    _, parts1 = _optimal_piece(
        parcel_map,
        split.piece1_indices(parcel_map),
        split.k,
        divider1.rating,
        divider1.voting_model,
        "maximize",
    )
    _, parts2 = _optimal_piece(
        parcel_map,
        split.piece2_indices(parcel_map),
        n - split.k,
        divider2.rating,
        divider2.voting_model,
        "maximize",
    )
    return division_from_district_sets(parcel_map, sorted(parts1 + parts2, key=min))


def run_protocol(
    parcel_map: ParcelMap,
    sequence: SplitSequence,
    agent_a: PartyAgent,
    agent_b: PartyAgent,
    seed: int,
    label: str = "",
) -> Transcript:
    """Full single-sequence protocol run: preferences, resolution, realization."""
    violations = validate_map(parcel_map)
    if violations:
        raise ValidationFailure("map", violations)
    if not sequence.splits:
        raise InfeasibilityError("no splits exist")
    violations = sequence.validate(parcel_map)
    if violations:
        raise ValidationFailure("split sequence", violations)

    decl_a = declare_preferences(agent_a, parcel_map, sequence, opponent=agent_b)
    decl_b = declare_preferences(agent_b, parcel_map, sequence, opponent=agent_a)
    rng = random.Random(derive_seed(seed, "resolution"))
    resolution = resolve(sequence, decl_a, decl_b, rng)
    split = next(s for s in sequence.splits if s.k == resolution.k)
    division = realize_division(parcel_map, split, resolution.option, agent_a, agent_b)
    ratings = tuple(
        (agent.party, rate_division(parcel_map, division, agent.rating, agent.voting_model))
        for agent in (agent_a, agent_b)
    )
    return Transcript(
        seed=seed,
        label=label,
        sequence=sequence,
        declaration_a=decl_a,
        declaration_b=decl_b,
        resolution=resolution,
        division=division,
        ratings=ratings,
    )


# ---------------------------------------------------------------------------
# Ranking protocol and the augmented run
# ---------------------------------------------------------------------------

def _strict_ranks(
    parcel_map: ParcelMap, candidates: Sequence[Division], agent: PartyAgent
) -> list[int]:
    """Rank 1 = best.  Ties on rating break by canonical division order, then
    by candidate position, so the ranking is always strict."""
    keyed = []
    for idx, division in enumerate(candidates):
        rating = rate_division(parcel_map, division, agent.rating, agent.voting_model)
        keyed.append((-rating, division.canonical_vector(parcel_map), idx))
    order = sorted(range(len(candidates)), key=lambda i: keyed[i])
    ranks = [0] * len(candidates)
    for rank, idx in enumerate(order, start=1):
        ranks[idx] = rank
    return ranks


def ranking_protocol(
    parcel_map: ParcelMap,
    candidates: Sequence[Division],
    agent_a: PartyAgent,
    agent_b: PartyAgent,
    rng: random.Random,
) -> Division:
    """Pick the candidate whose worse rank across the two parties is best
    (maximin); a two-way tie (the most possible) is broken uniformly at random."""
    if not candidates:
        raise EngineError("no candidate divisions to rank")
    ranks_a = _strict_ranks(parcel_map, candidates, agent_a)
    ranks_b = _strict_ranks(parcel_map, candidates, agent_b)
    worse = [max(a, b) for a, b in zip(ranks_a, ranks_b)]
    best = min(worse)
    winners = [i for i, w in enumerate(worse) if w == best]
    chosen = winners[0] if len(winners) == 1 else rng.choice(winners)
    return candidates[chosen]


def run_augmented(
    parcel_map: ParcelMap,
    sequences: Sequence[SplitSequence],
    agent_a: PartyAgent,
    agent_b: PartyAgent,
    seed: int,
    labels: Optional[Sequence[str]] = None,
) -> tuple[tuple[Transcript, ...], Division]:
    """Run the protocol once per sequence (independent sub-seeded streams),
    then choose among the resulting divisions with the ranking protocol."""
    if not sequences:
        raise EngineError("at least one split sequence is required")
    if labels is None:
        labels = [f"sequence-{i}" for i in range(len(sequences))]
    transcripts = tuple(
        run_protocol(
            parcel_map,
            sequence,
            agent_a,
            agent_b,
            derive_seed(seed, f"sequence:{i}"),
            label=labels[i],
        )
        for i, sequence in enumerate(sequences)
    )
    rng = random.Random(derive_seed(seed, "ranking"))
    final = ranking_protocol(
        parcel_map, [t.division for t in transcripts], agent_a, agent_b, rng
    )
    return transcripts, final
