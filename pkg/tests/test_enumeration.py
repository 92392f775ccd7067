from fractions import Fraction

import pytest

from fairdistricts.enumeration import (
    InfeasibleSplit,
    NoViableDivisions,
    count_divisions,
    enumerate_divisions,
    enumerate_divisions_refining,
    extremal_rating,
    geometric_target,
    ksplit_geometric_target,
    optimal_piece_division,
)
from fairdistricts.grids import complete_map, grid_map, minority_block_map, path_map
from fairdistricts.model import (
    Division,
    EngineError,
    ParcelMap,
    Split,
    TableRating,
    ValidationFailure,
    VotingModel,
    WinRating,
    rate_division,
    validate_division,
)
from conftest import fixture_maps, prf_table_rating, seeded_shares, star_map
from oracles import naive_divisions

VOUT = VotingModel.outcome()


class TestEnumerateDivisions:
    def test_2x2_by_hand(self):
        g = grid_map(2, 2, 2)
        a, b, c, d = g.parcel_ids  # A B / C D
        got = set(enumerate_divisions(g))
        expected = {
            Division({a: 0, b: 0, c: 1, d: 1}),  # horizontal halves
            Division({a: 0, b: 1, c: 0, d: 1}),  # vertical halves
        }
        assert got == expected  # the two diagonal pairings are disconnected

    def test_path_forces_consecutive_blocks(self):
        g = path_map(6, 3)
        divisions = list(enumerate_divisions(g))
        assert len(divisions) == 1
        assert divisions[0].vector(g) == (0, 0, 1, 1, 2, 2)

    def test_3x3_count_is_10(self):
        g = grid_map(3, 3, 3)
        assert len(naive_divisions(g)) == 10  # confirmed by the naive oracle
        assert count_divisions(g) == 10

    @pytest.mark.parametrize("name", sorted(fixture_maps()))
    def test_matches_naive_oracle(self, name):
        parcel_map = fixture_maps()[name]
        assert list(enumerate_divisions(parcel_map)) == naive_divisions(parcel_map)

    def test_canonical_order_and_labels(self):
        g = grid_map(3, 3, 3)
        vectors = [d.canonical_vector(g) for d in enumerate_divisions(g)]
        assert vectors == sorted(vectors)
        assert len(set(vectors)) == len(vectors)
        for d in enumerate_divisions(g):
            assert d.vector(g) == d.canonical_vector(g)
            assert d.vector(g)[0] == 0

    def test_deterministic_streams(self):
        g = grid_map(3, 4, 4)
        assert list(enumerate_divisions(g)) == list(enumerate_divisions(g))

    def test_zero_divisions_is_empty_not_error(self):
        hub = star_map(5, 3)  # leaves only touch the hub: no 2-parcel tiling
        assert list(enumerate_divisions(hub)) == []
        assert naive_divisions(hub) == []

    def test_every_division_is_valid(self):
        g = grid_map(2, 6, 3)
        for d in enumerate_divisions(g):
            assert validate_division(g, d) == []

    def test_predicate_filters_stream(self):
        g = grid_map(2, 2, 2)
        a = g.parcel_ids[0]
        constrained = ParcelMap(
            g.parcels,
            g.adjacency,
            2,
            division_predicate=lambda m, d: d.assignment[a] == d.assignment[m.parcel_ids[1]],
        )
        kept = list(enumerate_divisions(constrained))
        assert len(kept) == 1  # only the horizontal halving keeps A with B
        assert naive_divisions(constrained) == kept

    def test_invalid_map_rejected(self):
        bad = grid_map(3, 1, 2)
        with pytest.raises(ValidationFailure):
            list(enumerate_divisions(bad))


class TestRefining:
    def test_path_1split(self):
        g = path_map(6, 3)
        left_pair = Split(1, frozenset(g.parcel_ids[:2]))
        assert len(list(enumerate_divisions_refining(g, left_pair))) == 1

    def test_2x2_left_column(self):
        g = grid_map(2, 2, 2)
        a, b, c, d = g.parcel_ids
        left = Split(1, frozenset({a, c}))
        refining = list(enumerate_divisions_refining(g, left))
        assert refining == [Division({a: 0, c: 0, b: 1, d: 1})]

    @pytest.mark.parametrize("name", ["grid33", "grid26", "k10"])
    def test_refining_equals_filtered_full_set(self, name):
        parcel_map = fixture_maps()[name]
        split = _first_split(parcel_map)
        piece1 = split.piece1
        refining = set(enumerate_divisions_refining(parcel_map, split))
        expected = set()
        for d in enumerate_divisions(parcel_map):
            sides = {
                frozenset(pid in piece1 for pid in parcel_map.parcel_ids if d.assignment[pid] == label)
                for label in range(parcel_map.n_districts)
            }
            if all(len(side) == 1 for side in sides):
                expected.add(d)
        assert refining == expected
        for d in refining:
            assert validate_division(parcel_map, d) == []

    def test_count_decomposes_as_product(self):
        g = grid_map(3, 3, 3)
        split = _first_split(g)
        from fairdistricts.enumeration import _piece_division_tuples

        left = len(_piece_division_tuples(g, split.piece1_indices(g), split.k))
        right = len(_piece_division_tuples(g, split.piece2_indices(g), g.n_districts - split.k))
        assert len(list(enumerate_divisions_refining(g, split))) == left * right

    def test_refining_respects_predicate(self):
        g = grid_map(2, 2, 2)
        a, b, c, d = g.parcel_ids
        constrained = ParcelMap(
            g.parcels, g.adjacency, 2, division_predicate=lambda m, dv: False
        )
        left = Split(1, frozenset({a, c}))
        assert list(enumerate_divisions_refining(constrained, left)) == []


def _first_split(parcel_map: ParcelMap) -> Split:
    """A deterministic valid 1-split grown greedily from the first parcel."""
    from fairdistricts.protocol import RandomGrowth, generate_split_sequence

    return generate_split_sequence(parcel_map, RandomGrowth(), seed=11).splits[0]


class TestExtremalRating:
    def test_constant_rater(self):
        g = grid_map(3, 3, 3)
        const = TableRating(lambda m, d, s: 1, label="const")
        value, witness = extremal_rating(g, enumerate_divisions(g), const, VOUT, "maximize")
        assert value == 3
        assert witness == next(iter(enumerate_divisions(g)))  # first in canonical order

    def test_singleton_stream(self):
        g = path_map(6, 3, shares=seeded_shares(6, 3))
        divisions = list(enumerate_divisions(g))
        hi, w_hi = extremal_rating(g, divisions, WinRating("A"), VOUT, "maximize")
        lo, w_lo = extremal_rating(g, divisions, WinRating("A"), VOUT, "minimize")
        assert hi == lo and w_hi == w_lo == divisions[0]

    def test_empty_stream_errors(self):
        g = grid_map(2, 2, 2)
        with pytest.raises(NoViableDivisions, match="no viable divisions"):
            extremal_rating(g, [], WinRating("A"), VOUT, "maximize")

    def test_desk_map_extremes(self, desk_map_path):
        from fairdistricts.model import load_map

        desk = load_map(desk_map_path)
        divisions = list(enumerate_divisions(desk))
        hi, _ = extremal_rating(desk, divisions, WinRating("A"), VOUT, "maximize")
        lo, _ = extremal_rating(desk, divisions, WinRating("A"), VOUT, "minimize")
        assert (hi, lo) == (4, 1)


class TestGeometricTarget:
    def test_homogeneous_minority_degenerate(self):
        g = grid_map(3, 3, 3, shares=Fraction(2, 5))
        report = geometric_target(g, WinRating("A"), VOUT)
        assert (report.best, report.worst, report.target) == (0, 0, 0)

    def test_desk_absolute_target(self, desk_map_path):
        from fairdistricts.model import load_map

        desk = load_map(desk_map_path)
        for party in "AB":
            report = geometric_target(desk, WinRating(party), VOUT)
            assert (report.best, report.worst) == (4, 1)
            assert report.target == Fraction(5, 2)

    def test_target_sandwich_and_witnesses(self):
        for name, parcel_map in fixture_maps().items():
            if not list(enumerate_divisions(parcel_map)):
                continue
            report = geometric_target(parcel_map, WinRating("A"), VOUT)
            assert report.worst <= report.target <= report.best
            assert report.target == Fraction(report.best + report.worst, 2)
            assert rate_division(parcel_map, report.witness_best, WinRating("A"), VOUT) == report.best
            assert rate_division(parcel_map, report.witness_worst, WinRating("A"), VOUT) == report.worst

    def test_no_viable_divisions_errors(self):
        with pytest.raises(NoViableDivisions):
            geometric_target(star_map(5, 3), WinRating("A"), VOUT)

    def test_class_dp_agrees_with_enumeration(self):
        # complete maps take the compressed path in geometric_target; check it
        # against the literal stream
        for n, n_districts, x_v in ((6, 2, 2), (8, 2, 3), (10, 2, 3), (12, 3, 5)):
            compressed = minority_block_map(n, n_districts, x_v)
            report = geometric_target(compressed, WinRating("A"), VOUT)
            hi, _ = extremal_rating(
                compressed, enumerate_divisions(compressed), WinRating("A"), VOUT, "maximize"
            )
            lo, _ = extremal_rating(
                compressed, enumerate_divisions(compressed), WinRating("A"), VOUT, "minimize"
            )
            assert (report.best, report.worst) == (hi, lo)
            assert validate_division(compressed, report.witness_best) == []
            assert validate_division(compressed, report.witness_worst) == []

    def test_free_case_target_midpoint(self):
        # no geometric constraints: target = (best + 0)/2 with the best computed
        # by the engine itself, cross-checked by enumeration above
        m = minority_block_map(10, 2, 3)
        report = geometric_target(m, WinRating("A"), VOUT)
        assert report.worst == 0
        assert report.target == Fraction(report.best, 2)


class TestKsplitTarget:
    def test_singleton_refining_set(self):
        g = path_map(6, 3, shares=seeded_shares(6, 9))
        split = Split(1, frozenset(g.parcel_ids[:2]))
        report = ksplit_geometric_target(g, split, WinRating("A"), VOUT)
        assert report.best == report.worst == report.target

    def test_matches_refining_stream(self):
        for name in ("grid33", "grid26", "grid34", "k10"):
            parcel_map = fixture_maps()[name]
            split = _first_split(parcel_map)
            report = ksplit_geometric_target(parcel_map, split, WinRating("A"), VOUT)
            hi, _ = extremal_rating(
                parcel_map,
                enumerate_divisions_refining(parcel_map, split),
                WinRating("A"),
                VOUT,
                "maximize",
            )
            lo, _ = extremal_rating(
                parcel_map,
                enumerate_divisions_refining(parcel_map, split),
                WinRating("A"),
                VOUT,
                "minimize",
            )
            assert (report.best, report.worst) == (hi, lo)

    def test_matches_refining_stream_with_table_rating(self):
        parcel_map = fixture_maps()["grid26"]
        split = _first_split(parcel_map)
        rating = prf_table_rating("ksplit")
        report = ksplit_geometric_target(parcel_map, split, rating, VOUT)
        hi, _ = extremal_rating(
            parcel_map, enumerate_divisions_refining(parcel_map, split), rating, VOUT, "maximize"
        )
        lo, _ = extremal_rating(
            parcel_map, enumerate_divisions_refining(parcel_map, split), rating, VOUT, "minimize"
        )
        assert (report.best, report.worst) == (hi, lo)

    def test_infeasible_split(self):
        # valid split (both pieces connected) whose second piece, a 3-leaf star,
        # cannot be tiled into connected pairs
        from fairdistricts.model import Parcel

        ids = ["a", "b", "hub", "x", "y", "z"]
        parcels = [Parcel(pid, 1, Fraction(1, 2)) for pid in ids]
        edges = [("a", "b"), ("b", "hub"), ("hub", "x"), ("hub", "y"), ("hub", "z")]
        spider = ParcelMap(parcels, edges, 3)
        split = Split(1, frozenset({"a", "b"}))
        from fairdistricts.model import validate_split

        assert validate_split(spider, split) == []
        with pytest.raises(InfeasibleSplit, match="infeasible split"):
            ksplit_geometric_target(spider, split, WinRating("A"), VOUT)

    def test_invalid_split_rejected(self):
        g = grid_map(3, 3, 3)
        with pytest.raises(ValidationFailure):
            ksplit_geometric_target(g, Split(1, frozenset({"A"})), WinRating("A"), VOUT)


class TestOptimalPieceDivision:
    def test_whole_map_agrees_with_extremal(self):
        g = grid_map(3, 3, 3, shares=seeded_shares(9, 13))
        value, parts = optimal_piece_division(
            g, g.parcel_ids, 3, WinRating("A"), VOUT, "maximize"
        )
        expected, witness = extremal_rating(
            g, enumerate_divisions(g), WinRating("A"), VOUT, "maximize"
        )
        assert value == expected
        assert set(parts) == {
            frozenset(g.parcel_ids[i] for i in d) for d in witness.districts(g)
        }

    def test_single_district_piece_is_forced(self):
        g = grid_map(3, 3, 3, shares=seeded_shares(9, 14))
        piece = ("A", "D", "G")
        value, parts = optimal_piece_division(g, piece, 1, WinRating("A"), VOUT, "maximize")
        assert parts == (frozenset(piece),)
        vec = VOUT.share_vector(g)
        assert value == WinRating("A").district_value(g, frozenset(g.index[p] for p in piece), vec)

    def test_optimum_verified_by_enumeration(self):
        from fairdistricts.enumeration import _piece_division_tuples

        g = grid_map(2, 6, 3, shares=seeded_shares(12, 15))
        piece1 = {"A", "B", "C", "D"}
        piece2 = frozenset(g.parcel_ids) - piece1
        value, _ = optimal_piece_division(g, piece2, 2, WinRating("A"), VOUT, "maximize")
        vec = VOUT.share_vector(g)
        brute = max(
            sum(WinRating("A").district_value(g, d, vec) for d in parts)
            for parts in _piece_division_tuples(g, frozenset(g.index[p] for p in piece2), 2)
        )
        assert value == brute

    def test_infeasible_piece(self):
        g = grid_map(3, 3, 3)
        with pytest.raises(EngineError, match="infeasible piece"):
            optimal_piece_division(g, ("A", "B"), 1, WinRating("A"), VOUT, "maximize")

    def test_disconnected_piece(self):
        g = grid_map(3, 3, 3)
        with pytest.raises(EngineError, match="not connected"):
            optimal_piece_division(g, ("A", "C", "G"), 1, WinRating("A"), VOUT, "maximize")

    def test_predicate_only_supported_for_whole_map(self):
        g = grid_map(2, 2, 2)
        constrained = ParcelMap(g.parcels, g.adjacency, 2, division_predicate=lambda m, d: True)
        value, _ = optimal_piece_division(
            constrained, constrained.parcel_ids, 2, WinRating("A"), VOUT, "maximize"
        )
        assert value in (0, 1, 2)
        with pytest.raises(EngineError, match="predicate"):
            optimal_piece_division(
                constrained, constrained.parcel_ids[:2], 1, WinRating("A"), VOUT, "maximize"
            )
