import hashlib
import random
from fractions import Fraction
from pathlib import Path

import pytest

from fairdistricts.grids import complete_map, grid_map, minority_block_map, path_map
from fairdistricts.model import Parcel, ParcelMap, TableRating, VotingModel

ROOT = Path(__file__).resolve().parent.parent
MAPS = ROOT / "maps"


def seeded_shares(count: int, seed: int, denominator: int = 10) -> list[Fraction]:
    rng = random.Random(seed)
    return [Fraction(rng.randrange(0, denominator + 1), denominator) for _ in range(count)]


def ring_map(n_parcels: int, n_districts: int, chords=(), shares=None) -> ParcelMap:
    ids = [f"r{i:02d}" for i in range(n_parcels)]
    share_list = shares or [Fraction(1, 2)] * n_parcels
    parcels = [
        Parcel(id=ids[i], population=1, vote_share_a=share_list[i]) for i in range(n_parcels)
    ]
    adjacency = [(ids[i], ids[(i + 1) % n_parcels]) for i in range(n_parcels)]
    adjacency += [(ids[a], ids[b]) for a, b in chords]
    return ParcelMap(parcels, adjacency, n_districts)


def star_map(leaves: int, n_districts: int) -> ParcelMap:
    ids = ["hub"] + [f"leaf{i}" for i in range(leaves)]
    parcels = [Parcel(id=pid, population=1, vote_share_a=Fraction(1, 2)) for pid in ids]
    adjacency = [("hub", leaf) for leaf in ids[1:]]
    return ParcelMap(parcels, adjacency, n_districts)


def fixture_maps() -> dict[str, ParcelMap]:
    """Small maps (<= 12 parcels) the enumerator is oracle-checked on."""
    return {
        "grid22": grid_map(2, 2, 2, shares=seeded_shares(4, 21)),
        "path6": path_map(6, 3, shares=seeded_shares(6, 22)),
        "grid33": grid_map(3, 3, 3, shares=seeded_shares(9, 23)),
        "grid26": grid_map(2, 6, 3, shares=seeded_shares(12, 24)),
        "grid34": grid_map(3, 4, 4, shares=seeded_shares(12, 25)),
        "grid52": grid_map(5, 2, 5, shares=seeded_shares(10, 26)),
        "k6": complete_map(6, 2, shares=[1, 1, 0, 0, 1, 0]),
        "k10": minority_block_map(10, 2, 3),
        "ring12": ring_map(12, 4, chords=((0, 6), (3, 9)), shares=seeded_shares(12, 27)),
    }


def prf_table_rating(salt: str) -> TableRating:
    """A deterministic pseudo-random additive rating: each district's value is a
    hash of its parcel ids.  Adversarially non-structured, so it exercises the
    protocol guarantees for arbitrary additive ratings."""

    def fn(parcel_map, district, shares):
        key = salt + "|" + ",".join(sorted(parcel_map.parcel_ids[i] for i in district))
        digest = hashlib.sha256(key.encode()).digest()
        return Fraction(int.from_bytes(digest[:4], "big"), 2**32)

    return TableRating(fn, label=f"prf:{salt}")


def random_voting_model(parcel_map: ParcelMap, seed: int) -> VotingModel:
    rng = random.Random(seed)
    return VotingModel.from_mapping(
        {pid: Fraction(rng.randrange(0, 11), 10) for pid in parcel_map.parcel_ids}
    )


@pytest.fixture(scope="session")
def desk_map_path() -> Path:
    return MAPS / "desk25.json"


@pytest.fixture(scope="session")
def desk_experiment_path() -> Path:
    return MAPS / "desk25_experiment.json"
