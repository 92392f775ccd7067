"""Convenience builders for the map shapes used in demos and tests."""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Mapping, Optional, Sequence, Union

from .model import FractionLike, Parcel, ParcelMap, as_fraction

_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def _grid_ids(cols: int, rows: int) -> list[str]:
    if cols * rows <= len(_LETTERS):
        return [_LETTERS[r * cols + c] for r in range(rows) for c in range(cols)]
    return [f"p{r:02d}{c:02d}" for r in range(rows) for c in range(cols)]


def grid_map(
    cols: int,
    rows: int,
    n_districts: int,
    shares: Union[None, FractionLike, Sequence[FractionLike], Mapping[str, FractionLike]] = None,
    population: int = 1,
) -> ParcelMap:
    """A cols x rows unit-cell grid with 4-neighbor adjacency.

    `shares` may be a single value for every parcel, a row-major sequence, or
    a mapping keyed by parcel id; default is an even 1/2 everywhere.
    """
    ids = _grid_ids(cols, rows)

    def share_for(pos: int, pid: str) -> Fraction:
        if shares is None:
            return Fraction(1, 2)
        if isinstance(shares, Mapping):
            return as_fraction(shares[pid])
        if isinstance(shares, (list, tuple)):
            return as_fraction(shares[pos])
        return as_fraction(shares)

    parcels = []
    for r in range(rows):
        for c in range(cols):
            pos = r * cols + c
            parcels.append(
                Parcel(
                    id=ids[pos],
                    population=population,
                    vote_share_a=share_for(pos, ids[pos]),
                    rect=(Fraction(c), Fraction(r), Fraction(1), Fraction(1)),
                )
            )
    adjacency = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                adjacency.append((ids[r * cols + c], ids[r * cols + c + 1]))
            if r + 1 < rows:
                adjacency.append((ids[r * cols + c], ids[(r + 1) * cols + c]))
    return ParcelMap(parcels, adjacency, n_districts)


def path_map(
    length: int,
    n_districts: int,
    shares: Union[None, FractionLike, Sequence[FractionLike]] = None,
) -> ParcelMap:
    """A 1 x length path."""
    return grid_map(length, 1, n_districts, shares)


def complete_map(
    n_parcels: int,
    n_districts: int,
    shares: Union[None, FractionLike, Sequence[FractionLike]] = None,
    population: int = 1,
) -> ParcelMap:
    """Every parcel adjacent to every other: a map with no geometric constraints."""
    ids = [f"p{i:02d}" for i in range(n_parcels)]

    def share_for(i: int) -> Fraction:
        if shares is None:
            return Fraction(1, 2)
        if isinstance(shares, (list, tuple)):
            return as_fraction(shares[i])
        return as_fraction(shares)

    parcels = [
        Parcel(id=ids[i], population=population, vote_share_a=share_for(i))
        for i in range(n_parcels)
    ]
    adjacency = list(combinations(ids, 2))
    return ParcelMap(parcels, adjacency, n_districts)


def minority_block_map(n_parcels: int, n_districts: int, minority_votes: int) -> ParcelMap:
    """Complete-adjacency map of single-voter parcels: the first `minority_votes`
    parcels vote wholly for party A (the minority), the rest wholly against."""
    shares = [Fraction(1) if i < minority_votes else Fraction(0) for i in range(n_parcels)]
    return complete_map(n_parcels, n_districts, shares)
