"""Deterministic renderings of divisions: ASCII grids and hand-written SVG.

The SVG is assembled from strings (not a plotting library) so output is
byte-identical across runs: one rect per parcel, one fill color per district,
and a hatch overlay on districts won by party A under the map's own shares.
"""

from __future__ import annotations

from fractions import Fraction

from .model import (
    Division,
    ParcelMap,
    ValidationFailure,
    VotingModel,
    WinRating,
    validate_division,
)

#: fill colors indexed by district id (cycled past 10 districts)
PALETTE = (
    "#aec7e8",
    "#ffbb78",
    "#98df8a",
    "#ff9896",
    "#c5b0d5",
    "#c49c94",
    "#f7b6d2",
    "#dbdb8d",
    "#9edae5",
    "#d9d9d9",
)

_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


def district_winners_a(parcel_map: ParcelMap, division: Division) -> tuple[bool, ...]:
    """Which districts party A wins under the map's own vote shares."""
    shares = VotingModel.outcome().share_vector(parcel_map)
    win = WinRating(party="A")
    return tuple(
        win.district_value(parcel_map, d, shares) == 1 for d in division.districts(parcel_map)
    )


def _unit_grid(parcel_map: ParcelMap):
    """Integer (col, row) per parcel if the geometry is a unit-cell grid, else None."""
    cells = {}
    for p in parcel_map.parcels:
        if p.rect is None:
            return None
        x, y, w, h = p.rect
        if w != 1 or h != 1 or x.denominator != 1 or y.denominator != 1:
            return None
        cells[p.id] = (int(x), int(y))
    return cells


def _bfs_order(parcel_map: ParcelMap) -> list[int]:
    seen: list[int] = []
    visited = set()
    for start in range(len(parcel_map.parcels)):
        if start in visited:
            continue
        queue = [start]
        visited.add(start)
        while queue:
            u = queue.pop(0)
            seen.append(u)
            for v in sorted(parcel_map.neighbors[u]):
                if v not in visited:
                    visited.add(v)
                    queue.append(v)
    return seen


def _layout_rects(parcel_map: ParcelMap) -> dict[str, tuple[Fraction, Fraction, Fraction, Fraction]]:
    """Parcel rectangles: the stored geometry, or a synthesized unit row."""
    if all(p.rect is not None for p in parcel_map.parcels):
        return {p.id: p.rect for p in parcel_map.parcels}
    one = Fraction(1)
    return {
        parcel_map.parcel_ids[idx]: (Fraction(pos), Fraction(0), one, one)
        for pos, idx in enumerate(_bfs_order(parcel_map))
    }


def _num(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else repr(float(value))


def render_division(parcel_map: ParcelMap, division: Division, fmt: str) -> str:
    """Render a division as 'ascii' or 'svg' text; byte-identical across runs."""
    violations = validate_division(parcel_map, division)
    if violations:
        raise ValidationFailure("division", violations)
    if fmt == "ascii":
        return _render_ascii(parcel_map, division)
    if fmt == "svg":
        return _render_svg(parcel_map, division)
    raise ValueError(f"unknown format {fmt!r} (expected 'ascii' or 'svg')")


def _render_ascii(parcel_map: ParcelMap, division: Division) -> str:
    cells = _unit_grid(parcel_map)
    if cells is None:
        # no grid geometry: list parcels in adjacency (breadth-first) order
        lines = [
            f"{parcel_map.parcel_ids[i]} {division.assignment[parcel_map.parcel_ids[i]]}"
            for i in _bfs_order(parcel_map)
        ]
        return "\n".join(lines)
    xs = [c[0] for c in cells.values()]
    ys = [c[1] for c in cells.values()]
    grid = [["." for _ in range(min(xs), max(xs) + 1)] for _ in range(min(ys), max(ys) + 1)]
    for pid, (x, y) in cells.items():
        grid[y - min(ys)][x - min(xs)] = _DIGITS[division.assignment[pid] % len(_DIGITS)]
    return "\n".join("".join(row) for row in grid)


def _render_svg(parcel_map: ParcelMap, division: Division) -> str:
    rects = _layout_rects(parcel_map)
    scale = 40
    min_x = min(r[0] for r in rects.values())
    min_y = min(r[1] for r in rects.values())
    max_x = max(r[0] + r[2] for r in rects.values())
    max_y = max(r[1] + r[3] for r in rects.values())
    width = float((max_x - min_x) * scale)
    height = float((max_y - min_y) * scale)

    won_a = district_winners_a(parcel_map, division)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}">',
        "<defs>",
        '<pattern id="won-a" width="6" height="6" patternUnits="userSpaceOnUse" '
        'patternTransform="rotate(45)">'
        '<line x1="0" y1="0" x2="0" y2="6" stroke="#444444" stroke-width="1.5"/>'
        "</pattern>",
        "</defs>",
    ]
    for pid in parcel_map.parcel_ids:
        x, y, w, h = rects[pid]
        label = division.assignment[pid]
        px = _num((x - min_x) * scale)
        py = _num((y - min_y) * scale)
        pw = _num(w * scale)
        ph = _num(h * scale)
        fill = PALETTE[label % len(PALETTE)]
        parts.append(
            f'<rect x="{px}" y="{py}" width="{pw}" height="{ph}" '
            f'fill="{fill}" stroke="#222222" stroke-width="1"/>'
        )
        if won_a[label]:
            parts.append(
                f'<rect x="{px}" y="{py}" width="{pw}" height="{ph}" '
                f'fill="url(#won-a)" stroke="none"/>'
            )
    for pid in parcel_map.parcel_ids:
        x, y, w, h = rects[pid]
        cx = _num((x - min_x + w / 2) * scale)
        cy = _num((y - min_y + h / 2) * scale)
        parts.append(
            f'<text x="{cx}" y="{cy}" font-size="10" font-family="monospace" '
            f'text-anchor="middle" dominant-baseline="central">{pid}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
