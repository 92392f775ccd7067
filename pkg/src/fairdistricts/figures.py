"""Report figures: matplotlib renderings of divisions, written as PNG files.

Figures are built on bare Figure objects (no pyplot, no global state), which
keeps PNG bytes reproducible run to run in a fixed environment.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Sequence, Union

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from matplotlib.patches import Rectangle

from .model import Division, ParcelMap
from .rendering import PALETTE, _layout_rects, district_winners_a


def _draw_division(ax, parcel_map: ParcelMap, division: Division, title: str) -> None:
    rects = _layout_rects(parcel_map)
    won_a = district_winners_a(parcel_map, division)
    for pid in parcel_map.parcel_ids:
        x, y, w, h = (float(v) for v in rects[pid])
        label = division.assignment[pid]
        ax.add_patch(
            Rectangle(
                (x, y),
                w,
                h,
                facecolor=PALETTE[label % len(PALETTE)],
                edgecolor="#222222",
                linewidth=0.8,
                hatch="///" if won_a[label] else None,
            )
        )
        ax.text(x + w / 2, y + h / 2, pid, ha="center", va="center", fontsize=7)
    min_x = min(float(r[0]) for r in rects.values())
    min_y = min(float(r[1]) for r in rects.values())
    max_x = max(float(r[0] + r[2]) for r in rects.values())
    max_y = max(float(r[1] + r[3]) for r in rects.values())
    ax.set_xlim(min_x, max_x)
    ax.set_ylim(max_y, min_y)  # y grows downward, like the map files
    ax.set_aspect("equal")
    ax.set_axis_off()
    ax.set_title(title, fontsize=9)


def save_division_figure(
    parcel_map: ParcelMap,
    entries: Sequence[tuple[Division, str]],
    path: Union[str, Path],
) -> None:
    """One subplot per (division, title); hatched districts are won by party A."""
    if not entries:
        raise ValueError("nothing to draw")
    ncols = min(len(entries), 3)
    nrows = (len(entries) + ncols - 1) // ncols
    fig = Figure(figsize=(3.2 * ncols, 3.2 * nrows), dpi=150)
    FigureCanvasAgg(fig)
    for pos, (division, title) in enumerate(entries, start=1):
        ax = fig.add_subplot(nrows, ncols, pos)
        _draw_division(ax, parcel_map, division, title)
    fig.savefig(Path(path), format="png")
