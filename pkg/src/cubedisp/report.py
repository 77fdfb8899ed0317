"""Summary tables, distribution exports and SVG figures for group barcodes."""

from __future__ import annotations

import csv
import statistics
from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

from .reduction import Barcode, PersistenceFeature
from .trace import DEFAULT_YEAR0, locate

DIM_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c")
DIM_LABELS = ("H0", "H1", "H2")
STAT_MEASURES = ("mean", "median", "std", "min", "max")
QUANTITIES = ("birth", "death", "persistence")


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def feature_counts(barcodes: Mapping[str, Barcode], threshold: int = 2) -> list[dict]:
    """Rows ``{group, dim, total, important}``; important means persistence > ``threshold``."""
    rows = []
    for group, bc in barcodes.items():
        for dim in range(3):
            feats = bc.by_dim(dim)
            rows.append(
                {
                    "group": group,
                    "dim": dim,
                    "total": len(feats),
                    "important": sum(f.persistence > threshold for f in feats),
                }
            )
    return rows


def write_feature_counts(rows: Sequence[dict], path: str | Path) -> None:
    groups = list(dict.fromkeys(r["group"] for r in rows))
    table = {(r["group"], r["dim"]): r for r in rows}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["measure", "dim"] + groups)
        for measure in ("total", "important"):
            for dim in range(3):
                w.writerow([measure, f"H{dim}"] + [table[(g, dim)][measure] for g in groups])


def descriptive_stats(barcode: Barcode, ddof: int = 1) -> list[dict]:
    """Mean, median, std, min and max of birth, death and persistence per dimension.

    Essential classes enter with death 100.  ``ddof=1`` is the sample
    standard deviation.  With fewer than ``ddof + 1`` features the std is
    emitted as 0 and flagged.
    """
    rows = []
    for quantity in QUANTITIES:
        for dim in range(3):
            feats = barcode.by_dim(dim)
            vals = [_quantity(f, quantity) for f in feats]
            n = len(vals)
            for measure in STAT_MEASURES:
                flag = ""
                if n == 0:
                    value, flag = 0.0, "empty"
                elif measure == "mean":
                    value = statistics.fmean(vals)
                elif measure == "median":
                    value = float(statistics.median(vals))
                elif measure == "min":
                    value = float(min(vals))
                elif measure == "max":
                    value = float(max(vals))
                elif n <= ddof:
                    value, flag = 0.0, "undefined"
                else:
                    value = statistics.stdev(vals) if ddof == 1 else statistics.pstdev(vals)
                rows.append(
                    {"quantity": quantity, "dim": dim, "measure": measure, "value": value, "n": n, "flag": flag}
                )
    return rows


def _quantity(f: PersistenceFeature, quantity: str) -> int:
    if quantity == "birth":
        return f.birth
    if quantity == "death":
        return f.reported_death
    return f.persistence


def write_stats(stats: Mapping[str, list[dict]], path: str | Path, ddof: int = 1) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "quantity", "dim", "measure", "value", "n", "flag", "std_convention"])
        convention = "sample" if ddof == 1 else "population"
        for group, rows in stats.items():
            for r in rows:
                w.writerow(
                    [group, r["quantity"], f"H{r['dim']}", r["measure"], _fmt(r["value"]), r["n"], r["flag"], convention]
                )


def top_k(barcode: Barcode, raster=None, k: int = 10, year0: int = DEFAULT_YEAR0) -> list[dict]:
    """The ``k`` most persistent features per dimension with their locations."""
    rows = []
    for dim in range(3):
        feats = sorted(barcode.by_dim(dim), key=lambda f: (-f.persistence, f.birth, f.id))[:k]
        for f in feats:
            row = {
                "dim": dim,
                "birth": f.birth,
                "death": f.reported_death,
                "persistence": f.persistence,
                "year_of_birth": None,
                "year_of_death": None,
                "neighbourhood_of_birth": None,
                "neighbourhood_of_death": None,
            }
            if raster is not None:
                yb, yd, nb, nd = locate(f, raster, year0)
                row.update(
                    year_of_birth=yb, year_of_death=yd, neighbourhood_of_birth=nb, neighbourhood_of_death=nd
                )
            rows.append(row)
    return rows


TOP_K_HEADER = [
    "dim", "birth", "death", "persistence",
    "year_of_birth", "year_of_death", "neighbourhood_of_birth", "neighbourhood_of_death",
]


def write_top_k(rows: Sequence[dict], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TOP_K_HEADER)
        for r in rows:
            w.writerow(["" if r[h] is None else r[h] for h in TOP_K_HEADER])


def distributions(barcodes: Mapping[str, Barcode], path: str | Path) -> int:
    """Long-format ``group,dim,birth,death,persistence`` export; returns the row count."""
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "dim", "birth", "death", "persistence"])
        for group, bc in barcodes.items():
            for f in bc.features:
                w.writerow([group, f.dim, f.birth, f.reported_death, f.persistence])
                n += 1
    return n


# ------------------------------------------------------------------- SVG

WIDTH, HEIGHT = 640, 480
MARGIN = 50


class _Svg:
    def __init__(self, width: int, height: int, title: str):
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
            f"<title>{escape(title)}</title>",
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        ]

    def add(self, s: str) -> None:
        self.parts.append(s)

    def line(self, x1, y1, x2, y2, stroke="black", width=1.0, extra=""):
        self.add(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{stroke}" stroke-width="{width:g}"{extra}/>'
        )

    def text(self, x, y, s, anchor="middle", size=11):
        self.add(
            f'<text x="{x:.2f}" y="{y:.2f}" font-family="sans-serif" font-size="{size}" '
            f'text-anchor="{anchor}">{escape(s)}</text>'
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _x_axis(svg: _Svg, x_of, y: float, label: str):
    svg.line(MARGIN, y, WIDTH - MARGIN, y)
    for v in range(0, 101, 20):
        svg.line(x_of(v), y, x_of(v), y + 4)
        svg.text(x_of(v), y + 16, str(v))
    svg.text(WIDTH / 2, y + 32, label)


def render_barcode(barcode: Barcode, path: str | Path, title: str = "barcode") -> None:
    """Horizontal bars grouped by dimension; essential bars end in an open arrow at 100."""
    feats = sorted(barcode.features, key=lambda f: (f.dim, f.birth, f.reported_death, f.id))
    svg = _Svg(WIDTH, HEIGHT, title)
    top, bottom = MARGIN, HEIGHT - MARGIN
    x_of = lambda v: MARGIN + (WIDTH - 2 * MARGIN) * v / 100.0  # noqa: E731
    _x_axis(svg, x_of, bottom, "filtration value")
    gap = 6.0 if feats else 0.0
    n_dims = len({f.dim for f in feats})
    step = (bottom - top - gap * max(n_dims - 1, 0)) / max(len(feats), 1)
    y = top
    prev_dim = None
    for f in feats:
        if prev_dim is not None and f.dim != prev_dim:
            y += gap
        prev_dim = f.dim
        color = DIM_COLORS[f.dim]
        h = max(step * 0.8, 0.5)
        svg.add(
            f'<rect x="{x_of(f.birth):.2f}" y="{y:.2f}" width="{x_of(f.reported_death) - x_of(f.birth):.2f}" '
            f'height="{h:.2f}" fill="{color}" class="bar H{f.dim}"/>'
        )
        if f.essential:
            xe, yc = x_of(100), y + h / 2
            svg.add(
                f'<polyline points="{xe - 4:.2f},{yc - 4:.2f} {xe + 2:.2f},{yc:.2f} {xe - 4:.2f},{yc + 4:.2f}" '
                f'fill="none" stroke="{color}" class="open-end"/>'
            )
        y += step
    for dim in sorted({f.dim for f in feats}):
        svg.text(WIDTH - MARGIN + 4, top + 12 * (dim + 1), DIM_LABELS[dim], anchor="start")
    Path(path).write_text(svg.render())


def render_diagram(barcode: Barcode, path: str | Path, title: str = "persistence diagram") -> None:
    """Birth-death scatter with the diagonal; essential points drawn at death 100 as triangles."""
    svg = _Svg(WIDTH, HEIGHT, title)
    side = min(WIDTH, HEIGHT) - 2 * MARGIN
    x_of = lambda v: MARGIN + side * v / 100.0  # noqa: E731
    y_of = lambda v: MARGIN + side * (1 - v / 100.0)  # noqa: E731
    bottom = MARGIN + side
    svg.line(MARGIN, bottom, MARGIN + side, bottom)
    svg.line(MARGIN, MARGIN, MARGIN, bottom)
    for v in range(0, 101, 20):
        svg.text(x_of(v), bottom + 16, str(v))
        svg.text(MARGIN - 6, y_of(v) + 4, str(v), anchor="end")
    svg.text(MARGIN + side / 2, bottom + 32, "birth")
    svg.text(MARGIN - 34, MARGIN + side / 2, "death")
    svg.line(x_of(0), y_of(0), x_of(100), y_of(100), stroke="#888888", extra=' class="diagonal"')
    for f in sorted(barcode.features, key=lambda f: (f.dim, f.birth, f.reported_death, f.id)):
        color = DIM_COLORS[f.dim]
        cx, cy = x_of(f.birth), y_of(f.reported_death)
        if f.essential:
            svg.add(
                f'<polygon points="{cx:.2f},{cy - 4:.2f} {cx - 4:.2f},{cy + 3:.2f} {cx + 4:.2f},{cy + 3:.2f}" '
                f'fill="{color}" class="point essential H{f.dim}"/>'
            )
        else:
            svg.add(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="2.5" fill="{color}" class="point H{f.dim}"/>')
    for dim in sorted({f.dim for f in barcode.features}):
        svg.text(MARGIN + side + 10, MARGIN + 14 * (dim + 1), DIM_LABELS[dim], anchor="start")
    Path(path).write_text(svg.render())
