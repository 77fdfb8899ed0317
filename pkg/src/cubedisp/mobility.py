"""Origin-destination ingestion, group shares and rasterization.

Movers from each origin neighbourhood are split into four groups: same
neighbourhood (``stay``), another neighbourhood of the city (``city``),
another town of the region (``cmadrid``) and anywhere else (``outside``).

OD table schema (one delimited file per year, ``,`` ``;`` or tab)::

    year,origin,<destination>,<destination>,...

Destination headers that parse as integers are neighbourhood codes of the
city; any other header is routed through the destination mapping
(``label = stay|city|cmadrid|outside|ignore``, ``* = ...`` as fallback).
"""

from __future__ import annotations

import configparser
import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .grid import ScalarVolume

GROUPS = ("stay", "city", "cmadrid", "outside")
CODE_PROPERTIES = ("code", "COD_BAR", "CODBAR", "codbarrio", "COD_BARRIO")

# Administrative corrections for the 2017 redistricting of Vicalvaro and
# Villa de Vallecas.
VICALVARO = (191, 192, 193, 194)
VICALVARO_OLD = (191, 192)
VALLECAS_SOURCE, VALLECAS_NEW = 181, 183
REDISTRICT_YEAR = 2017


# --------------------------------------------------------------- geometry

Ring = np.ndarray  # (n, 2) closed coordinate ring


@dataclass
class Neighbourhood:
    code: int
    polygons: list[list[Ring]]  # polygon = [exterior, *holes]

    def bounds(self) -> tuple[float, float, float, float]:
        pts = np.concatenate([ring for poly in self.polygons for ring in poly])
        return float(pts[:, 0].min()), float(pts[:, 1].min()), float(pts[:, 0].max()), float(pts[:, 1].max())


def _ring(coords, where: str) -> Ring:
    arr = np.asarray(coords, dtype=float)
    if arr.ndim != 2 or arr.shape[1] < 2 or arr.shape[0] < 4:
        raise ValidationError(f"{where}: ring needs at least 4 positions")
    arr = arr[:, :2]
    if not np.array_equal(arr[0], arr[-1]):
        raise ValidationError(f"{where}: ring is not closed")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{where}: ring has non-finite coordinates")
    return arr


def load_geometry(path: str | Path, code_property: str | None = None) -> dict[int, Neighbourhood]:
    """Neighbourhood polygons from a GeoJSON FeatureCollection, keyed by code."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: cannot read geometry ({exc})") from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise ValidationError(f"{path}: expected a GeoJSON FeatureCollection")
    features = doc.get("features") or []
    if not features:
        raise ValidationError(f"{path}: feature collection is empty")
    out: dict[int, Neighbourhood] = {}
    for i, feat in enumerate(features):
        where = f"{path} feature #{i}"
        props = feat.get("properties") or {}
        keys = (code_property,) if code_property else CODE_PROPERTIES
        raw = next((props[k] for k in keys if k in props), None)
        if raw is None:
            raise ValidationError(f"{where}: no neighbourhood code property (tried {', '.join(keys)})")
        try:
            code = int(str(raw).strip())
        except ValueError:
            raise ValidationError(f"{where}: neighbourhood code {raw!r} is not an integer") from None
        if code in out:
            raise ValidationError(f"{where}: duplicate neighbourhood code {code}")
        geom = feat.get("geometry") or {}
        gtype = geom.get("type")
        if gtype == "Polygon":
            parts = [geom["coordinates"]]
        elif gtype == "MultiPolygon":
            parts = geom["coordinates"]
        else:
            raise ValidationError(f"{where}: unsupported geometry type {gtype!r}")
        polygons = [[_ring(r, f"{where} (code {code})") for r in part] for part in parts if part]
        if not polygons:
            raise ValidationError(f"{where}: empty geometry for code {code}")
        out[code] = Neighbourhood(code, polygons)
    return out


# ----------------------------------------------------------------- raster


@dataclass
class NeighbourhoodRaster:
    """Grid of neighbourhood codes; ``codes[x, y]`` with -1 for background.

    Cell ``(i, j)`` spans ``[x0 + i*cell, x0 + (i+1)*cell) x [y0 + j*cell, ...)``.
    """

    codes: np.ndarray
    x0: float
    y0: float
    cell: float

    @property
    def size(self) -> int:
        return self.codes.shape[0]

    def code_at(self, x: int, y: int) -> int | None:
        c = int(self.codes[x, y])
        return None if c < 0 else c

    def footprint(self) -> np.ndarray:
        return self.codes >= 0

    def bbox(self) -> tuple[int, int, int, int]:
        """Index bounding box ``(xmin, ymin, xmax, ymax)`` of the footprint."""
        xs, ys = np.nonzero(self.footprint())
        return int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())

    def codes_present(self) -> set[int]:
        return {int(c) for c in np.unique(self.codes) if c >= 0}


def points_in_polygon(px: np.ndarray, py: np.ndarray, polygon: Sequence[Ring]) -> np.ndarray:
    """Even-odd test with a half-open boundary rule.

    A ray to +x is crossed by edges straddling ``y`` in the half-open sense
    ``(y1 > y) != (y2 > y)`` and counted when the point is strictly left of
    the crossing; points on left/bottom edges are inside, on right/top
    edges outside.
    """
    inside = np.zeros(px.shape, dtype=bool)
    for ring in polygon:
        x1, y1 = ring[:-1, 0], ring[:-1, 1]
        x2, y2 = ring[1:, 0], ring[1:, 1]
        for a, b, c, d in zip(x1, y1, x2, y2):
            straddle = (b > py) != (d > py)
            if not straddle.any():
                continue
            xcross = a + (py - b) * (c - a) / np.where(d == b, 1.0, d - b)
            inside ^= straddle & (px < xcross)
    return inside


def rasterize(polygons: Mapping[int, Neighbourhood], grid_size: int = 100) -> NeighbourhoodRaster:
    """Assign each grid cell the neighbourhood containing its center.

    The grid is square, spans the footprint's bounding box and pads the
    shorter axis symmetrically.  Where polygons overlap the smallest code
    wins, so the result does not depend on input order.
    """
    if not polygons:
        raise ValidationError("no polygons to rasterize")
    bounds = np.array([nb.bounds() for nb in polygons.values()])
    minx, miny = bounds[:, 0].min(), bounds[:, 1].min()
    maxx, maxy = bounds[:, 2].max(), bounds[:, 3].max()
    side = max(maxx - minx, maxy - miny)
    if side <= 0:
        raise ValidationError("geometry has zero extent")
    cell = side / grid_size
    x0 = minx - (side - (maxx - minx)) / 2
    y0 = miny - (side - (maxy - miny)) / 2
    centers = (np.arange(grid_size) + 0.5) * cell
    cx = x0 + centers
    cy = y0 + centers

    codes = np.full((grid_size, grid_size), -1, dtype=np.int64)
    for code in sorted(polygons, reverse=True):
        nb = polygons[code]
        bx0, by0, bx1, by1 = nb.bounds()
        ix = np.flatnonzero((cx >= bx0) & (cx <= bx1))
        iy = np.flatnonzero((cy >= by0) & (cy <= by1))
        if ix.size == 0 or iy.size == 0:
            continue
        gx, gy = np.meshgrid(cx[ix], cy[iy], indexing="ij")
        hit = np.zeros(gx.shape, dtype=bool)
        for poly in nb.polygons:
            hit |= points_in_polygon(gx, gy, poly)
        sub = codes[np.ix_(ix, iy)]
        sub[hit] = code
        codes[np.ix_(ix, iy)] = sub

    raster = NeighbourhoodRaster(codes, float(x0), float(y0), float(cell))
    missing = sorted(set(polygons) - raster.codes_present())
    if missing:
        raise ValidationError(
            f"grid of {grid_size}x{grid_size} too coarse: neighbourhoods {missing} cover no cell"
        )
    return raster


def write_raster_csv(raster: NeighbourhoodRaster, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "neighbourhood"])
        for x in range(raster.size):
            for y in range(raster.size):
                c = raster.code_at(x, y)
                w.writerow([x, y, "" if c is None else c])


def write_raster_meta(raster: NeighbourhoodRaster, path: str | Path) -> None:
    meta = {"grid_size": raster.size, "x0": raster.x0, "y0": raster.y0, "cell": raster.cell}
    Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_raster_csv(path: str | Path, meta_path: str | Path | None = None) -> NeighbourhoodRaster:
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append((int(row["x"]), int(row["y"]), int(row["neighbourhood"]) if row["neighbourhood"] else -1))
            except (KeyError, ValueError):
                raise ValidationError(f"{path}:{lineno}: malformed raster row") from None
    n = int(round(math.sqrt(len(rows))))
    if n * n != len(rows):
        raise ValidationError(f"{path}: raster is not square ({len(rows)} cells)")
    codes = np.full((n, n), -1, dtype=np.int64)
    for x, y, c in rows:
        codes[x, y] = c
    x0 = y0 = 0.0
    cell = 1.0
    if meta_path is not None and Path(meta_path).exists():
        meta = json.loads(Path(meta_path).read_text())
        x0, y0, cell = meta["x0"], meta["y0"], meta["cell"]
    return NeighbourhoodRaster(codes, x0, y0, cell)


# --------------------------------------------------------------- OD tables


@dataclass
class ODTable:
    """Mover counts for one year.

    ``rows[origin][dest]`` where ``dest`` is a neighbourhood code (int) or
    one of the group names for destinations outside the city grid.
    """

    year: int
    rows: dict[int, dict[object, int]]
    corrected: bool = False

    def copy(self) -> "ODTable":
        return ODTable(self.year, {o: dict(r) for o, r in self.rows.items()}, self.corrected)


def load_destination_mapping(source: str | Path = "v1") -> dict[str, str]:
    """Label-to-group routing; ``source`` is a shipped version name or a file path."""
    parser = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    parser.optionxform = lambda s: s.strip().casefold()
    path = Path(str(source))
    if path.exists():
        parser.read_string(path.read_text(encoding="utf-8"), source=str(path))
    else:
        try:
            text = resources.files("cubedisp").joinpath(f"data/destinations_{source}.ini").read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ValidationError(f"unknown destination mapping {source!r}") from None
        parser.read_string(text, source=f"destinations_{source}.ini")
    if not parser.has_section("destinations"):
        raise ValidationError(f"destination mapping {source}: missing [destinations] section")
    mapping = dict(parser.items("destinations"))
    bad = {k: v for k, v in mapping.items() if v not in GROUPS + ("ignore",)}
    if bad:
        raise ValidationError(f"destination mapping {source}: invalid groups {bad}")
    return mapping


def _sniff_delimiter(header: str) -> str:
    try:
        return csv.Sniffer().sniff(header, delimiters=",;\t").delimiter
    except csv.Error:
        return ","


def load_od(
    path: str | Path,
    year: int,
    known_codes: Iterable[int],
    mapping: Mapping[str, str] | None = None,
) -> ODTable:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"{path}: OD table for year {year} is missing")
    mapping = load_destination_mapping() if mapping is None else mapping
    known = set(known_codes)
    text = path.read_text(encoding="utf-8-sig")
    lines = text.splitlines()
    if not lines:
        raise ValidationError(f"{path}: empty file")
    reader = csv.reader(lines, delimiter=_sniff_delimiter(lines[0]))
    header = [h.strip() for h in next(reader)]
    lowered = [h.casefold() for h in header]
    if "origin" not in lowered or "year" not in lowered:
        raise ValidationError(f"{path}: header must contain 'year' and 'origin' columns")
    i_year, i_origin = lowered.index("year"), lowered.index("origin")

    routes: dict[int, object] = {}
    for i, h in enumerate(header):
        if i in (i_year, i_origin):
            continue
        try:
            routes[i] = int(h)
            continue
        except ValueError:
            pass
        group = mapping.get(h.casefold(), mapping.get("*"))
        if group is None:
            raise ValidationError(f"{path}: destination column {h!r} not in the destination mapping")
        routes[i] = group

    rows: dict[int, dict[object, int]] = {}
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not x.strip() for x in rec):
            continue
        if len(rec) != len(header):
            raise ValidationError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
        try:
            row_year = int(rec[i_year])
            origin = int(rec[i_origin])
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: non-integer year or origin") from None
        if row_year != year:
            continue
        if origin not in known:
            raise ValidationError(f"{path}:{lineno}: unknown origin code {origin}")
        if origin in rows:
            raise ValidationError(f"{path}:{lineno}: origin {origin} repeated")
        row: dict[object, int] = {}
        for i, dest in routes.items():
            if dest == "ignore":
                continue
            cell = rec[i].strip()
            try:
                n = int(cell) if cell else 0
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: count {cell!r} in column {header[i]!r} is not an integer") from None
            if n < 0:
                raise ValidationError(f"{path}:{lineno}: negative count {n} in column {header[i]!r}")
            if n:
                row[dest] = row.get(dest, 0) + n
        rows[origin] = row
    if not rows:
        raise ValidationError(f"{path}: no rows for year {year}")
    return ODTable(year, rows)


def _merge_rows(rows: Iterable[Mapping[object, int]]) -> dict[object, int]:
    out: dict[object, int] = {}
    for r in rows:
        for k, v in r.items():
            out[k] = out.get(k, 0) + v
    return out


def _correct_table(table: ODTable) -> ODTable:
    out = table.copy()
    out.corrected = True
    if table.year >= REDISTRICT_YEAR:
        missing = [c for c in VICALVARO + (VALLECAS_SOURCE, VALLECAS_NEW) if c not in table.rows]
        if missing:
            raise ValidationError(f"year {table.year}: codes {missing} missing after redistricting")
        return out
    missing = [c for c in VICALVARO_OLD + (VALLECAS_SOURCE,) if c not in table.rows]
    if missing:
        raise ValidationError(f"year {table.year}: codes {missing} needed for corrections are missing")

    merged = _merge_rows(table.rows[c] for c in VICALVARO_OLD)
    within = sum(merged.pop(c, 0) for c in VICALVARO)
    for code in VICALVARO:
        row = dict(merged)
        if within:
            row[code] = within
        out.rows[code] = row

    src = table.rows[VALLECAS_SOURCE]
    swap = {VALLECAS_SOURCE: VALLECAS_NEW, VALLECAS_NEW: VALLECAS_SOURCE}
    out.rows[VALLECAS_NEW] = {swap.get(k, k): v for k, v in src.items()}
    return out


def apply_corrections(tables: Sequence[ODTable]) -> list[ODTable]:
    """Vicalvaro district merge and Ensanche de Vallecas fill-in before 2017.

    Already corrected tables pass through unchanged.
    """
    return [t if t.corrected else _correct_table(t) for t in tables]


# ------------------------------------------------------------------ shares


@dataclass
class GroupShares:
    """Per-neighbourhood group fractions for one year (exact rationals)."""

    year: int
    shares: dict[int, tuple[Fraction, Fraction, Fraction, Fraction]]
    counts: dict[int, tuple[int, int, int, int]] = field(default_factory=dict)
    zero_rows: set[int] = field(default_factory=set)


def group_counts(origin: int, row: Mapping[object, int]) -> tuple[int, int, int, int]:
    acc = dict.fromkeys(GROUPS, 0)
    for dest, n in row.items():
        if isinstance(dest, str):
            acc[dest] += n
        elif dest == origin:
            acc["stay"] += n
        else:
            acc["city"] += n
    return tuple(acc[g] for g in GROUPS)


def shares_from_counts(year: int, counts: Mapping[int, tuple[int, int, int, int]]) -> GroupShares:
    out = GroupShares(year, {}, dict(counts))
    for origin, c in counts.items():
        total = sum(c)
        if total == 0:
            out.zero_rows.add(origin)
            continue
        out.shares[origin] = tuple(Fraction(n, total) for n in c)
    return out


def compute_shares(table: ODTable) -> GroupShares:
    return shares_from_counts(
        table.year, {origin: group_counts(origin, row) for origin, row in table.rows.items()}
    )


def quantize(share: Fraction) -> int:
    """Nearest integer percent, halves rounded up."""
    return math.floor(share * 100 + Fraction(1, 2))


def write_shares_csv(shares: Sequence[GroupShares], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["year", "neighbourhood", "movers"] + [f"{g}_count" for g in GROUPS] + list(GROUPS))
        for s in sorted(shares, key=lambda s: s.year):
            for code in sorted(s.counts):
                c = s.counts[code]
                frac = s.shares.get(code)
                w.writerow(
                    [s.year, code, sum(c), *c]
                    + (["" for _ in GROUPS] if frac is None else [f"{float(x):.6f}" for x in frac])
                )


def read_shares_csv(path: str | Path) -> list[GroupShares]:
    path = Path(path)
    by_year: dict[int, dict[int, tuple]] = {}
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                counts = tuple(int(row[f"{g}_count"]) for g in GROUPS)
                by_year.setdefault(int(row["year"]), {})[int(row["neighbourhood"])] = counts
            except (KeyError, ValueError):
                raise ValidationError(f"{path}:{lineno}: malformed shares row") from None
    return [shares_from_counts(y, c) for y, c in sorted(by_year.items())]


# ----------------------------------------------------------------- volumes


def build_volumes(
    shares: Sequence[GroupShares],
    raster: NeighbourhoodRaster,
    years: Sequence[int],
) -> dict[str, ScalarVolume]:
    """Four volumes of shape ``(n, n, len(years))`` sharing one background mask."""
    by_year = {s.year: s for s in shares}
    missing = [y for y in years if y not in by_year]
    if missing:
        raise ValidationError(f"no shares for years {missing}")
    n = raster.size
    codes_in_raster = sorted(raster.codes_present())
    values = np.zeros((len(GROUPS), n, n, len(years)), dtype=np.int16)
    background = np.ones((n, n, len(years)), dtype=bool)
    fp = raster.footprint()
    for z, year in enumerate(years):
        s = by_year[year]
        lut = np.zeros((len(GROUPS), max(codes_in_raster) + 1), dtype=np.int16)
        live = np.zeros(max(codes_in_raster) + 1, dtype=bool)
        for code in codes_in_raster:
            if code in s.zero_rows:
                continue
            if code not in s.shares:
                raise ValidationError(f"year {year}: no share for neighbourhood {code}")
            live[code] = True
            for gi, frac in enumerate(s.shares[code]):
                lut[gi, code] = quantize(frac)
        idx = np.where(fp, raster.codes, 0)
        mask = fp & live[idx]
        background[:, :, z] = ~mask
        for gi in range(len(GROUPS)):
            values[gi, :, :, z] = np.where(mask, lut[gi][idx], 0)
    return {g: ScalarVolume(values[gi], background.copy()) for gi, g in enumerate(GROUPS)}
