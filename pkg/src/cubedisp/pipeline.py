"""Pipeline stages and the on-disk output layout.

Output layout, version 1 (paths relative to the output directory)::

    LAYOUT                         layout version marker
    raster.csv, raster.json        neighbourhood raster and its georeference
    shares.csv                     corrected per-year group counts and shares
    volumes/<group>.grid           quantized share volumes
    barcodes/<group>.barcode.csv   reported persistence features
    trace/<group>.barcode.csv      deduplicated features
    trace/<group>.cavities.csv     cavity voxels of dimension-2 features
    trace/<group>.components.csv   component voxels of important H0 features
    trace/<group>.diagnostics.csv  features whose cavity could not be traced
    tables/feature_counts.csv, tables/stats.csv, tables/distributions.csv
    tables/top10_<group>.csv
    figures/<group>.barcode.svg, figures/<group>.diagram.svg
"""

from __future__ import annotations

import configparser
import csv
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from . import mobility, report, trace
from .errors import AttributionError, ValidationError
from .grid import load_volume, save_volume
from .reduction import Barcode, compute_persistence, read_barcode_csv, write_barcode_csv
from .tconstruction import build_filtered_complex

LAYOUT_VERSION = "cubedisp-output 1"
log = logging.getLogger("cubedisp")


@dataclass
class Settings:
    geometry: Path | None = None
    code_property: str | None = None
    od_pattern: str | None = None
    years: tuple[int, int] = (2004, 2023)
    grid_size: int = 100
    destinations: str = "v1"
    corrections: str = "madrid"
    groups: tuple[str, ...] = mobility.GROUPS
    importance_threshold: int = 2
    std_ddof: int = 1
    top_k: int = 10
    workers: int = field(default_factory=lambda: min(os.cpu_count() or 1, 4))
    base_dir: Path = Path(".")

    @property
    def year_list(self) -> list[int]:
        return list(range(self.years[0], self.years[1] + 1))

    def od_path(self, year: int) -> Path:
        if not self.od_pattern:
            raise ValidationError("config: od_pattern is not set")
        return self.base_dir / self.od_pattern.format(year=year)


def parse_year_range(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.split(":"))
    except ValueError:
        raise ValidationError(f"year range must look like 2004:2023, got {text!r}") from None
    if b < a:
        raise ValidationError(f"empty year range {text!r}")
    return a, b


def parse_groups(text: str) -> tuple[str, ...]:
    groups = tuple(g.strip() for g in text.split(",") if g.strip())
    bad = [g for g in groups if g not in mobility.GROUPS]
    if bad or not groups:
        raise ValidationError(f"unknown groups {bad}; choose from {', '.join(mobility.GROUPS)}")
    return groups


def load_settings(path: str | Path | None) -> Settings:
    s = Settings()
    if path is None:
        return s
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"{path}: config file not found")
    parser = configparser.ConfigParser(interpolation=None)
    parser.read(path, encoding="utf-8")
    if not parser.has_section("pipeline"):
        raise ValidationError(f"{path}: missing [pipeline] section")
    sec = parser["pipeline"]
    s.base_dir = path.parent
    try:
        if "geometry" in sec:
            s.geometry = s.base_dir / sec["geometry"]
        s.code_property = sec.get("code_property") or None
        s.od_pattern = sec.get("od_pattern")
        if "year_range" in sec:
            s.years = parse_year_range(sec["year_range"])
        s.grid_size = sec.getint("grid_size", s.grid_size)
        dest = sec.get("destinations", s.destinations)
        s.destinations = str(s.base_dir / dest) if (s.base_dir / dest).is_file() else dest
        s.corrections = sec.get("corrections", s.corrections)
        if "groups" in sec:
            s.groups = parse_groups(sec["groups"])
        s.importance_threshold = sec.getint("importance_threshold", s.importance_threshold)
        s.std_ddof = sec.getint("std_ddof", s.std_ddof)
        s.top_k = sec.getint("top_k", s.top_k)
        s.workers = sec.getint("workers", s.workers)
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    if s.corrections not in ("madrid", "none"):
        raise ValidationError(f"{path}: corrections must be 'madrid' or 'none'")
    return s


@contextmanager
def stage(name: str, **fields):
    t0 = time.perf_counter()
    extra = "".join(f" {k}={v}" for k, v in fields.items())
    log.info("stage=%s event=start%s", name, extra)
    yield
    log.info("stage=%s event=done seconds=%.3f%s", name, time.perf_counter() - t0, extra)


def _map(workers: int, fn: Callable, items: Sequence):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _ensure_layout(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "LAYOUT").write_text(LAYOUT_VERSION + "\n")


def read_raster(out: Path) -> mobility.NeighbourhoodRaster:
    path = out / "raster.csv"
    if not path.exists():
        raise ValidationError(f"{path}: raster not found; run the rasterize stage first")
    return mobility.read_raster_csv(path, out / "raster.json")


# ------------------------------------------------------------- stages


def run_rasterize(s: Settings, out: Path) -> mobility.NeighbourhoodRaster:
    if s.geometry is None:
        raise ValidationError("config: geometry is not set")
    with stage("rasterize", grid=s.grid_size):
        polygons = mobility.load_geometry(s.geometry, s.code_property)
        raster = mobility.rasterize(polygons, s.grid_size)
        _ensure_layout(out)
        mobility.write_raster_csv(raster, out / "raster.csv")
        mobility.write_raster_meta(raster, out / "raster.json")
    return raster


def run_ingest(s: Settings, out: Path) -> list[mobility.GroupShares]:
    if s.geometry is None:
        raise ValidationError("config: geometry is not set")
    with stage("ingest", years=f"{s.years[0]}:{s.years[1]}"):
        known = mobility.load_geometry(s.geometry, s.code_property).keys()
        mapping = mobility.load_destination_mapping(s.destinations)
        tables = _map(s.workers, lambda y: mobility.load_od(s.od_path(y), y, known, mapping), s.year_list)
        if s.corrections == "madrid":
            tables = mobility.apply_corrections(tables)
        shares = [mobility.compute_shares(t) for t in tables]
        _ensure_layout(out)
        mobility.write_shares_csv(shares, out / "shares.csv")
    return shares


def run_volumes(s: Settings, out: Path) -> dict:
    with stage("volumes"):
        raster = read_raster(out)
        shares_path = out / "shares.csv"
        if not shares_path.exists():
            raise ValidationError(f"{shares_path}: shares not found; run the ingest stage first")
        shares = mobility.read_shares_csv(shares_path)
        volumes = mobility.build_volumes(shares, raster, s.year_list)
        (out / "volumes").mkdir(parents=True, exist_ok=True)
        for g in s.groups:
            save_volume(volumes[g], out / "volumes" / f"{g}.grid")
    return volumes


def persist_file(volume_path: Path, out_path: Path) -> Barcode:
    volume = load_volume(volume_path)
    barcode = compute_persistence(build_filtered_complex(volume))
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_barcode_csv(barcode, out_path)
    return barcode


def run_persist(s: Settings, out: Path) -> dict[str, Barcode]:
    def one(g):
        with stage("persist", group=g):
            return persist_file(out / "volumes" / f"{g}.grid", out / "barcodes" / f"{g}.barcode.csv")

    return dict(zip(s.groups, _map(s.workers, one, list(s.groups))))


def trace_group(s: Settings, out: Path, group: str, raster) -> Barcode:
    year0 = s.years[0]
    volume = load_volume(out / "volumes" / f"{group}.grid")
    complex_ = build_filtered_complex(volume)
    barcode = read_barcode_csv(out / "barcodes" / f"{group}.barcode.csv", volume.ndim)
    snaps, problems = {}, []
    for f in barcode.features:
        if f.dim == 2:
            try:
                snaps[f.id] = trace.cavity_at_birth(complex_, barcode, f.id, raster, year0)
            except AttributionError as exc:
                problems.append((f.id, str(exc)))
    deduped = trace.dedup(barcode, snaps)
    tdir = out / "trace"
    tdir.mkdir(parents=True, exist_ok=True)
    write_barcode_csv(deduped, tdir / f"{group}.barcode.csv")
    kept = {f.id for f in deduped.features}
    trace.write_snapshots_csv(
        [snaps[i] for i in sorted(snaps) if i in kept], tdir / f"{group}.cavities.csv", raster, year0
    )
    comps = []
    for f in trace.important(deduped, s.importance_threshold).by_dim(0):
        comps.append(trace.component_at(complex_, deduped, f.id, f.birth, raster, year0))
        if not f.essential and f.death - 1 > f.birth:
            comps.append(trace.component_at(complex_, deduped, f.id, f.death - 1, raster, year0))
    trace.write_snapshots_csv(comps, tdir / f"{group}.components.csv", raster, year0)
    with open(tdir / f"{group}.diagnostics.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature_id", "problem"])
        w.writerows(problems)
    for fid, msg in problems:
        log.warning("stage=trace group=%s feature=%d diagnostic=%r", group, fid, msg)
    log.info(
        "stage=trace group=%s features=%d deduped=%d cavities=%d diagnostics=%d",
        group, len(barcode), len(deduped), len(snaps), len(problems),
    )
    return deduped


def run_trace(s: Settings, out: Path) -> dict[str, Barcode]:
    raster = read_raster(out)

    def one(g):
        with stage("trace", group=g):
            return trace_group(s, out, g, raster)

    return dict(zip(s.groups, _map(s.workers, one, list(s.groups))))


def run_report(s: Settings, out: Path) -> None:
    with stage("report"):
        raster = read_raster(out)
        ndim = 3
        barcodes = {}
        for g in s.groups:
            p = out / "trace" / f"{g}.barcode.csv"
            if not p.exists():
                raise ValidationError(f"{p}: deduplicated barcode not found; run the trace stage first")
            barcodes[g] = read_barcode_csv(p, ndim)
        tables = out / "tables"
        figures = out / "figures"
        tables.mkdir(parents=True, exist_ok=True)
        figures.mkdir(parents=True, exist_ok=True)
        report.write_feature_counts(
            report.feature_counts(barcodes, s.importance_threshold), tables / "feature_counts.csv"
        )
        report.write_stats(
            {g: report.descriptive_stats(bc, s.std_ddof) for g, bc in barcodes.items()},
            tables / "stats.csv",
            s.std_ddof,
        )
        report.distributions(barcodes, tables / "distributions.csv")
        for g, bc in barcodes.items():
            report.write_top_k(report.top_k(bc, raster, s.top_k, s.years[0]), tables / f"top{s.top_k}_{g}.csv")
            report.render_barcode(bc, figures / f"{g}.barcode.svg", title=f"{g} barcode")
            report.render_diagram(bc, figures / f"{g}.diagram.svg", title=f"{g} persistence diagram")


def run_all(s: Settings, out: Path) -> None:
    with stage("all"):
        _ensure_layout(out)
        run_rasterize(s, out)
        run_ingest(s, out)
        run_volumes(s, out)
        run_persist(s, out)
        run_trace(s, out)
        run_report(s, out)
