"""Synthetic inputs: a small grid city with OD tables, and neighbourhood-like volumes.

Used by the test-suite, the benchmark and the README walk-through; no real
data is bundled.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .grid import ScalarVolume
from .mobility import VICALVARO, VALLECAS_NEW, REDISTRICT_YEAR

LABELS = {"cmadrid": "Comunidad de Madrid", "spain": "Resto de España", "abroad": "Extranjero"}
LATE_CODES = (193, 194, VALLECAS_NEW)


def _codes(n: int) -> list[int]:
    fixed = [181, 182, VALLECAS_NEW, *VICALVARO]
    codes = list(fixed)
    district = 1
    while len(codes) < n:
        for k in range(1, 6):
            if len(codes) >= n:
                break
            codes.append(district * 10 + k)
        district += 1
    return sorted(codes[:n])


def write_synthetic_city(
    root: str | Path,
    seed: int = 0,
    blocks: tuple[int, int] = (7, 6),
    years: tuple[int, int] = (2004, 2023),
    grid_size: int = 40,
) -> Path:
    """Write geometry, yearly OD tables and a config file under ``root``; return the config path."""
    root = Path(root)
    (root / "od").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    nx, ny = blocks
    # uneven block edges so neighbourhoods differ in size
    xs = np.concatenate([[0.0], np.cumsum(rng.uniform(0.6, 1.4, nx))])
    ys = np.concatenate([[0.0], np.cumsum(rng.uniform(0.6, 1.4, ny))])
    cells = [(i, j) for i in range(nx) for j in range(ny) if not (i in (0, nx - 1) and j in (0, ny - 1))]
    codes = _codes(len(cells))
    order = rng.permutation(len(cells))
    features = []
    where = {}
    for code, k in zip(codes, order):
        i, j = cells[k]
        where[code] = (i, j)
        x0, x1 = 440000 + 1000 * xs[i], 440000 + 1000 * xs[i + 1]
        y0, y1 = 4470000 + 1000 * ys[j], 4470000 + 1000 * ys[j + 1]
        ring = [[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]
        features.append(
            {"type": "Feature", "properties": {"COD_BAR": f"{code:03d}"}, "geometry": {"type": "Polygon", "coordinates": [ring]}}
        )
    (root / "neighbourhoods.geojson").write_text(json.dumps({"type": "FeatureCollection", "features": features}))

    # smooth base shares per neighbourhood plus a slow trend and yearly noise
    centre = np.array([nx / 2, ny / 2])
    dist = {c: np.linalg.norm(np.array(where[c]) + 0.5 - centre) / max(nx, ny) for c in codes}
    dest_cols = [str(c) for c in codes] + [LABELS["cmadrid"], LABELS["spain"], LABELS["abroad"]]
    for year in range(years[0], years[1] + 1):
        tau = (year - years[0]) / max(years[1] - years[0], 1)
        with open(root / "od" / f"{year}.csv", "w", newline="") as fh:
            w = csv.writer(fh, delimiter=";", lineterminator="\n")
            w.writerow(["year", "origin"] + dest_cols)
            for c in codes:
                if year < REDISTRICT_YEAR and c in LATE_CODES:
                    continue
                r = dist[c]
                logits = np.array([1.2 - 0.8 * tau + r, 1.4 + 0.3 * r, 0.2 + 0.9 * r + 0.4 * tau, 0.4 + 0.5 * tau - r])
                logits += rng.normal(0, 0.35, size=4)
                p = np.exp(logits) / np.exp(logits).sum()
                movers = int(rng.integers(300, 900))
                stay, city, cm, out = rng.multinomial(movers, p)
                row = dict.fromkeys(dest_cols, 0)
                row[str(c)] = int(stay)
                others = [str(o) for o in codes if o != c]
                for o, n in zip(others, rng.multinomial(city, np.full(len(others), 1 / len(others)))):
                    row[o] = int(n)
                row[LABELS["cmadrid"]] = int(cm)
                spain = int(rng.binomial(out, 0.6))
                row[LABELS["spain"]] = spain
                row[LABELS["abroad"]] = int(out) - spain
                w.writerow([year, c] + [row[k] for k in dest_cols])

    config = root / "city.conf"
    config.write_text(
        "[pipeline]\n"
        "geometry = neighbourhoods.geojson\n"
        "code_property = COD_BAR\n"
        "od_pattern = od/{year}.csv\n"
        f"year_range = {years[0]}:{years[1]}\n"
        f"grid_size = {grid_size}\n"
        "destinations = v1\n"
        "corrections = madrid\n"
    )
    return config


def neighbourhood_volume(
    shape=(100, 100, 20), n_regions: int = 131, seed: int = 0, spread: int = 10
) -> ScalarVolume:
    """Piecewise-constant volume over a Voronoi partition of a disc, values drifting per year."""
    rng = np.random.default_rng(seed)
    nx, ny, nz = shape
    pts = rng.random((n_regions, 2)) * [nx, ny]
    xx, yy = np.meshgrid(np.arange(nx) + 0.5, np.arange(ny) + 0.5, indexing="ij")
    lab = np.argmin((xx[..., None] - pts[:, 0]) ** 2 + (yy[..., None] - pts[:, 1]) ** 2, axis=-1)
    base = rng.integers(20, 80, size=n_regions)
    vals = np.clip(base[:, None] + rng.integers(-spread, spread + 1, size=(n_regions, nz)), 0, 100)
    radius = min(nx, ny) / 2
    outside = (xx - nx / 2) ** 2 + (yy - ny / 2) ** 2 > (0.96 * radius) ** 2
    return ScalarVolume(vals[lab], np.repeat(outside[..., None], nz, axis=2))
