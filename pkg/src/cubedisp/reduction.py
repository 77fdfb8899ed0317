"""Persistence pairs of a T-construction complex over the two-element field.

Columns are reduced dimension by dimension from the top down with clearing:
pivots found while reducing ``d``-cell columns mark ``(d-1)``-cells as
positive, so their own columns are skipped.  The zero-dimensional pass
(edge columns) runs as union-find under the elder rule, which yields the
same pairing as reducing those columns since the pairing depends only on
the cell order.

Values are on the ``g = 100 - f`` scale.  Essential classes report death
100 and no death voxel.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _backend
from .errors import ValidationError
from .grid import MAX_VALUE
from .tconstruction import FilteredComplex

CSV_HEADER = ["dim", "birth", "death", "persistence", "bx", "by", "bz", "dx", "dy", "dz",
              "prevalence", "feature_id"]


@dataclass(frozen=True)
class PersistenceFeature:
    dim: int
    birth: int
    death: int | None  # None = essential
    birth_voxel: tuple[int, ...]
    death_voxel: tuple[int, ...] | None
    id: int = -1

    @property
    def essential(self) -> bool:
        return self.death is None

    @property
    def reported_death(self) -> int:
        return MAX_VALUE if self.death is None else self.death

    @property
    def persistence(self) -> int:
        return self.reported_death - self.birth

    @property
    def prevalence(self) -> int:
        """Group share (percent) at which the feature appears."""
        return MAX_VALUE - self.birth

    def alive_at(self, t: int) -> bool:
        return self.birth <= t and (self.death is None or t < self.death)

    def row_key(self):
        return (self.dim, self.birth, self.death, self.birth_voxel, self.death_voxel)


@dataclass
class Barcode:
    """Features sorted by ``(dim, birth, death)``, ties in cell order.

    ``zero_persistence`` keeps the ``birth == death`` pairs as rows of
    ``(dim, birth, death)``; they are not part of the reported barcode.
    """

    features: list[PersistenceFeature]
    ndim: int = 3
    zero_persistence: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.int64))

    def __len__(self):
        return len(self.features)

    def __iter__(self):
        return iter(self.features)

    def by_dim(self, dim: int) -> list[PersistenceFeature]:
        return [f for f in self.features if f.dim == dim]

    def get(self, feature_id: int) -> PersistenceFeature:
        for f in self.features:
            if f.id == feature_id:
                return f
        raise KeyError(f"no feature with id {feature_id}")

    def replace(self, features: Iterable[PersistenceFeature]) -> "Barcode":
        return Barcode(list(features), self.ndim, self.zero_persistence)


def _boundary_table(complex_: FilteredComplex, dim: int):
    """Face ranks (rows sorted decreasing) and column ranks for ``dim``-cells."""
    order = complex_.order
    rank = complex_.rank
    dims_flat = complex_.dims.ravel()
    cells = order[dims_flat[order] == dim]
    cshape = complex_.cell_shape
    strides = np.array([int(np.prod(cshape[i + 1:])) for i in range(len(cshape))], dtype=np.int64)
    coords = np.stack(np.unravel_index(cells, cshape), axis=1) if cells.size else np.zeros(
        (0, len(cshape)), dtype=np.int64
    )
    faces = np.empty((cells.size, 2 * dim), dtype=np.int64)
    cursor = np.zeros(cells.size, dtype=np.int64)
    rows = np.arange(cells.size)
    for axis, stride in enumerate(strides):
        odd = (coords[:, axis] & 1).astype(bool)
        r = rows[odd]
        faces[r, cursor[r]] = cells[odd] - stride
        faces[r, cursor[r] + 1] = cells[odd] + stride
        cursor[r] += 2
    face_ranks = rank[faces]
    if (face_ranks < 0).any():
        raise AssertionError(f"a {dim}-cell has a face outside the complex")
    col_ranks = rank[cells]
    if cells.size and (face_ranks.max(axis=1) >= col_ranks).any():
        raise AssertionError(f"a {dim}-cell precedes one of its faces in the filtration order")
    face_ranks = -np.sort(-face_ranks, axis=1)
    return np.ascontiguousarray(face_ranks), np.ascontiguousarray(col_ranks)


def persistence_pairs(complex_: FilteredComplex, backend: str | None = None):
    """Raw pairing on filtration ranks.

    Returns int64 arrays ``(dims, birth_ranks, death_ranks)``; essential
    classes have death rank -1.
    """
    kern = _backend.get(backend)
    order = complex_.order
    ordered_g = complex_.g.ravel()[order]
    if ordered_g.size > 1 and (np.diff(ordered_g.astype(np.int64)) < 0).any():
        raise AssertionError("filtration order is not monotone in g")
    n = int(order.size)
    skip = np.zeros(n, dtype=np.uint8)
    negative = np.zeros(n, dtype=bool)
    dims, births, deaths = [], [], []
    for k in range(complex_.ndim, 0, -1):
        faces, cols = _boundary_table(complex_, k)
        if k > 1:
            b, dth, _ = kern.twist_reduce(faces, cols, skip, n)
        else:
            b, dth, _ = kern.union_find_pairs(faces, cols, n)
        negative[dth] = True
        dims.append(np.full(b.size, k - 1, dtype=np.int64))
        births.append(b)
        deaths.append(dth)
    paired = negative
    for b in births:
        paired[b] = True
    ess = np.flatnonzero(~paired)
    dims.append(complex_.dims.ravel()[order[ess]].astype(np.int64))
    births.append(ess.astype(np.int64))
    deaths.append(np.full(ess.size, -1, dtype=np.int64))
    return np.concatenate(dims), np.concatenate(births), np.concatenate(deaths)


def compute_persistence(complex_: FilteredComplex, backend: str | None = None) -> Barcode:
    """Barcode of the sublevel filtration, dimensions ``0 .. d-1``."""
    dims, b_rank, d_rank = persistence_pairs(complex_, backend)
    order = complex_.order
    g = complex_.g.ravel()
    prov = complex_.provenance.ravel()
    essential = d_rank < 0
    if (dims[essential] >= complex_.ndim).any():
        raise AssertionError("essential class in the top dimension")
    birth = g[order[b_rank]].astype(np.int64)
    death = np.where(essential, MAX_VALUE + 1, g[order[np.where(essential, 0, d_rank)]])
    zero = ~essential & (death == birth)
    keep = ~zero

    sort = np.lexsort((d_rank[keep], b_rank[keep], death[keep], birth[keep], dims[keep]))
    idx = np.flatnonzero(keep)[sort]
    bvox = np.stack(np.unravel_index(prov[order[b_rank[idx]]], complex_.shape), axis=1)
    dvox = np.stack(np.unravel_index(prov[order[np.maximum(d_rank[idx], 0)]], complex_.shape), axis=1)
    features = []
    for i, j in enumerate(idx.tolist()):
        ess = bool(essential[j])
        features.append(
            PersistenceFeature(
                dim=int(dims[j]),
                birth=int(birth[j]),
                death=None if ess else int(death[j]),
                birth_voxel=tuple(bvox[i].tolist()),
                death_voxel=None if ess else tuple(dvox[i].tolist()),
                id=i,
            )
        )
    zeros = np.stack([dims[zero], birth[zero], death[zero]], axis=1)
    return Barcode(features, complex_.ndim, zeros)


def betti_at(barcode: Barcode, t: int) -> tuple[int, int, int]:
    """Betti numbers ``(b0, b1, b2)`` of the sublevel complex at ``t``."""
    if not 0 <= t <= MAX_VALUE:
        raise ValidationError(f"threshold {t} outside [0, 100]")
    b = [0, 0, 0]
    for f in barcode.features:
        if f.dim < 3 and f.alive_at(t):
            b[f.dim] += 1
    return tuple(b)


def diagram_points(barcode: Barcode, dim: int):
    """``(finite, essential_births)`` for one dimension."""
    if dim not in (0, 1, 2):
        raise ValidationError(f"diagram dimension must be 0, 1 or 2, got {dim}")
    finite = [(f.birth, f.death) for f in barcode.features if f.dim == dim and not f.essential]
    essential = [f.birth for f in barcode.features if f.dim == dim and f.essential]
    return finite, essential


def _coord_fields(v: Sequence[int] | None) -> list[str]:
    out = [""] * 3
    if v is not None:
        for i, c in enumerate(v):
            out[i] = str(c)
    return out


def write_barcode_csv(barcode: Barcode, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for f in barcode.features:
            w.writerow(
                [f.dim, f.birth, f.reported_death, f.persistence]
                + _coord_fields(f.birth_voxel)
                + _coord_fields(f.death_voxel)
                + [f.prevalence, f.id]
            )


def read_barcode_csv(path: str | Path, ndim: int = 3) -> Barcode:
    path = Path(path)
    features = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames[:10]) != CSV_HEADER[:10]:
            raise ValidationError(f"{path}: unexpected barcode header {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            try:
                bv = tuple(int(row[k]) for k in ("bx", "by", "bz")[:ndim])
                essential = row["dx"] == ""
                dv = None if essential else tuple(int(row[k]) for k in ("dx", "dy", "dz")[:ndim])
                fid = int(row["feature_id"]) if row.get("feature_id") else lineno - 2
                features.append(
                    PersistenceFeature(
                        int(row["dim"]),
                        int(row["birth"]),
                        None if essential else int(row["death"]),
                        bv,
                        dv,
                        fid,
                    )
                )
            except (KeyError, ValueError) as exc:
                raise ValidationError(f"{path}:{lineno}: malformed barcode row ({exc})") from None
    return Barcode(features, ndim)
