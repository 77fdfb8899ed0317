"""Trace persistence features back to voxels, neighbourhoods and years.

Foreground components use full connectivity (voxels sharing any cell), the
complement used for cavities uses face connectivity.  This is the pairing
under which a closed cubical subcomplex and the open complement it leaves
behind have consistent digital topology.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from scipy import ndimage

from .errors import AttributionError, ValidationError
from .reduction import Barcode, PersistenceFeature
from .tconstruction import FilteredComplex, sublevel_mask

DEFAULT_YEAR0 = 2004
SNAPSHOT_HEADER = ["feature_id", "t", "x", "y", "z", "neighbourhood", "year"]


@dataclass(frozen=True)
class ComponentSnapshot:
    feature_id: int
    t: int
    voxels: frozenset
    members: frozenset = field(default_factory=frozenset)  # (neighbourhood, year)


@dataclass(frozen=True)
class CavitySnapshot:
    feature_id: int
    t: int
    voxels: frozenset
    members: frozenset = field(default_factory=frozenset)


def _members(voxels, raster, year0):
    if raster is None:
        return frozenset()
    out = set()
    for v in voxels:
        code = raster.code_at(v[0], v[1])
        if code is not None:
            out.add((code, year0 + v[2] if len(v) > 2 else None))
    return frozenset(out)


def _voxel_set(mask: np.ndarray) -> frozenset:
    return frozenset(tuple(int(i) for i in p) for p in np.argwhere(mask))


def component_at(
    complex_: FilteredComplex,
    barcode: Barcode,
    feature_id: int,
    t: int,
    raster=None,
    year0: int = DEFAULT_YEAR0,
) -> ComponentSnapshot:
    """Voxels of the sublevel component at ``t`` that contains the feature's birth voxel."""
    feature = barcode.get(feature_id)
    if feature.dim != 0:
        raise ValidationError(f"feature {feature_id} has dimension {feature.dim}, expected 0")
    if not feature.alive_at(t):
        raise ValidationError(
            f"feature {feature_id} ([{feature.birth}, {feature.reported_death})) is not alive at t={t}"
        )
    mask = sublevel_mask(complex_, t)
    labels, _ = ndimage.label(mask, structure=np.ones((3,) * complex_.ndim, dtype=bool))
    lab = labels[feature.birth_voxel]
    if lab == 0:
        raise AttributionError(f"birth voxel {feature.birth_voxel} of feature {feature_id} absent at t={t}")
    voxels = _voxel_set(labels == lab)
    return ComponentSnapshot(feature_id, t, voxels, _members(voxels, raster, year0))


def components_at(complex_: FilteredComplex, barcode: Barcode, t: int, **kw) -> list[ComponentSnapshot]:
    """Snapshots of every dimension-0 feature alive at ``t``."""
    return [
        component_at(complex_, barcode, f.id, t, **kw)
        for f in barcode.features
        if f.dim == 0 and f.alive_at(t)
    ]


def _bounded_labels(absent: np.ndarray):
    """Face-connected components of ``absent`` that avoid the volume boundary."""
    labels, n = ndimage.label(absent)
    touching = set()
    for axis in range(absent.ndim):
        touching.update(np.unique(labels.take(0, axis=axis)))
        touching.update(np.unique(labels.take(-1, axis=axis)))
    return labels, [k for k in range(1, n + 1) if k not in touching]


def _essential_void(complex_: FilteredComplex, feature: PersistenceFeature) -> np.ndarray:
    # An essential void never fills, so it contains background, and it is
    # enclosed exactly at the birth level.  Candidates next to the birth
    # voxel break ties; anything still ambiguous is reported, not guessed.
    volume = complex_.volume
    labels, bounded = _bounded_labels(~sublevel_mask(complex_, feature.birth))
    old = set()
    if feature.birth > 0:
        before, before_bounded = _bounded_labels(~sublevel_mask(complex_, feature.birth - 1))
        old = {_voxel_set(before == k) for k in before_bounded}
    candidates = []
    for k in bounded:
        region = labels == k
        if volume.background[region].any() and _voxel_set(region) not in old:
            candidates.append(region)
    if len(candidates) > 1:
        near = np.zeros(volume.shape, dtype=bool)
        near[tuple(slice(max(c - 1, 0), c + 2) for c in feature.birth_voxel)] = True
        candidates = [r for r in candidates if (r & near).any()]
    if len(candidates) != 1:
        raise AttributionError(
            f"feature {feature.id}: {len(candidates)} candidate voids for an essential cavity born at {feature.birth}"
        )
    return candidates[0]


def cavity_at_birth(
    complex_: FilteredComplex,
    barcode: Barcode,
    feature_id: int,
    raster=None,
    year0: int = DEFAULT_YEAR0,
) -> CavitySnapshot:
    """The enclosed void of a dimension-2 feature at its birth threshold.

    Flood fill over absent voxels (background included) with face
    connectivity, seeded at the death voxel.  A flood that reaches the
    outer boundary of the volume is not a cavity.  Essential features have
    no death voxel; their void is the unique newly enclosed region that
    contains background.
    """
    feature = barcode.get(feature_id)
    if feature.dim != 2:
        raise ValidationError(f"feature {feature_id} has dimension {feature.dim}, expected 2")
    if feature.essential:
        region = _essential_void(complex_, feature)
    else:
        seed = feature.death_voxel
        absent = ~sublevel_mask(complex_, feature.birth)
        if not absent[seed]:
            raise AttributionError(
                f"feature {feature_id}: death voxel {seed} is present at birth t={feature.birth}"
            )
        labels, bounded = _bounded_labels(absent)
        if labels[seed] not in bounded:
            raise AttributionError(
                f"feature {feature_id}: flood from {seed} reaches the volume boundary (unbounded)"
            )
        region = labels == labels[seed]
    voxels = _voxel_set(region)
    return CavitySnapshot(feature_id, feature.birth, voxels, _members(voxels, raster, year0))


def cavities(complex_: FilteredComplex, barcode: Barcode, **kw) -> dict[int, CavitySnapshot]:
    """Cavity snapshots of every dimension-2 feature, keyed by feature id."""
    return {f.id: cavity_at_birth(complex_, barcode, f.id, **kw) for f in barcode.features if f.dim == 2}


def dedup(barcode: Barcode, cavity_snapshots: Mapping[int, CavitySnapshot] | None = None) -> Barcode:
    """Drop repeated rows and dimension-2 features that enclose an identical void.

    Among features sharing a void the most persistent is kept (ties: the
    earliest in barcode order).  Surviving features keep their order.
    """
    cavity_snapshots = cavity_snapshots or {}
    seen_rows = set()
    kept: list[PersistenceFeature] = []
    for f in barcode.features:
        key = f.row_key()
        if key in seen_rows:
            continue
        seen_rows.add(key)
        kept.append(f)

    position = {f.id: i for i, f in enumerate(kept)}
    owner: dict[frozenset, PersistenceFeature] = {}
    for f in sorted(
        (f for f in kept if f.dim == 2 and f.id in cavity_snapshots),
        key=lambda f: (-f.persistence, position[f.id]),
    ):
        owner.setdefault(cavity_snapshots[f.id].voxels, f)
    drop = {
        f.id
        for f in kept
        if f.dim == 2 and f.id in cavity_snapshots and owner[cavity_snapshots[f.id].voxels] is not f
    }
    return barcode.replace(f for f in kept if f.id not in drop)


def important(barcode: Barcode, threshold: int = 2) -> Barcode:
    """Features with persistence strictly above ``threshold``."""
    if threshold < 0:
        raise ValidationError("importance threshold must be >= 0")
    return barcode.replace(f for f in barcode.features if f.persistence > threshold)


def locate(feature: PersistenceFeature, raster, year0: int = DEFAULT_YEAR0):
    """``(year_of_birth, year_of_death, nb_of_birth, nb_of_death)``; death fields None if essential."""

    def where(v, what):
        code = raster.code_at(v[0], v[1])
        if code is None:
            raise AttributionError(f"{what} voxel {v} of feature {feature.id} maps to background")
        return year0 + v[2], code

    yb, nb = where(feature.birth_voxel, "birth")
    if feature.death_voxel is None:
        return yb, None, nb, None
    yd, nd = where(feature.death_voxel, "death")
    return yb, yd, nb, nd


def write_snapshots_csv(snapshots: Iterable, path: str | Path, raster=None, year0: int = DEFAULT_YEAR0) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SNAPSHOT_HEADER)
        for snap in snapshots:
            for v in sorted(snap.voxels):
                code = raster.code_at(v[0], v[1]) if raster is not None else None
                z = v[2] if len(v) > 2 else ""
                year = year0 + v[2] if len(v) > 2 else ""
                w.writerow([snap.feature_id, snap.t, v[0], v[1], z, "" if code is None else code, year])
