"""T-construction: the filtered cubical complex of a grayscale volume.

Cells live on the doubled grid: a cell with anchor ``l`` and extent mask
``e`` sits at doubled coordinate ``c_i = 2*l_i + bit_i(e)``; voxel ``p`` is
the top cell at ``c = 2p + 1``.  Filtration values are reported in the
transformed scale ``g = 100 - f`` and the filtration is sublevel: a cell
takes the minimum ``g`` of the voxels it touches, i.e. lower cells inherit
the largest share among incident voxels.  Thresholding at ``t`` therefore
keeps exactly the voxels with ``f >= 100 - t`` together with their closure,
so voxels that share only an edge or a vertex are connected.

Cell order, used everywhere a total order is needed, is lexicographic on
``(g, dim, anchor, extent)`` with ``extent`` read as the integer
``sum(bit_i << i)``.  Among equally minimal incident voxels the provenance
is the one with the smallest row-major index.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import ValidationError
from .grid import MAX_VALUE, ScalarVolume, unravel


@dataclass(frozen=True, order=True)
class Cell:
    anchor: tuple[int, ...]
    extent: int

    @property
    def dim(self) -> int:
        return bin(self.extent).count("1")

    def doubled(self) -> tuple[int, ...]:
        return tuple(2 * a + ((self.extent >> i) & 1) for i, a in enumerate(self.anchor))

    @classmethod
    def from_doubled(cls, c) -> "Cell":
        extent = 0
        for i, ci in enumerate(c):
            extent |= (int(ci) & 1) << i
        return cls(tuple(int(ci) >> 1 for ci in c), extent)

    def faces(self) -> list["Cell"]:
        """The ``2*dim`` codimension-one faces."""
        out = []
        for i in range(len(self.anchor)):
            if self.extent >> i & 1:
                ext = self.extent & ~(1 << i)
                out.append(Cell(self.anchor, ext))
                up = list(self.anchor)
                up[i] += 1
                out.append(Cell(tuple(up), ext))
        return out


class FilteredComplex:
    """Filtration values and provenance voxels on the doubled grid.

    ``g[c]`` is -1 for cells outside the complex (touching background only).
    ``provenance[c]`` is the row-major index of the voxel that set ``g[c]``.
    """

    def __init__(self, volume: ScalarVolume, g: np.ndarray, provenance: np.ndarray):
        self.volume = volume
        self.shape = volume.shape
        self.ndim = volume.ndim
        self.g = g
        self.provenance = provenance

    @property
    def cell_shape(self) -> tuple[int, ...]:
        return self.g.shape

    @cached_property
    def dims(self) -> np.ndarray:
        """Cell dimension per doubled-grid position."""
        d = np.zeros(self.cell_shape, dtype=np.int8)
        for axis, n in enumerate(self.cell_shape):
            odd = (np.arange(n) & 1).astype(np.int8)
            view = [1] * self.ndim
            view[axis] = n
            d = d + odd.reshape(view)
        return d

    @cached_property
    def order(self) -> np.ndarray:
        """Doubled-grid linear indices of present cells in filtration order."""
        flat_g = self.g.ravel()
        idx = np.flatnonzero(flat_g >= 0)
        coords = np.unravel_index(idx, self.cell_shape)
        extent = np.zeros(idx.size, dtype=np.int64)
        for i, c in enumerate(coords):
            extent |= (c & 1).astype(np.int64) << i
        anchors = [c >> 1 for c in coords]
        # lexsort: last key is primary
        keys = [extent] + anchors[::-1] + [self.dims.ravel()[idx], flat_g[idx]]
        return idx[np.lexsort(keys)]

    @cached_property
    def rank(self) -> np.ndarray:
        """Position of every present cell in :attr:`order`; -1 if absent."""
        r = np.full(self.g.size, -1, dtype=np.int64)
        r[self.order] = np.arange(self.order.size)
        return r

    @cached_property
    def voxel_g(self) -> np.ndarray:
        """Top-cell values on the voxel grid; -1 on background."""
        sl = tuple(slice(1, None, 2) for _ in range(self.ndim))
        return self.g[sl]

    def num_cells(self) -> int:
        return int(self.order.size)

    def cell_value(self, cell: Cell) -> int:
        return int(self.g[cell.doubled()])

    def cell_provenance(self, cell: Cell) -> tuple[int, ...]:
        return unravel(int(self.provenance[cell.doubled()]), self.shape)


def build_filtered_complex(volume: ScalarVolume) -> FilteredComplex:
    """Extend ``g = 100 - f`` from voxels to all cells by the min rule.

    A cell belongs to the complex as soon as one of its incident voxels is
    not background.
    """
    if volume.ndim > 3:
        raise ValidationError(f"persistence supports d <= 3, got d = {volume.ndim}")
    if volume.background.all():
        raise ValidationError("volume has no non-background voxel")
    nvox = volume.size
    inf = np.int64((MAX_VALUE + 1) * nvox)
    voxel_key = (MAX_VALUE - volume.values.astype(np.int64)) * nvox + np.arange(
        nvox, dtype=np.int64
    ).reshape(volume.shape)
    voxel_key[volume.background] = inf

    cshape = tuple(2 * n + 1 for n in volume.shape)
    key = np.full(cshape, inf, dtype=np.int64)
    key[tuple(slice(1, None, 2) for _ in cshape)] = voxel_key
    # separable min over the incident voxel block, one axis at a time
    for axis in range(volume.ndim):
        lo = [slice(None)] * volume.ndim
        hi = [slice(None)] * volume.ndim
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        shifted = key.copy()
        np.minimum(shifted[tuple(hi)], key[tuple(lo)], out=shifted[tuple(hi)])
        np.minimum(shifted[tuple(lo)], key[tuple(hi)], out=shifted[tuple(lo)])
        key = shifted

    present = key < inf
    g = np.where(present, key // nvox, -1).astype(np.int16)
    provenance = np.where(present, key % nvox, -1).astype(np.int64)
    return FilteredComplex(volume, g, provenance)


def sublevel_mask(complex_: FilteredComplex, t: int) -> np.ndarray:
    vg = complex_.voxel_g
    return (vg >= 0) & (vg <= t)


def sublevel_voxels(complex_: FilteredComplex, t: int) -> set[tuple[int, ...]]:
    """Non-background voxels with ``g <= t`` (share ``>= 100 - t``)."""
    if not 0 <= t <= MAX_VALUE:
        raise ValidationError(f"threshold {t} outside [0, 100]")
    return {tuple(int(i) for i in p) for p in np.argwhere(sublevel_mask(complex_, t))}


def enumerate_cells(
    complex_: FilteredComplex, dim: int
) -> Iterator[tuple[Cell, int, tuple[int, ...]]]:
    """Yield ``(cell, g, provenance voxel)`` for ``dim``-cells in filtration order."""
    if not 0 <= dim <= 3 or dim > complex_.ndim:
        raise ValidationError(f"cell dimension {dim} out of range for d = {complex_.ndim}")
    order = complex_.order
    sel = order[complex_.dims.ravel()[order] == dim]
    flat_g = complex_.g.ravel()
    flat_p = complex_.provenance.ravel()
    for lin in sel:
        c = np.unravel_index(lin, complex_.cell_shape)
        yield (
            Cell.from_doubled(c),
            int(flat_g[lin]),
            unravel(int(flat_p[lin]), complex_.shape),
        )


def cell_counts(complex_: FilteredComplex, t: int | None = None) -> list[int]:
    """Number of cells per dimension, optionally restricted to ``g <= t``."""
    g = complex_.g.ravel()
    dims = complex_.dims.ravel()
    mask = g >= 0 if t is None else (g >= 0) & (g <= t)
    return [int(np.count_nonzero(mask & (dims == k))) for k in range(complex_.ndim + 1)]


def euler_characteristic(complex_: FilteredComplex, t: int) -> int:
    if not 0 <= t <= MAX_VALUE:
        raise ValidationError(f"threshold {t} outside [0, 100]")
    return sum((-1) ** k * n for k, n in enumerate(cell_counts(complex_, t)))


def dump_cells_csv(complex_: FilteredComplex, path: str | Path) -> None:
    """Debug dump of every cell, grouped by dimension, filtration order within."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dim", "anchor", "extent", "g", "provenance"])
        for dim in range(complex_.ndim + 1):
            for cell, g, prov in enumerate_cells(complex_, dim):
                w.writerow(
                    [
                        dim,
                        " ".join(map(str, cell.anchor)),
                        cell.extent,
                        g,
                        " ".join(map(str, prov)),
                    ]
                )
