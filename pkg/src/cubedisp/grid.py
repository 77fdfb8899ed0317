"""Integer grayscale volumes with a background mask.

Values are quantized percentages in ``[0, 100]``.  Background voxels never
enter a filtration; they are tracked by an explicit boolean mask rather than
a sentinel so arithmetic on ``values`` is always meaningful.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

MAX_VALUE = 100
BACKGROUND_CODE = -1


@dataclass
class ScalarVolume:
    """A d-dimensional integer image stored row-major.

    Attributes:
        values: integer array of shape ``shape``; entries under the
            background mask are ignored (kept at 0).
        background: boolean array, True where the voxel is background.
    """

    values: np.ndarray
    background: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.int16)
        self.background = np.ascontiguousarray(self.background, dtype=bool)
        if self.values.ndim == 0:
            raise ValidationError("volume must have at least one axis")
        if self.values.shape != self.background.shape:
            raise ValidationError(
                f"values shape {self.values.shape} != background shape {self.background.shape}"
            )
        live = self.values[~self.background]
        if live.size and (live.min() < 0 or live.max() > MAX_VALUE):
            raise ValidationError("non-background values must lie in [0, 100]")
        self.values[self.background] = 0

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def size(self) -> int:
        return self.values.size

    def _check(self, coord: Sequence[int]) -> tuple[int, ...]:
        coord = tuple(int(c) for c in coord)
        if len(coord) != self.ndim or any(
            c < 0 or c >= n for c, n in zip(coord, self.shape)
        ):
            raise IndexError(f"coordinate {coord} out of bounds for shape {self.shape}")
        return coord

    def get(self, coord: Sequence[int]) -> tuple[int, bool]:
        """Return ``(value, is_background)`` at ``coord``."""
        coord = self._check(coord)
        return int(self.values[coord]), bool(self.background[coord])

    def set(self, coord: Sequence[int], value: int | None) -> None:
        """Write ``value`` at ``coord``; ``None`` marks the voxel as background."""
        coord = self._check(coord)
        if value is None:
            self.background[coord] = True
            self.values[coord] = 0
            return
        if not 0 <= value <= MAX_VALUE:
            raise ValidationError(f"value {value} outside [0, 100]")
        self.values[coord] = value
        self.background[coord] = False

    def to_codes(self) -> np.ndarray:
        """Values with background encoded as ``-1``."""
        out = self.values.astype(np.int16)
        out[self.background] = BACKGROUND_CODE
        return out

    @classmethod
    def from_codes(cls, codes) -> "ScalarVolume":
        codes = np.asarray(codes)
        bg = codes == BACKGROUND_CODE
        bad = (~bg) & ((codes < 0) | (codes > MAX_VALUE))
        if bad.any():
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            raise ValidationError(f"value {codes[idx]} at {idx} outside [0, 100]")
        return cls(np.where(bg, 0, codes), bg)

    def copy(self) -> "ScalarVolume":
        return ScalarVolume(self.values.copy(), self.background.copy())

    def __eq__(self, other):
        if not isinstance(other, ScalarVolume):
            return NotImplemented
        return np.array_equal(self.to_codes(), other.to_codes())


def new_volume(shape: Sequence[int], fill: int = 0) -> ScalarVolume:
    shape = tuple(int(n) for n in shape)
    if not shape:
        raise ValidationError("shape must not be empty")
    if any(n < 1 for n in shape):
        raise ValidationError(f"shape entries must be >= 1, got {shape}")
    if not 0 <= fill <= MAX_VALUE:
        raise ValidationError(f"fill {fill} outside [0, 100]")
    return ScalarVolume(np.full(shape, fill, dtype=np.int16), np.zeros(shape, dtype=bool))


def strides(shape: Sequence[int]) -> tuple[int, ...]:
    """Row-major strides in elements."""
    out = [1] * len(shape)
    for i in range(len(shape) - 2, -1, -1):
        out[i] = out[i + 1] * shape[i + 1]
    return tuple(out)


def linear_index(coord: Sequence[int], shape: Sequence[int]) -> int:
    return sum(int(c) * s for c, s in zip(coord, strides(shape)))


def unravel(index: int, shape: Sequence[int]) -> tuple[int, ...]:
    return tuple(int(i) for i in np.unravel_index(index, tuple(shape)))


_OFFSETS: dict[tuple[int, str], list[tuple[int, ...]]] = {}


def _offsets(d: int, connectivity: str) -> list[tuple[int, ...]]:
    key = (d, connectivity)
    if key not in _OFFSETS:
        if connectivity == "face":
            offs = []
            for axis in range(d):
                for step in (-1, 1):
                    o = [0] * d
                    o[axis] = step
                    offs.append(tuple(o))
        elif connectivity == "full":
            offs = [o for o in itertools.product((-1, 0, 1), repeat=d) if any(o)]
        else:
            raise ValueError(f"unknown connectivity {connectivity!r}")
        _OFFSETS[key] = offs
    return _OFFSETS[key]


def neighbours(
    coord: Sequence[int], shape: Sequence[int], connectivity: str = "full"
) -> list[tuple[int, ...]]:
    """In-bounds neighbours of ``coord``.

    ``face`` gives up to ``2d`` neighbours sharing a (d-1)-face, ``full`` up
    to ``3**d - 1`` sharing any cell.
    """
    out = []
    for off in _offsets(len(shape), connectivity):
        q = tuple(c + o for c, o in zip(coord, off))
        if all(0 <= qi < n for qi, n in zip(q, shape)):
            out.append(q)
    return out


def save_volume(volume: ScalarVolume, path: str | Path) -> None:
    """Write the plain-text grid format.

    First line ``shape=n1,...,nd``; then one line per run along the last
    axis, values row-major and space separated, background as ``-1``.
    """
    codes = volume.to_codes()
    rows = codes.reshape(-1, codes.shape[-1])
    lines = ["shape=" + ",".join(str(n) for n in volume.shape)]
    lines.extend(" ".join(str(int(v)) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def load_volume(path: str | Path) -> ScalarVolume:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
        if not header.startswith("shape="):
            raise ValidationError(f"{path}: first line must be 'shape=n1,...,nd'")
        try:
            shape = tuple(int(x) for x in header[len("shape="):].split(","))
        except ValueError as exc:
            raise ValidationError(f"{path}: bad shape header {header!r}") from exc
        try:
            flat = np.array(fh.read().split(), dtype=np.int64)
        except ValueError as exc:
            raise ValidationError(f"{path}: non-integer value in grid body") from exc
    if flat.size != int(np.prod(shape)):
        raise ValidationError(
            f"{path}: expected {int(np.prod(shape))} values for shape {shape}, got {flat.size}"
        )
    try:
        return ScalarVolume.from_codes(flat.reshape(shape))
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def iter_coords(shape: Iterable[int]):
    return itertools.product(*(range(n) for n in shape))
