"""Brute-force homology of small filtered complexes, for testing only.

Nothing here shares code with the reduction path: cells, faces and ranks
are recomputed from doubled-grid coordinates, and ranks are taken by plain
Gaussian elimination over Z/2 on dense bit columns.
"""

from __future__ import annotations

import itertools
from collections import deque

from .errors import ValidationError
from .tconstruction import FilteredComplex

MAX_CELLS = 20000


def _sublevel_cells(complex_: FilteredComplex, t: int) -> list[tuple[int, ...]]:
    if complex_.g.size > MAX_CELLS:
        raise ValidationError(f"oracle capped at {MAX_CELLS} cells, complex has {complex_.g.size}")
    cells = []
    for c in itertools.product(*(range(n) for n in complex_.g.shape)):
        v = int(complex_.g[c])
        if 0 <= v <= t:
            cells.append(c)
    return cells


def _faces(c: tuple[int, ...]) -> list[tuple[int, ...]]:
    out = []
    for i, ci in enumerate(c):
        if ci % 2 == 1:
            for delta in (-1, 1):
                f = list(c)
                f[i] = ci + delta
                out.append(tuple(f))
    return out


def _dim(c) -> int:
    return sum(ci % 2 for ci in c)


def _rank_gf2(columns: list[int]) -> int:
    pivots: dict[int, int] = {}
    rank = 0
    for col in columns:
        while col:
            top = col.bit_length() - 1
            if top in pivots:
                col ^= pivots[top]
            else:
                pivots[top] = col
                rank += 1
                break
    return rank


def betti_bruteforce(complex_: FilteredComplex, t: int) -> tuple[int, int, int]:
    """``b_k = dim ker d_k - rank d_{k+1}`` for ``k = 0, 1, 2``."""
    cells = _sublevel_cells(complex_, t)
    by_dim: dict[int, list] = {k: [] for k in range(5)}
    for c in cells:
        by_dim[_dim(c)].append(c)
    index = {k: {c: i for i, c in enumerate(by_dim[k])} for k in by_dim}

    ranks = {0: 0}
    for k in range(1, 5):
        cols = []
        for c in by_dim[k]:
            bits = 0
            for f in _faces(c):
                bits ^= 1 << index[k - 1][f]
            cols.append(bits)
        ranks[k] = _rank_gf2(cols)
    betti = []
    for k in range(3):
        kernel = len(by_dim[k]) - ranks[k]
        betti.append(kernel - ranks[k + 1])
    return tuple(betti)


def components_bruteforce(complex_: FilteredComplex, t: int) -> int:
    """Connected components of the sublevel complex by graph search on the face relation."""
    cells = set(_sublevel_cells(complex_, t))
    adj: dict[tuple, list] = {c: [] for c in cells}
    for c in cells:
        for f in _faces(c):
            adj[c].append(f)
            adj[f].append(c)
    seen = set()
    count = 0
    for start in cells:
        if start in seen:
            continue
        count += 1
        seen.add(start)
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
    return count


def filtration_bruteforce(volume) -> dict[tuple[int, ...], int]:
    """Cell values by direct enumeration of the incident voxels of every cell.

    Keys are doubled coordinates; cells touching only background are absent.
    """
    out = {}
    shape = volume.shape
    for c in itertools.product(*(range(2 * n + 1) for n in shape)):
        choices = []
        for ci in c:
            choices.append([ci // 2] if ci % 2 else [ci // 2 - 1, ci // 2])
        vals = []
        for p in itertools.product(*choices):
            if all(0 <= pi < n for pi, n in zip(p, shape)):
                value, bg = volume.get(p)
                if not bg:
                    vals.append(100 - value)
        if vals:
            out[c] = min(vals)
    return out
