"""Pure-Python reduction kernels, used when the compiled extension is absent.

Same contracts as the Cython module ``_kernels``.  Ranks are positions in
the global filtration order; every face row of ``faces`` is sorted in
decreasing rank.
"""

import numpy as np


def twist_reduce(faces, col_rank, skip, n_total):
    """Reduce the boundary columns ``faces`` over Z/2 in the given order.

    Columns whose rank is flagged in ``skip`` are cleared (known positive).
    Every nonzero reduced column's pivot is flagged in ``skip`` so that the
    next lower dimension can clear it.

    Returns ``(births, deaths, zero_columns)`` as int64 arrays.
    """
    reduced = {}
    births, deaths, zeros = [], [], []
    faces = faces.tolist()
    col_rank = col_rank.tolist()
    for j, r in enumerate(col_rank):
        if skip[r]:
            continue
        col = set(faces[j])
        while col:
            p = max(col)
            other = reduced.get(p)
            if other is None:
                break
            col ^= other
        if col:
            p = max(col)
            reduced[p] = col
            skip[p] = 1
            births.append(p)
            deaths.append(r)
        else:
            zeros.append(r)
    return (
        np.array(births, dtype=np.int64),
        np.array(deaths, dtype=np.int64),
        np.array(zeros, dtype=np.int64),
    )


def union_find_pairs(edges, edge_rank, n_total):
    """Zero-dimensional pairing by union-find under the elder rule.

    ``edges[j]`` holds the vertex ranks of the edge with rank
    ``edge_rank[j]``; edges arrive in filtration order.  A component is
    represented by its oldest vertex (smallest rank).

    Returns ``(births, deaths, positive_edges)``.
    """
    parent = {}

    def find(x):
        root = x
        while parent.get(root, root) != root:
            root = parent[root]
        while x != root:
            nxt = parent.get(x, x)
            parent[x] = root
            x = nxt
        return root

    births, deaths, positive = [], [], []
    for (u, v), r in zip(edges.tolist(), edge_rank.tolist()):
        ru, rv = find(u), find(v)
        if ru == rv:
            positive.append(r)
            continue
        young, old = (ru, rv) if ru > rv else (rv, ru)
        parent[young] = old
        births.append(young)
        deaths.append(r)
    return (
        np.array(births, dtype=np.int64),
        np.array(deaths, dtype=np.int64),
        np.array(positive, dtype=np.int64),
    )
