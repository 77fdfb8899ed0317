# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled reduction kernels; see ``_pykernels`` for the reference versions."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t
from libcpp.vector cimport vector

cnp.import_array()


cdef inline void _symdiff(vector[int64_t]& a, vector[int64_t]& b,
                          vector[int64_t]& out) noexcept nogil:
    # a, b sorted decreasing; out = a xor b, sorted decreasing
    cdef size_t i = 0, j = 0
    cdef size_t na = a.size(), nb = b.size()
    out.clear()
    while i < na and j < nb:
        if a[i] > b[j]:
            out.push_back(a[i])
            i += 1
        elif a[i] < b[j]:
            out.push_back(b[j])
            j += 1
        else:
            i += 1
            j += 1
    while i < na:
        out.push_back(a[i])
        i += 1
    while j < nb:
        out.push_back(b[j])
        j += 1


def twist_reduce(const int64_t[:, ::1] faces, const int64_t[::1] col_rank,
                 unsigned char[::1] skip, int64_t n_total):
    cdef Py_ssize_t ncols = faces.shape[0], width = faces.shape[1]
    cdef Py_ssize_t j, k
    cdef int64_t r, p, s
    cdef vector[vector[int64_t]] store
    cdef vector[int64_t] col, tmp
    cdef vector[int64_t] births, deaths, zeros
    cdef cnp.ndarray[int64_t, ndim=1] slot_arr = np.full(n_total, -1, dtype=np.int64)
    cdef int64_t[::1] slot = slot_arr

    with nogil:
        for j in range(ncols):
            r = col_rank[j]
            if skip[r]:
                continue
            col.clear()
            for k in range(width):
                col.push_back(faces[j, k])
            while col.size() > 0:
                p = col[0]
                s = slot[p]
                if s < 0:
                    break
                _symdiff(col, store[s], tmp)
                col.swap(tmp)
            if col.size() > 0:
                p = col[0]
                slot[p] = <int64_t>store.size()
                store.push_back(col)
                skip[p] = 1
                births.push_back(p)
                deaths.push_back(r)
            else:
                zeros.push_back(r)

    return _to_array(births), _to_array(deaths), _to_array(zeros)


cdef inline int64_t _find(int64_t[::1] parent, int64_t x) noexcept nogil:
    cdef int64_t root = x, nxt
    while parent[root] != root:
        root = parent[root]
    while x != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


def union_find_pairs(const int64_t[:, ::1] edges, const int64_t[::1] edge_rank,
                     int64_t n_total):
    cdef Py_ssize_t j, n = edges.shape[0]
    cdef int64_t ru, rv, young, old
    cdef vector[int64_t] births, deaths, positive
    cdef cnp.ndarray[int64_t, ndim=1] parent_arr = np.arange(n_total, dtype=np.int64)
    cdef int64_t[::1] parent = parent_arr

    with nogil:
        for j in range(n):
            ru = _find(parent, edges[j, 0])
            rv = _find(parent, edges[j, 1])
            if ru == rv:
                positive.push_back(edge_rank[j])
                continue
            if ru > rv:
                young = ru
                old = rv
            else:
                young = rv
                old = ru
            parent[young] = old
            births.push_back(young)
            deaths.push_back(edge_rank[j])

    return _to_array(births), _to_array(deaths), _to_array(positive)


cdef object _to_array(vector[int64_t]& v):
    cdef Py_ssize_t i, n = v.size()
    cdef cnp.ndarray[int64_t, ndim=1] out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = v[i]
    return out
