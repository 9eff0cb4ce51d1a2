# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled Damerau-Levenshtein kernel (Lowrance-Wagner algorithm).

Operates on byte strings; the public wrapper in ``colexgame.editdist``
handles encoding and falls back to the pure-Python kernel for non-ASCII
input. Semantics must match ``colexgame._editdist_py`` exactly.
"""

from libc.stdlib cimport free, malloc
from libc.string cimport memset


def damerau_levenshtein_bytes(bytes a, bytes b):
    cdef const unsigned char *sa = a
    cdef const unsigned char *sb = b
    cdef Py_ssize_t la = len(a)
    cdef Py_ssize_t lb = len(b)
    if la == lb and a == b:
        return 0
    if la == 0:
        return lb
    if lb == 0:
        return la

    cdef Py_ssize_t rows = la + 2
    cdef Py_ssize_t cols = lb + 2
    cdef int maxdist = <int> (la + lb)
    cdef int *d = <int *> malloc(rows * cols * sizeof(int))
    if d == NULL:
        raise MemoryError()
    cdef int last_row[256]
    cdef Py_ssize_t i, j, k, l, last_col
    cdef int cost, val, cand
    try:
        for i in range(rows * cols):
            d[i] = maxdist
        for i in range(la + 1):
            d[(i + 1) * cols + 1] = <int> i
        for j in range(lb + 1):
            d[cols + j + 1] = <int> j
        memset(last_row, 0, sizeof(last_row))

        for i in range(1, la + 1):
            last_col = 0
            for j in range(1, lb + 1):
                k = last_row[sb[j - 1]]
                l = last_col
                if sa[i - 1] == sb[j - 1]:
                    cost = 0
                    last_col = j
                else:
                    cost = 1
                val = d[i * cols + j] + cost
                cand = d[(i + 1) * cols + j] + 1
                if cand < val:
                    val = cand
                cand = d[i * cols + j + 1] + 1
                if cand < val:
                    val = cand
                cand = d[k * cols + l] + <int> (i - k - 1) + 1 + <int> (j - l - 1)
                if cand < val:
                    val = cand
                d[(i + 1) * cols + j + 1] = val
            last_row[sa[i - 1]] = <int> i
        return d[(la + 1) * cols + lb + 1]
    finally:
        free(d)
