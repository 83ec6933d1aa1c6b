# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled thinning kernel; mirrors kernels.pure exactly."""

import numpy as np

cimport numpy as cnp

from . import tables

cnp.import_array()

cdef int CENTER = 13

# static neighborhood tables, filled once from kernels.tables
cdef int D26X[26]
cdef int D26Y[26]
cdef int D26Z[26]
cdef int FACEX[6]
cdef int FACEY[6]
cdef int FACEZ[6]
cdef int FACE_CELLS[6]
cdef int ADJ26_PTR[28]
cdef int ADJ26_IDX[676]
cdef int ADJ6_PTR[28]
cdef int ADJ6_IDX[676]


def _init_tables():
    cdef int i, j, n
    for i, (dx, dy, dz) in enumerate(tables.OFFSETS26):
        D26X[i] = dx
        D26Y[i] = dy
        D26Z[i] = dz
    for i, (dx, dy, dz) in enumerate(tables.FACE_SWEEP):
        FACEX[i] = dx
        FACEY[i] = dy
        FACEZ[i] = dz
    for i, c in enumerate(tables.FACE_CELLS):
        FACE_CELLS[i] = c
    n = 0
    for i in range(27):
        ADJ26_PTR[i] = n
        for j in tables.ADJ26[i]:
            ADJ26_IDX[n] = j
            n += 1
    ADJ26_PTR[27] = n
    n = 0
    for i in range(27):
        ADJ6_PTR[i] = n
        for j in tables.ADJ6_N18[i]:
            ADJ6_IDX[n] = j
            n += 1
    ADJ6_PTR[27] = n


_init_tables()


cdef inline int _count26(unsigned char* flat, long idx, long* noff) noexcept nogil:
    cdef int k, n = 0
    for k in range(26):
        if flat[idx + noff[k]] != 0:
            n += 1
    return n


cdef inline bint _is_simple(unsigned char* flat, long idx, long* coff) noexcept nogil:
    cdef unsigned char nb[27]
    cdef unsigned char seen[27]
    cdef int stack[27]
    cdef int c, cur, nxt, top, comps, k
    for c in range(27):
        nb[c] = 1 if flat[idx + coff[c]] != 0 else 0
        seen[c] = 0
    nb[CENTER] = 0

    # one 26-component of foreground in the 26-neighborhood
    comps = 0
    for c in range(27):
        if nb[c] != 0 and seen[c] == 0:
            comps += 1
            if comps > 1:
                return False
            top = 0
            stack[top] = c
            top += 1
            seen[c] = 1
            while top > 0:
                top -= 1
                cur = stack[top]
                for k in range(ADJ26_PTR[cur], ADJ26_PTR[cur + 1]):
                    nxt = ADJ26_IDX[k]
                    if nb[nxt] != 0 and seen[nxt] == 0:
                        seen[nxt] = 1
                        stack[top] = nxt
                        top += 1
    if comps != 1:
        return False

    # one 6-component of background in the 18-neighborhood touching a face
    for c in range(27):
        seen[c] = 0
    comps = 0
    for k in range(6):
        c = FACE_CELLS[k]
        if nb[c] == 0 and seen[c] == 0:
            comps += 1
            if comps > 1:
                return False
            top = 0
            stack[top] = c
            top += 1
            seen[c] = 1
            while top > 0:
                top -= 1
                cur = stack[top]
                for j in range(ADJ6_PTR[cur], ADJ6_PTR[cur + 1]):
                    nxt = ADJ6_IDX[j]
                    if nb[nxt] == 0 and seen[nxt] == 0:
                        seen[nxt] = 1
                        stack[top] = nxt
                        top += 1
    return comps == 1


def thin_inplace(cnp.uint8_t[::1] flat, int sx, int sy, int sz):
    """Same contract as kernels.pure.thin_inplace."""
    cdef unsigned char* img = &flat[0]
    cdef long coff[27]
    cdef long noff[26]
    cdef long foff[6]
    cdef int k, c, dx, dy, dz
    cdef long plane = <long>sx * sy

    c = 0
    for dz in range(-1, 2):
        for dy in range(-1, 2):
            for dx in range(-1, 2):
                coff[c] = dx + sx * dy + plane * dz
                c += 1
    for k in range(26):
        noff[k] = D26X[k] + sx * D26Y[k] + plane * D26Z[k]
    for k in range(6):
        foff[k] = FACEX[k] + sx * FACEY[k] + plane * FACEZ[k]

    fg_arr = np.flatnonzero(np.asarray(flat)).astype(np.int64)
    cdef cnp.int64_t[::1] fg = fg_arr
    cand_arr = np.empty(fg_arr.size, dtype=np.int64)
    cdef cnp.int64_t[::1] cand = cand_arr

    cdef long n_fg = fg.shape[0]
    cdef long i, w, idx, n_cand, deleted
    cdef int face, iterations = 0
    cdef bint changed = True

    with nogil:
        while changed:
            changed = False
            iterations += 1
            for face in range(6):
                if n_fg == 0:
                    break
                n_cand = 0
                for i in range(n_fg):
                    idx = fg[i]
                    if img[idx + foff[face]] != 0:
                        continue
                    if _count26(img, idx, noff) <= 1:
                        continue
                    if not _is_simple(img, idx, coff):
                        continue
                    cand[n_cand] = idx
                    n_cand += 1
                deleted = 0
                for i in range(n_cand):
                    idx = cand[i]
                    if _count26(img, idx, noff) <= 1:
                        continue
                    if _is_simple(img, idx, coff):
                        img[idx] = 0
                        deleted += 1
                if deleted != 0:
                    changed = True
                    w = 0
                    for i in range(n_fg):
                        if img[fg[i]] != 0:
                            fg[w] = fg[i]
                            w += 1
                    n_fg = w
    return iterations
