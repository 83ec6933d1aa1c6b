"""Pure NumPy/Python thinning backend.

Bit-identical to the compiled backend; used when the extension is not
built or when ``AIRTREE_KERNELS=python`` forces it.  Candidate screening
is vectorized, the per-voxel simplicity test runs in Python, so large
volumes are much slower here (see benchmarks/).
"""

from __future__ import annotations

import numpy as np

from . import tables

_BACKEND_NAME = "python"


def _is_simple(flat: np.ndarray, idx: int, cell_off) -> bool:
    """Simple-point test for 26-connected foreground / 6-connected background.

    Deletable iff the foreground in the 26-neighborhood forms exactly one
    26-component and the background in the 18-neighborhood forms exactly
    one 6-component touching a face neighbor.
    """
    nb = [bool(flat[idx + cell_off[c]]) for c in range(27)]
    nb[tables.CENTER] = False

    seen = [False] * 27
    comps = 0
    for c in range(27):
        if nb[c] and not seen[c]:
            comps += 1
            if comps > 1:
                return False
            stack = [c]
            seen[c] = True
            while stack:
                cur = stack.pop()
                for nxt in tables.ADJ26[cur]:
                    if nb[nxt] and not seen[nxt]:
                        seen[nxt] = True
                        stack.append(nxt)
    if comps != 1:
        return False

    seen = [False] * 27
    comps = 0
    for c in tables.FACE_CELLS:
        if not nb[c] and not seen[c]:
            comps += 1
            if comps > 1:
                return False
            stack = [c]
            seen[c] = True
            while stack:
                cur = stack.pop()
                for nxt in tables.ADJ6_N18[cur]:
                    if not nb[nxt] and not seen[nxt]:
                        seen[nxt] = True
                        stack.append(nxt)
    return comps == 1


def thin_inplace(flat: np.ndarray, sx: int, sy: int, sz: int) -> int:
    """Skeletonize a padded flat uint8 grid in place; returns #iterations.

    ``flat`` is the Fortran-order raveled view of an (sx, sy, sz) volume
    whose outer one-voxel shell is zero.  Each iteration sweeps the six
    face directions in the fixed order; candidates are collected per
    sweep and then re-checked sequentially in scan order so the result
    does not depend on any parallel partitioning.
    """
    cell_off = tables.cell_offsets(sx, sy)
    nbr_off = np.array(tables.neighbor_offsets(sx, sy), dtype=np.int64)
    face_off = tables.face_offsets(sx, sy)

    fg = np.flatnonzero(flat).astype(np.int64)
    iterations = 0
    changed = True
    while changed:
        changed = False
        iterations += 1
        for face in face_off:
            if fg.size == 0:
                break
            # vectorized screen: border voxels of this direction that are not end points
            is_border = flat[fg + face] == 0
            cand = fg[is_border]
            if cand.size:
                counts = np.zeros(cand.size, dtype=np.int64)
                for off in nbr_off:
                    counts += flat[cand + off]
                cand = cand[counts > 1]
            cand = [int(i) for i in cand if _is_simple(flat, int(i), cell_off)]
            deleted = 0
            for idx in cand:
                n = sum(int(flat[idx + off]) for off in nbr_off)
                if n <= 1:
                    continue
                if _is_simple(flat, idx, cell_off):
                    flat[idx] = 0
                    deleted += 1
            if deleted:
                changed = True
                fg = fg[flat[fg] != 0]
    return iterations
