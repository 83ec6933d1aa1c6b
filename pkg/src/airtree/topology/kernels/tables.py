"""Neighborhood lookup tables shared by the thinning backends.

Cells of the 3x3x3 neighborhood are indexed ``(dx+1) + 3*(dy+1) + 9*(dz+1)``,
so the center voxel is cell 13.
"""

from __future__ import annotations

CENTER = 13


def _cell(dx: int, dy: int, dz: int) -> int:
    return (dx + 1) + 3 * (dy + 1) + 9 * (dz + 1)


def _coords(cell: int) -> tuple[int, int, int]:
    return cell % 3 - 1, (cell // 3) % 3 - 1, cell // 9 - 1


# All 26 neighbor offsets, scan order (x fastest).
OFFSETS26 = tuple(
    (dx, dy, dz)
    for dz in (-1, 0, 1)
    for dy in (-1, 0, 1)
    for dx in (-1, 0, 1)
    if (dx, dy, dz) != (0, 0, 0)
)

# Face directions in the fixed thinning sweep order: U, D, N, S, E, W.
# U/D move along +z/-z, N/S along -y/+y, E/W along +x/-x.
FACE_SWEEP = (
    (0, 0, 1),
    (0, 0, -1),
    (0, -1, 0),
    (0, 1, 0),
    (1, 0, 0),
    (-1, 0, 0),
)

FACE_CELLS = tuple(_cell(*d) for d in FACE_SWEEP)

# Cells of the 18-neighborhood (faces + edges, no corners).
N18_CELLS = tuple(
    c for c in range(27) if c != CENTER and sum(abs(v) for v in _coords(c)) <= 2
)
_N18_SET = frozenset(N18_CELLS)


def _adjacent26(a: int, b: int) -> bool:
    ca, cb = _coords(a), _coords(b)
    return a != b and all(abs(x - y) <= 1 for x, y in zip(ca, cb))


def _adjacent6(a: int, b: int) -> bool:
    ca, cb = _coords(a), _coords(b)
    return sum(abs(x - y) for x, y in zip(ca, cb)) == 1


# 26-adjacency between non-center cells (foreground connectivity test).
ADJ26 = tuple(
    tuple(b for b in range(27) if b != CENTER and _adjacent26(a, b))
    if a != CENTER
    else ()
    for a in range(27)
)

# 6-adjacency restricted to the 18-neighborhood (background connectivity test).
ADJ6_N18 = tuple(
    tuple(b for b in _N18_SET if _adjacent6(a, b)) if a in _N18_SET else ()
    for a in range(27)
)


def cell_offsets(sx: int, sy: int):
    """Flat-index deltas of all 27 cells for an (sx, sy, sz) Fortran grid."""
    return [dx + sx * dy + sx * sy * dz for dz in (-1, 0, 1) for dy in (-1, 0, 1) for dx in (-1, 0, 1)]


def neighbor_offsets(sx: int, sy: int):
    """Flat-index deltas of the 26 neighbors, scan order."""
    return [dx + sx * dy + sx * sy * dz for (dx, dy, dz) in OFFSETS26]


def face_offsets(sx: int, sy: int):
    """Flat-index deltas of the 6 sweep directions, in sweep order."""
    return [dx + sx * dy + sx * sy * dz for (dx, dy, dz) in FACE_SWEEP]
