"""Voxel-grid topology: components, thinning skeletonization, branches.

Conventions used throughout: 26-connectivity for foreground, 6 for
background; scan order is x-fastest (linear index ``x + nx*y + nx*ny*z``),
which fixes label numbering, tie-breaking, and thinning determinism.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from ..errors import EvaluationError
from ..volume import Spacing, VoxelMask
from . import kernels

_STRUCT26 = np.ones((3, 3, 3), dtype=bool)

NEIGHBOR_STEPS = tuple(
    (dx, dy, dz)
    for dz in (-1, 0, 1)
    for dy in (-1, 0, 1)
    for dx in (-1, 0, 1)
    if (dx, dy, dz) != (0, 0, 0)
)


def flat_indices(coords: np.ndarray, dims) -> np.ndarray:
    """Scan-order linear indices of (n, 3) voxel coordinates."""
    nx, ny, _ = dims
    c = np.asarray(coords, dtype=np.int64)
    if c.size == 0:
        return np.zeros(0, dtype=np.int64)
    return c[:, 0] + nx * (c[:, 1] + ny * c[:, 2])


@dataclass(frozen=True)
class ComponentLabeling:
    """26-connectivity labeling; label numbers follow first-encounter scan order."""

    labels: np.ndarray  # int32, same grid as the mask, 0 = background
    component_sizes: np.ndarray  # voxel count per label, index label-1
    count: int


def label_components(mask: VoxelMask) -> ComponentLabeling:
    labels_t, count = ndimage.label(mask.data.T, structure=_STRUCT26)
    labels = np.asfortranarray(labels_t.T.astype(np.int32, copy=False))
    if count > 1:
        # renumber by first encounter in scan order; scipy's numbering is
        # an implementation detail we do not rely on
        flat = labels.ravel(order="F")
        fg_pos = np.flatnonzero(flat)
        uniq, first = np.unique(flat[fg_pos], return_index=True)
        order = np.argsort(first, kind="stable")
        lut = np.zeros(count + 1, dtype=np.int32)
        lut[uniq[order]] = np.arange(1, count + 1, dtype=np.int32)
        labels = np.asfortranarray(lut[labels])
    sizes = np.bincount(labels.ravel(order="F"), minlength=count + 1)[1:].astype(np.int64)
    return ComponentLabeling(labels=labels, component_sizes=sizes, count=int(count))


def largest_component(mask: VoxelMask) -> VoxelMask:
    """Keep only the biggest component; ties go to the earliest scan-order one."""
    labeling = label_components(mask)
    if labeling.count == 0:
        return mask.with_data(np.zeros(mask.dims, dtype=bool))
    if labeling.count == 1:
        return mask
    best = int(np.argmax(labeling.component_sizes)) + 1  # argmax keeps the lowest label on ties
    return mask.with_data(labeling.labels == best)


@dataclass(frozen=True)
class Branch:
    """A maximal simple centerline path between two terminals.

    ``path`` includes the junction voxel the chain attaches to at either
    end (when the terminal is a junction cluster), so polyline lengths
    cover the step into the junction.  ``owned`` voxels are the chain
    itself; junction voxels are shared and owned by no branch.
    """

    path: np.ndarray  # (k, 3) int32 voxel coordinates, ordered
    owned_slice: tuple[int, int]
    length_mm: float
    start_junction: bool
    end_junction: bool
    is_cycle: bool = False

    @property
    def owned(self) -> np.ndarray:
        a, b = self.owned_slice
        return self.path[a:b]

    @property
    def endpoints(self) -> tuple[tuple[int, int, int], tuple[int, int, int]]:
        return tuple(int(v) for v in self.path[0]), tuple(int(v) for v in self.path[-1])


@dataclass
class SkeletonGraph:
    """Centerline voxels with degrees, terminals, and (once parsed) branches."""

    dims: tuple[int, int, int]
    spacing: Spacing
    voxels: np.ndarray  # (n, 3) int32, scan order
    degree: np.ndarray  # (n,) int32, number of 26-neighbors on the skeleton
    end_points: np.ndarray  # (e, 3) voxels with degree 1
    branch_points: np.ndarray  # (m, 3) one representative per junction cluster
    junction_clusters: list = field(default_factory=list)
    branches: list | None = None
    min_branch_mm: float = 0.0

    @property
    def n_voxels(self) -> int:
        return int(self.voxels.shape[0])

    def to_mask(self) -> VoxelMask:
        data = np.zeros(self.dims, dtype=bool, order="F")
        if self.n_voxels:
            data[self.voxels[:, 0], self.voxels[:, 1], self.voxels[:, 2]] = True
        return VoxelMask(data, self.spacing)

    def to_json_dict(self) -> dict:
        """External JSON layout: branch paths plus a summary block."""
        branches = []
        for b in self.branches or []:
            branches.append(
                {
                    "path": [[int(x), int(y), int(z)] for x, y, z in b.path],
                    "length_mm": b.length_mm,
                    "is_cycle": b.is_cycle,
                }
            )
        return {
            "dims": list(self.dims),
            "spacing_mm": list(self.spacing.as_tuple()),
            "summary": {
                "skeleton_voxels": self.n_voxels,
                "end_points": int(self.end_points.shape[0]),
                "branch_points": int(self.branch_points.shape[0]),
                "branches": len(self.branches) if self.branches is not None else None,
                "total_length_mm": tree_length(self) if self.branches is not None else None,
            },
            "branches": branches,
        }


def _local_grid(voxels: np.ndarray, dims):
    """Padded occupancy of the skeleton bounding box plus index bookkeeping."""
    lo = voxels.min(axis=0) - 1
    shape = voxels.max(axis=0) - lo + 2
    occ = np.zeros(shape, dtype=np.uint8, order="F")
    loc = voxels - lo
    occ[loc[:, 0], loc[:, 1], loc[:, 2]] = 1
    sx, sy = int(shape[0]), int(shape[1])
    flat = occ.ravel(order="F")
    loc_idx = loc[:, 0] + sx * (loc[:, 1].astype(np.int64) + sy * loc[:, 2])
    offsets = np.array([dx + sx * dy + sx * sy * dz for (dx, dy, dz) in NEIGHBOR_STEPS], dtype=np.int64)
    return flat, loc_idx, offsets, lo


def skeleton_from_voxels(voxels: np.ndarray, dims, spacing: Spacing) -> SkeletonGraph:
    """Build the graph layer (degrees, terminals, clusters) over skeleton voxels."""
    voxels = np.asarray(voxels, dtype=np.int32).reshape(-1, 3)
    if voxels.shape[0] == 0:
        empty = np.zeros((0, 3), dtype=np.int32)
        return SkeletonGraph(tuple(dims), spacing, empty, np.zeros(0, np.int32), empty, empty, [])
    order = np.argsort(flat_indices(voxels, dims), kind="stable")
    voxels = np.ascontiguousarray(voxels[order])

    flat, loc_idx, offsets, _ = _local_grid(voxels, dims)
    degree = np.zeros(voxels.shape[0], dtype=np.int32)
    for off in offsets:
        degree += flat[loc_idx + off]

    end_points = voxels[degree == 1]
    junction_rows = np.flatnonzero(degree >= 3)

    clusters: list[np.ndarray] = []
    if junction_rows.size:
        row_of = {int(loc_idx[r]): int(r) for r in junction_rows}
        seen: set[int] = set()
        for r in junction_rows:  # rows are in scan order already
            r = int(r)
            if r in seen:
                continue
            comp = [r]
            seen.add(r)
            stack = [r]
            while stack:
                cur = stack.pop()
                base = int(loc_idx[cur])
                for off in offsets:
                    other = row_of.get(base + int(off))
                    if other is not None and other not in seen:
                        seen.add(other)
                        comp.append(other)
                        stack.append(other)
            clusters.append(voxels[np.sort(np.array(comp))])
    branch_points = (
        np.array([c[0] for c in clusters], dtype=np.int32)
        if clusters
        else np.zeros((0, 3), dtype=np.int32)
    )
    return SkeletonGraph(
        dims=tuple(int(d) for d in dims),
        spacing=spacing,
        voxels=voxels,
        degree=degree,
        end_points=np.ascontiguousarray(end_points),
        branch_points=branch_points,
        junction_clusters=clusters,
    )


def skeletonize(mask: VoxelMask) -> SkeletonGraph:
    """Thin a mask to its one-voxel centerline.

    Iterative boundary thinning that deletes only simple points, sweeping
    the six face directions in the fixed order U, D, N, S, E, W until a
    full iteration removes nothing; end points are never deleted.  The
    result preserves the component count of the input and is idempotent.
    """
    fg = np.argwhere(mask.data)
    if fg.shape[0] == 0:
        return skeleton_from_voxels(np.zeros((0, 3), np.int32), mask.dims, mask.spacing)
    lo = fg.min(axis=0)
    hi = fg.max(axis=0)
    shape = hi - lo + 3
    padded = np.zeros(shape, dtype=np.uint8, order="F")
    padded[1:-1, 1:-1, 1:-1] = mask.data[lo[0] : hi[0] + 1, lo[1] : hi[1] + 1, lo[2] : hi[2] + 1]
    kernels.thin_inplace(padded.ravel(order="F"), int(shape[0]), int(shape[1]), int(shape[2]))
    voxels = np.argwhere(padded).astype(np.int32) + (lo - 1)
    return skeleton_from_voxels(voxels, mask.dims, mask.spacing)


def _polyline_steps(path: np.ndarray, spacing: Spacing) -> np.ndarray:
    """Physical length of each consecutive step along a voxel path."""
    if path.shape[0] < 2:
        return np.zeros(0, dtype=np.float64)
    d = np.diff(path.astype(np.float64), axis=0) * np.array(spacing.as_tuple())
    return np.sqrt((d * d).sum(axis=1))


def polyline_length_mm(path: np.ndarray, spacing: Spacing) -> float:
    return float(_polyline_steps(path, spacing).sum())


def parse_branches(
    skel: SkeletonGraph, spacing: Spacing | None = None, min_branch_mm: float = 0.0
) -> SkeletonGraph:
    """Decompose a skeleton into branches between junctions and end points.

    26-adjacent voxels of degree >= 3 are first merged into junction
    clusters.  Chains of the remaining voxels form the branches; a chain
    touching a cluster gets that junction voxel appended to its path so
    the polyline covers the connecting step.  Junction-free cycles become
    a single closed branch.  Spur branches (one end point, one junction)
    shorter than ``min_branch_mm`` are dissolved into their junction
    cluster; structural junction-to-junction branches are never pruned.
    """
    spacing = spacing or skel.spacing
    voxels = skel.voxels
    n = voxels.shape[0]
    if n == 0:
        return replace(skel, spacing=spacing, branches=[], min_branch_mm=min_branch_mm)

    flat, loc_idx, offsets, _ = _local_grid(voxels, skel.dims)
    row_of = {int(loc_idx[r]): r for r in range(n)}
    is_junction = skel.degree >= 3

    def neighbors(row: int):
        base = int(loc_idx[row])
        for off in offsets:
            other = row_of.get(base + int(off))
            if other is not None:
                yield other

    sflat = flat_indices(voxels, skel.dims)  # ascending: voxels are in scan order
    cluster_of = np.full(n, -1, dtype=np.int64)
    for ci, cluster in enumerate(skel.junction_clusters):
        rows = np.searchsorted(sflat, flat_indices(cluster, skel.dims))
        cluster_of[rows] = ci

    chain_rows = np.flatnonzero(~is_junction)
    chain_set = set(int(r) for r in chain_rows)

    chain_adj: dict[int, list[int]] = {}
    junc_adj: dict[int, list[int]] = {}
    for r in chain_rows:
        r = int(r)
        cn, jn = [], []
        for other in neighbors(r):
            (cn if not is_junction[other] else jn).append(other)
        chain_adj[r] = sorted(cn)
        junc_adj[r] = sorted(jn)

    branches: list[Branch] = []
    visited: set[int] = set()

    def make_branch(chain: list[int], start_j: int | None, end_j: int | None, is_cycle=False):
        rows = list(chain)
        a = 1 if start_j is not None else 0
        path_rows = ([start_j] if start_j is not None else []) + rows + (
            [end_j] if end_j is not None else []
        )
        path = np.ascontiguousarray(voxels[path_rows])
        length = polyline_length_mm(path, spacing)
        branches.append(
            Branch(
                path=path,
                owned_slice=(a, a + len(rows)),
                length_mm=length,
                start_junction=start_j is not None,
                end_junction=end_j is not None,
                is_cycle=is_cycle,
            )
        )

    for r in chain_rows:
        r = int(r)
        if r in visited:
            continue
        comp_deg = len(chain_adj[r])
        if comp_deg == 2:
            continue  # handled when reached from an end; pure cycles picked up later
        # path start: comp_deg 0 or 1
        visited.add(r)
        chain = [r]
        prev, cur = r, (chain_adj[r][0] if chain_adj[r] else None)
        while cur is not None:
            visited.add(cur)
            chain.append(cur)
            nxt = [x for x in chain_adj[cur] if x != prev]
            prev, cur = cur, (nxt[0] if nxt else None)
        first, last = chain[0], chain[-1]
        if len(chain) == 1:
            attached = junc_adj[first]
            start_j = attached[0] if attached else None
            end_j = attached[1] if len(attached) > 1 else None
        else:
            start_j = junc_adj[first][0] if junc_adj[first] else None
            end_j = junc_adj[last][0] if junc_adj[last] else None
        make_branch(chain, start_j, end_j)

    # remaining unvisited chain voxels form junction-free cycles
    for r in chain_rows:
        r = int(r)
        if r in visited:
            continue
        visited.add(r)
        chain = [r]
        prev, cur = r, min(chain_adj[r])
        while cur != r:
            visited.add(cur)
            chain.append(cur)
            nxt = [x for x in chain_adj[cur] if x != prev]
            prev, cur = cur, nxt[0]
        make_branch(chain, None, None, is_cycle=True)

    clusters = [np.array(c, copy=True) for c in skel.junction_clusters]
    if min_branch_mm > 0:
        kept = []
        for b in branches:
            spur = (b.start_junction != b.end_junction) and not b.is_cycle
            if spur and b.length_mm < min_branch_mm:
                # dissolve into the adjacent junction cluster
                jrow_coord = b.path[0] if b.start_junction else b.path[-1]
                jflat = flat_indices(jrow_coord.reshape(1, 3), skel.dims)[0]
                ci = int(cluster_of[int(np.searchsorted(sflat, jflat))])
                merged = np.vstack([clusters[ci], b.owned])
                order = np.argsort(flat_indices(merged, skel.dims), kind="stable")
                clusters[ci] = merged[order]
            else:
                kept.append(b)
        branches = kept

    end_rows = np.flatnonzero(skel.degree == 1)
    end_coords = {tuple(int(v) for v in voxels[r]) for r in end_rows}
    kept_terminals = set()
    for b in branches:
        for t, is_j in ((b.endpoints[0], b.start_junction), (b.endpoints[1], b.end_junction)):
            if not is_j and t in end_coords:
                kept_terminals.add(t)
    end_points = (
        np.array(sorted(kept_terminals, key=lambda t: flat_indices(np.array([t]), skel.dims)[0]), dtype=np.int32)
        if kept_terminals
        else np.zeros((0, 3), dtype=np.int32)
    )

    return SkeletonGraph(
        dims=skel.dims,
        spacing=spacing,
        voxels=voxels,
        degree=skel.degree,
        end_points=end_points,
        branch_points=skel.branch_points,
        junction_clusters=clusters,
        branches=branches,
        min_branch_mm=min_branch_mm,
    )


def tree_length(skel: SkeletonGraph) -> float:
    """Total centerline length in millimeters; requires parsed branches."""
    if skel.branches is None:
        raise EvaluationError("branches not parsed; call parse_branches first")
    return float(sum(b.length_mm for b in skel.branches))
