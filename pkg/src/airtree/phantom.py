"""Synthetic bifurcating tube trees with exact centerline ground truth.

Every branch is a straight capsule (cylinder with hemispherical caps), so
per-branch lengths are analytic and every topology metric has an oracle.
Child branches fork symmetrically in a plane that rotates each
generation, which keeps subtrees from colliding; a pairwise clearance
check refuses to emit a phantom whose branches touch anywhere except at
their shared junctions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import PhantomError
from .volume import Spacing, VoxelMask


@dataclass(frozen=True)
class PhantomSpec:
    depth: int = 3
    root_radius_vox: float = 3.0
    radius_decay: float = 0.8
    segment_length_vox: float | tuple = 30.0
    branching_angle_deg: float = 90.0
    dims: tuple[int, int, int] = (224, 224, 192)
    spacing: Spacing = field(default_factory=lambda: Spacing(1.0, 1.0, 1.0))
    rng_seed: int = 0

    def __post_init__(self):
        if self.depth < 0:
            raise PhantomError("depth must be >= 0")
        if not 0 < self.radius_decay <= 1:
            raise PhantomError("radius_decay must lie in (0, 1]")
        if self.root_radius_vox < 1.0:
            raise PhantomError("root radius below one voxel is unrepresentable")
        if not 0 < self.branching_angle_deg < 180:
            raise PhantomError("branching angle must lie in (0, 180) degrees")

    def segment_lengths(self) -> list[float]:
        if isinstance(self.segment_length_vox, (int, float)):
            return [float(self.segment_length_vox)] * (self.depth + 1)
        lengths = [float(v) for v in self.segment_length_vox]
        if len(lengths) != self.depth + 1:
            raise PhantomError(
                f"need {self.depth + 1} per-generation lengths, got {len(lengths)}"
            )
        return lengths

    def radii(self) -> list[float]:
        # decay clamped so no generation drops below one voxel
        return [max(1.0, self.root_radius_vox * self.radius_decay**g) for g in range(self.depth + 1)]

    @property
    def branch_count(self) -> int:
        return 2 ** (self.depth + 1) - 1


@dataclass(frozen=True)
class TubeBranch:
    """Analytic description of one straight branch."""

    index: int
    parent: int  # -1 for the root
    generation: int
    start: tuple[float, float, float]
    end: tuple[float, float, float]
    radius_vox: float

    def direction(self) -> np.ndarray:
        d = np.array(self.end) - np.array(self.start)
        return d / np.linalg.norm(d)

    def length_mm(self, spacing: Spacing) -> float:
        d = np.array(self.end) - np.array(self.start)
        return float(np.linalg.norm(d * np.array(spacing.as_tuple())))


@dataclass
class PhantomTruth:
    mask: VoxelMask
    centerline: list  # per-branch ordered (k, 3) integer voxel paths
    branch_lengths_mm: list
    total_length_mm: float
    branches: list  # TubeBranch metadata, index order
    owner: np.ndarray  # per-voxel owning branch index + 1, 0 = background
    spec: PhantomSpec

    def children_of(self, index: int) -> list[int]:
        return [b.index for b in self.branches if b.parent == index]

    def subtree(self, index: int) -> list[int]:
        out, queue = [], [index]
        while queue:
            i = queue.pop()
            out.append(i)
            queue.extend(self.children_of(i))
        return sorted(out)

    def to_json_dict(self) -> dict:
        return {
            "dims": list(self.spec.dims),
            "spacing_mm": list(self.spec.spacing.as_tuple()),
            "rng_seed": self.spec.rng_seed,
            "total_length_mm": self.total_length_mm,
            "branches": [
                {
                    "index": b.index,
                    "parent": b.parent,
                    "generation": b.generation,
                    "start": list(b.start),
                    "end": list(b.end),
                    "radius_vox": b.radius_vox,
                    "length_mm": self.branch_lengths_mm[b.index],
                }
                for b in self.branches
            ],
        }

    def write_truth_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)


def _rotate(v: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    axis = axis / np.linalg.norm(axis)
    c, s = math.cos(angle), math.sin(angle)
    return v * c + np.cross(axis, v) * s + axis * float(np.dot(axis, v)) * (1 - c)


def _perpendicular(d: np.ndarray, azimuth: float) -> np.ndarray:
    ref = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(d, ref)
    u /= np.linalg.norm(u)
    return _rotate(u, d, azimuth)


def _lattice_children(v: tuple, rng) -> tuple[tuple, tuple]:
    """Fork a lattice direction at 90 degrees, staying on the lattice.

    Axis-aligned parents fork into the two 45-degree diagonals of a
    coordinate plane containing them (the seed picks which plane);
    diagonal parents fork into their two component axes.  Every branch
    direction therefore remains exactly representable as a digital line,
    which keeps the polyline length of the voxelized centerline equal to
    the analytic length.
    """
    nz = [i for i in range(3) if v[i] != 0]
    if len(nz) == 1:
        axis = nz[0]
        others = [i for i in range(3) if i != axis]
        other = others[int(rng.integers(2))]
        c1, c2 = list(v), list(v)
        c1[other] = 1
        c2[other] = -1
        return tuple(c1), tuple(c2)
    i, j = nz
    a, b = [0, 0, 0], [0, 0, 0]
    a[i], b[j] = v[i], v[j]
    return tuple(a), tuple(b)


def _layout_lattice(spec: PhantomSpec, attempt: int) -> list[TubeBranch]:
    lengths = spec.segment_lengths()
    radii = spec.radii()
    rng = np.random.default_rng([spec.rng_seed, attempt])
    nx, ny, _ = spec.dims
    branches: list[TubeBranch] = []
    root_start = (round(nx / 2.0), round(ny / 2.0), 1 + math.ceil(radii[0]))
    queue = [(-1, 0, root_start, (0, 0, 1))]
    while queue:
        parent, gen, start, v = queue.pop(0)
        step = math.sqrt(sum(c * c for c in v))
        m = max(1, round(lengths[gen] / step))  # quantize to whole lattice steps
        end = tuple(start[k] + m * v[k] for k in range(3))
        idx = len(branches)
        branches.append(
            TubeBranch(
                index=idx,
                parent=parent,
                generation=gen,
                start=tuple(float(c) for c in start),
                end=tuple(float(c) for c in end),
                radius_vox=radii[gen],
            )
        )
        if gen < spec.depth:
            for child in _lattice_children(v, rng):
                queue.append((idx, gen + 1, end, child))
    return branches


def _layout_generic(spec: PhantomSpec) -> list[TubeBranch]:
    # continuous layout for non-default branching angles; length oracles
    # are only approximate here (digitization of oblique lines)
    lengths = spec.segment_lengths()
    radii = spec.radii()
    rng = np.random.default_rng(spec.rng_seed)
    half = math.radians(spec.branching_angle_deg) / 2.0
    azimuth0 = float(rng.uniform(-math.pi / 12, math.pi / 12))
    nx, ny, _ = spec.dims
    branches: list[TubeBranch] = []
    root_start = np.array([nx / 2.0, ny / 2.0, 1.0 + radii[0]])
    queue = [(-1, 0, root_start, np.array([0.0, 0.0, 1.0]))]
    while queue:
        parent, gen, start, d = queue.pop(0)
        end = start + d * lengths[gen]
        idx = len(branches)
        branches.append(
            TubeBranch(
                index=idx,
                parent=parent,
                generation=gen,
                start=tuple(float(v) for v in start),
                end=tuple(float(v) for v in end),
                radius_vox=radii[gen],
            )
        )
        if gen < spec.depth:
            axis = _perpendicular(d, azimuth0 + gen * math.radians(105.0))
            for sign in (1.0, -1.0):
                child_dir = _rotate(d, axis, sign * half)
                queue.append((idx, gen + 1, end, child_dir / np.linalg.norm(child_dir)))
    return branches


def _layout_branches(spec: PhantomSpec) -> list[TubeBranch]:
    """Lay out the analytic tree, retrying fork-plane choices on collisions."""
    if abs(spec.branching_angle_deg - 90.0) < 1e-9:
        last_err: PhantomError | None = None
        for attempt in range(64):
            branches = _layout_lattice(spec, attempt)
            try:
                _validate_layout(spec, branches)
                return branches
            except PhantomError as err:
                last_err = err
        raise last_err
    branches = _layout_generic(spec)
    _validate_layout(spec, branches)
    return branches


def _segment_distance(a0, a1, b0, b1, samples: int = 128) -> float:
    """Min distance between two segments via dense sampling.

    The sampled minimum can overestimate the true minimum by at most half
    a sample step per segment; the clearance threshold below absorbs that.
    """
    ts = np.linspace(0.0, 1.0, samples)
    pa = a0 + ts[:, None] * (a1 - a0)
    pb = b0 + ts[:, None] * (b1 - b0)
    diff = pa[:, None, :] - pb[None, :, :]
    return float(np.sqrt((diff * diff).sum(axis=2)).min())


_TIP_RADIUS = 0.6  # tip cone narrows to this, keeping a one-voxel point


# capsule surfaces of non-adjacent branches must be further apart than a
# voxel diagonal or their rasterizations could become 26-connected
_CLEARANCE_VOX = 2.5


def _validate_layout(spec: PhantomSpec, branches: list[TubeBranch]) -> None:
    eps = 1e-9
    for b in branches:
        r = b.radius_vox
        for point in (b.start, b.end):
            for axis in range(3):
                if point[axis] - r < 1.0 - eps or point[axis] + r > spec.dims[axis] - 2.0 + eps:
                    raise PhantomError(
                        f"branch {b.index} (generation {b.generation}) leaves the "
                        f"grid margin at {tuple(round(p, 2) for p in point)}"
                    )
    # non-adjacent branches must stay clear of each other
    pts = {b.index: (np.array(b.start), np.array(b.end)) for b in branches}
    for i, bi in enumerate(branches):
        for bj in branches[i + 1 :]:
            shared = (
                bj.parent == bi.index
                or bi.parent == bj.index
                or (bi.parent == bj.parent and bi.parent >= 0)
            )
            if shared:
                continue
            d = _segment_distance(*pts[bi.index], *pts[bj.index])
            if d <= bi.radius_vox + bj.radius_vox + _CLEARANCE_VOX:
                raise PhantomError(
                    f"branches {bi.index} and {bj.index} come within {d:.2f} voxels"
                )


def _rasterize(spec: PhantomSpec, branches: list[TubeBranch]):
    dims = spec.dims
    mask = np.zeros(dims, dtype=bool, order="F")
    owner = np.zeros(dims, dtype=np.int16, order="F")
    has_children = {b.parent for b in branches if b.parent >= 0}
    for b in branches:  # parents first, so shared voxels belong to the parent
        a = np.array(b.start)
        e = np.array(b.end)
        r = b.radius_vox
        lo = np.maximum(np.floor(np.minimum(a, e) - r - 1).astype(int), 0)
        hi = np.minimum(np.ceil(np.maximum(a, e) + r + 1).astype(int), np.array(dims) - 1)
        xs = np.arange(lo[0], hi[0] + 1)
        ys = np.arange(lo[1], hi[1] + 1)
        zs = np.arange(lo[2], hi[2] + 1)
        gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
        px = gx - a[0]
        py = gy - a[1]
        pz = gz - a[2]
        u = e - a
        seg_len2 = float(np.dot(u, u))
        seg_len = math.sqrt(seg_len2)
        t = (px * u[0] + py * u[1] + pz * u[2]) / seg_len2
        dx = px - t * u[0]
        dy = py - t * u[1]
        dz = pz - t * u[2]
        dist2 = dx * dx + dy * dy + dz * dz
        # Leaf tips (and the root base) taper through a cone into a
        # one-voxel spike.  A one-voxel line cannot erode under simple-
        # point thinning (its tip is a protected end point, its interior
        # is non-simple), so the skeleton terminates exactly at the
        # analytic endpoint instead of overshooting or eroding.
        rlim = np.full_like(t, r)
        spike = min((2.0 * r + 1.0) / seg_len, 0.3)
        cone = min(2.0 * r / seg_len, 0.25)
        if b.index not in has_children:
            zone = t > 1.0 - spike
            rlim[zone] = _TIP_RADIUS
            zone = (t > 1.0 - spike - cone) & ~zone
            rlim[zone] = _TIP_RADIUS + (r - _TIP_RADIUS) * ((1.0 - spike) - t[zone]) / cone
        if b.parent < 0:
            zone = t < spike
            rlim[zone] = _TIP_RADIUS
            zone = (t < spike + cone) & ~zone
            rlim[zone] = _TIP_RADIUS + (r - _TIP_RADIUS) * (t[zone] - spike) / cone
        inside = (dist2 <= rlim * rlim) & (t >= 0.0) & (t <= 1.0)
        if b.index in has_children:
            ex, ey, ez = gx - e[0], gy - e[1], gz - e[2]
            inside |= ex * ex + ey * ey + ez * ez <= r * r
        # the exact centerline voxels are always part of the mask
        path = _voxel_path(b.start, b.end)
        keep = np.all((path >= lo) & (path <= hi), axis=1)
        pw = path[keep] - lo
        inside[pw[:, 0], pw[:, 1], pw[:, 2]] = True
        window = (slice(lo[0], hi[0] + 1), slice(lo[1], hi[1] + 1), slice(lo[2], hi[2] + 1))
        mask[window] |= inside
        ow = owner[window]
        ow[inside & (ow == 0)] = b.index + 1
        owner[window] = ow
    return mask, owner


def _voxel_path(start, end) -> np.ndarray:
    """26-connected integer path along a straight segment."""
    a = np.array(start)
    e = np.array(end)
    steps = int(math.ceil(2.0 * float(np.max(np.abs(e - a))))) + 1
    ts = np.linspace(0.0, 1.0, max(steps, 2))
    pts = np.rint(a + ts[:, None] * (e - a)).astype(np.int32)
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    return pts[keep]


def _trim_to_mask(path: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Drop path endpoints whose rounded voxel fell outside the flat tube ends."""
    inside = mask[path[:, 0], path[:, 1], path[:, 2]]
    a, z = 0, len(path)
    while a < z and not inside[a]:
        a += 1
    while z > a and not inside[z - 1]:
        z -= 1
    if not inside[a:z].all():
        raise PhantomError("centerline leaves the rasterized tube mid-branch")
    return path[a:z]


def generate(spec: PhantomSpec) -> PhantomTruth:
    """Build the phantom mask plus exact centerline/length ground truth."""
    branches = _layout_branches(spec)
    mask, owner = _rasterize(spec, branches)
    spacing = spec.spacing
    centerline = [_trim_to_mask(_voxel_path(b.start, b.end), mask) for b in branches]
    lengths = [b.length_mm(spacing) for b in branches]
    return PhantomTruth(
        mask=VoxelMask(mask, spacing),
        centerline=centerline,
        branch_lengths_mm=lengths,
        total_length_mm=float(sum(lengths)),
        branches=branches,
        owner=owner,
        spec=spec,
    )


def degrade(truth: PhantomTruth, mode: str, **params) -> VoxelMask:
    """Controlled corruption of a phantom prediction.

    Modes: ``erase_subtree`` (drop a branch and all its descendants),
    ``break_branch`` (zero a gap in the middle of a branch), ``dilate``
    (grow by 26-neighborhood steps), ``noise_blob`` (add a detached
    component).
    """
    data = np.array(truth.mask.data)  # writable copy
    if mode == "erase_subtree":
        ids = truth.subtree(_branch_id(truth, params))
        data[np.isin(truth.owner, [i + 1 for i in ids])] = False
    elif mode == "break_branch":
        bid = _branch_id(truth, params)
        gap = float(params.get("gap_vox", 3.0))
        b = truth.branches[bid]
        a = np.array(b.start)
        u = np.array(b.end) - a
        seg_len = float(np.linalg.norm(u))
        if gap >= seg_len:
            raise PhantomError(f"gap {gap} exceeds branch {bid} length {seg_len:.1f}")
        sel = np.argwhere(truth.owner == bid + 1)
        t = (sel - a) @ u / (seg_len * seg_len)
        half = gap / (2.0 * seg_len)
        cut = sel[(t > 0.5 - half) & (t <= 0.5 + half)]
        data[cut[:, 0], cut[:, 1], cut[:, 2]] = False
    elif mode == "dilate":
        steps = int(params.get("steps", 1))
        data = ndimage.binary_dilation(data, structure=np.ones((3, 3, 3), bool), iterations=steps)
    elif mode == "noise_blob":
        size = int(params.get("size_vox", 27))
        data = _add_blob(truth, data, size)
    else:
        raise PhantomError(f"unknown degradation mode {mode!r}")
    return VoxelMask(data, truth.mask.spacing)


def _branch_id(truth: PhantomTruth, params) -> int:
    bid = params.get("branch_id")
    if bid is None or not 0 <= int(bid) < len(truth.branches):
        raise PhantomError(f"invalid branch id {bid!r} (tree has {len(truth.branches)} branches)")
    return int(bid)


def _add_blob(truth: PhantomTruth, data: np.ndarray, size: int) -> np.ndarray:
    if size < 1:
        raise PhantomError("blob size must be positive")
    main = int(data.sum())
    if size >= main:
        raise PhantomError(f"blob of {size} voxels would not be smaller than the tree ({main})")
    side = int(math.ceil(size ** (1.0 / 3.0)))
    dims = truth.spec.dims
    if side + 4 > min(dims):
        raise PhantomError("blob does not fit in the grid")
    # first corner region (fixed order) whose padded window is empty
    anchors = [
        tuple(1 if c == 0 else dims[k] - side - 2 for k, c in enumerate(corner))
        for corner in [(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)]
    ]
    for ax, ay, az in anchors:
        window = data[
            max(ax - 2, 0) : ax + side + 2,
            max(ay - 2, 0) : ay + side + 2,
            max(az - 2, 0) : az + side + 2,
        ]
        if not window.any():
            blob = np.zeros((side, side, side), dtype=bool, order="F")
            blob.ravel(order="F")[:size] = True
            out = np.array(data)
            out[ax : ax + side, ay : ay + side, az : az + side] |= blob
            return out
    raise PhantomError("no free corner found for the noise blob")
