"""Binary segmentation volumes with physical voxel spacing.

Two on-disk encodings are supported:

* NIfTI-1 (``.nii`` / ``.nii.gz``), restricted to the subset needed for
  binary masks: datatype codes 2 (uint8), 4 (int16), 8 (int32), 16
  (float32) and 64 (float64).  Orientation (qform/sform) is ignored; the
  metrics are orientation invariant.
* A minimal raw format (``.tbm``): ``"TBM1"`` magic, grid dims as
  little-endian u32, spacing as little-endian f32, then one byte per
  voxel ({0,1}) in x-fastest order.

In-memory masks are boolean arrays of shape (nx, ny, nz) stored
Fortran-contiguous, so the memory layout matches the x-fastest file
order and the linear index ``x + nx*y + nx*ny*z`` used for scan-order
tie-breaking throughout the package.
"""

from __future__ import annotations

import gzip
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MaskFormatError, ShapeMismatchError

log = logging.getLogger(__name__)

SPACING_TOLERANCE_MM = 1e-4

_NIFTI_DTYPES = {2: "u1", 4: "i2", 8: "i4", 16: "f4", 64: "f8"}
_NIFTI_BITPIX = {2: 8, 4: 16, 8: 32, 16: 32, 64: 64}
_NIFTI_MAGICS = (b"n+1\x00", b"ni1\x00")
_TBM_MAGIC = b"TBM1"


@dataclass(frozen=True)
class Spacing:
    """Physical voxel size in millimeters along x, y, z."""

    dx: float
    dy: float
    dz: float

    def __post_init__(self):
        for name, v in (("dx", self.dx), ("dy", self.dy), ("dz", self.dz)):
            if not (math.isfinite(v) and v > 0):
                raise MaskFormatError(f"spacing component {name}={v!r} must be positive and finite")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.dz)

    def step_mm(self, delta) -> float:
        """Physical length of a voxel-index step (dx_vox, dy_vox, dz_vox)."""
        return math.sqrt(
            (delta[0] * self.dx) ** 2 + (delta[1] * self.dy) ** 2 + (delta[2] * self.dz) ** 2
        )


class VoxelMask:
    """Immutable binary occupancy grid with anisotropic spacing."""

    __slots__ = ("data", "spacing")

    def __init__(self, data: np.ndarray, spacing: Spacing):
        data = np.asfortranarray(data, dtype=bool)
        if data.ndim != 3:
            raise MaskFormatError(f"mask must be 3-D, got shape {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", spacing)

    def __setattr__(self, name, value):
        raise AttributeError("VoxelMask is immutable")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def total_voxels(self) -> int:
        return int(self.data.size)

    @property
    def foreground_count(self) -> int:
        return int(np.count_nonzero(self.data))

    def flat(self) -> np.ndarray:
        """Flattened view in x-fastest (scan) order."""
        return self.data.ravel(order="F")

    def with_data(self, data: np.ndarray) -> "VoxelMask":
        return VoxelMask(data, self.spacing)

    def __eq__(self, other) -> bool:
        if not isinstance(other, VoxelMask):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.spacing == other.spacing
            and bool(np.array_equal(self.data, other.data))
        )


@dataclass(frozen=True)
class ConfusionCounts:
    """Voxel-level confusion tallies; always sums to the grid size."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def binarize(values: np.ndarray, threshold: float = 0.0) -> np.ndarray:
    """Foreground is strictly greater than the threshold (NaN is background)."""
    with np.errstate(invalid="ignore"):
        return values > threshold


def _read_file(path: Path) -> bytes:
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _parse_nifti_header(raw: bytes, path: Path):
    if len(raw) < 348:
        raise MaskFormatError(f"{path}: file shorter than a NIfTI-1 header")
    for bo in ("<", ">"):
        (sizeof_hdr,) = struct.unpack_from(bo + "i", raw, 0)
        if sizeof_hdr == 348:
            break
    else:
        raise MaskFormatError(f"{path}: sizeof_hdr is not 348 in either byte order")
    magic = raw[344:348]
    if magic not in _NIFTI_MAGICS:
        raise MaskFormatError(f"{path}: bad magic {magic!r}")
    dim = struct.unpack_from(bo + "8h", raw, 40)
    datatype, bitpix = struct.unpack_from(bo + "2h", raw, 70)
    pixdim = struct.unpack_from(bo + "8f", raw, 76)
    (vox_offset,) = struct.unpack_from(bo + "f", raw, 108)

    ndim = dim[0]
    if not 3 <= ndim <= 7:
        raise MaskFormatError(f"{path}: dim[0]={ndim}, need a 3-D volume")
    if any(d != 1 for d in dim[4 : ndim + 1]):
        raise MaskFormatError(f"{path}: higher dimensions present (dim={dim[: ndim + 1]})")
    dims = tuple(int(d) for d in dim[1:4])
    if any(d <= 0 for d in dims):
        raise MaskFormatError(f"{path}: non-positive grid dims {dims}")
    if datatype not in _NIFTI_DTYPES:
        raise MaskFormatError(f"{path}: unsupported datatype code {datatype}")
    if bitpix != _NIFTI_BITPIX[datatype]:
        raise MaskFormatError(f"{path}: bitpix {bitpix} inconsistent with datatype {datatype}")
    for i in (1, 2, 3):
        if not (math.isfinite(pixdim[i]) and pixdim[i] > 0):
            raise MaskFormatError(f"{path}: non-positive pixdim[{i}] = {pixdim[i]!r}")
    spacing = Spacing(float(pixdim[1]), float(pixdim[2]), float(pixdim[3]))
    return bo, dims, datatype, spacing, magic, int(vox_offset)


def _load_nifti(path: Path, threshold: float) -> VoxelMask:
    raw = _read_file(path)
    bo, dims, datatype, spacing, magic, vox_offset = _parse_nifti_header(raw, path)
    if magic == b"ni1\x00":
        # header-only file; payload lives in a sibling .img(.gz)
        for ext in (".img", ".img.gz"):
            img = path.with_name(path.name.split(".")[0] + ext)
            if img.exists():
                raw = _read_file(img)
                vox_offset = 0
                break
        else:
            raise MaskFormatError(f"{path}: no .img payload file found")
    dtype = np.dtype(bo + _NIFTI_DTYPES[datatype])
    need = int(np.prod(dims)) * dtype.itemsize
    if vox_offset < (348 if magic == b"n+1\x00" else 0):
        raise MaskFormatError(f"{path}: vox_offset {vox_offset} inside the header")
    payload = raw[vox_offset : vox_offset + need]
    if len(payload) < need:
        raise MaskFormatError(
            f"{path}: payload holds {len(payload)} bytes, header dims need {need}"
        )
    values = np.frombuffer(payload, dtype=dtype).reshape(dims, order="F")
    return VoxelMask(binarize(values, threshold), spacing)


def _load_tbm(path: Path, threshold: float) -> VoxelMask:
    raw = path.read_bytes()
    if raw[:4] != _TBM_MAGIC:
        raise MaskFormatError(f"{path}: bad magic {raw[:4]!r}, expected {_TBM_MAGIC!r}")
    if len(raw) < 28:
        raise MaskFormatError(f"{path}: truncated header")
    nx, ny, nz = struct.unpack_from("<3I", raw, 4)
    dx, dy, dz = struct.unpack_from("<3f", raw, 16)
    if min(nx, ny, nz) == 0:
        raise MaskFormatError(f"{path}: zero-sized grid ({nx},{ny},{nz})")
    spacing = Spacing(dx, dy, dz)
    need = nx * ny * nz
    payload = raw[28 : 28 + need]
    if len(payload) < need:
        raise MaskFormatError(f"{path}: payload holds {len(payload)} bytes, dims need {need}")
    values = np.frombuffer(payload, dtype=np.uint8)
    bad = values[(values != 0) & (values != 1)]
    if bad.size:
        raise MaskFormatError(f"{path}: payload byte {int(bad[0])} outside {{0,1}}")
    values = values.reshape((nx, ny, nz), order="F")
    return VoxelMask(binarize(values, threshold), spacing)


def load_mask(path, binarize_threshold: float = 0.0) -> VoxelMask:
    """Read a mask from NIfTI-1 or the internal raw format, binarizing on load."""
    path = Path(path)
    if not path.is_file():
        raise MaskFormatError(f"{path}: not a readable file")
    head = path.read_bytes()[:4] if path.stat().st_size >= 4 else b""
    if head == _TBM_MAGIC:
        return _load_tbm(path, binarize_threshold)
    return _load_nifti(path, binarize_threshold)


def save_mask(mask: VoxelMask, path) -> None:
    """Write a mask; the format is chosen from the file extension."""
    path = Path(path)
    name = path.name.lower()
    if name.endswith(".tbm"):
        _save_tbm(mask, path)
    elif name.endswith(".nii") or name.endswith(".nii.gz"):
        _save_nifti(mask, path)
    else:
        raise MaskFormatError(f"{path}: unknown output extension (use .tbm, .nii or .nii.gz)")


def _save_tbm(mask: VoxelMask, path: Path) -> None:
    nx, ny, nz = mask.dims
    sp = mask.spacing
    header = _TBM_MAGIC + struct.pack("<3I", nx, ny, nz) + struct.pack("<3f", sp.dx, sp.dy, sp.dz)
    path.write_bytes(header + mask.data.astype(np.uint8).tobytes(order="F"))


def _save_nifti(mask: VoxelMask, path: Path) -> None:
    nx, ny, nz = mask.dims
    sp = mask.spacing
    hdr = bytearray(348)
    struct.pack_into("<i", hdr, 0, 348)
    struct.pack_into("<8h", hdr, 40, 3, nx, ny, nz, 1, 1, 1, 1)
    struct.pack_into("<2h", hdr, 70, 2, 8)  # uint8
    struct.pack_into("<8f", hdr, 76, 1.0, sp.dx, sp.dy, sp.dz, 0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<f", hdr, 108, 352.0)
    hdr[344:348] = b"n+1\x00"
    blob = bytes(hdr) + b"\x00" * 4 + mask.data.astype(np.uint8).tobytes(order="F")
    if path.name.lower().endswith(".gz"):
        # mtime pinned so identical masks produce identical bytes
        path.write_bytes(gzip.compress(blob, mtime=0))
    else:
        path.write_bytes(blob)


def shape_check(gt: VoxelMask, pred: VoxelMask) -> None:
    """Refuse mismatched grids; tolerate (but report) small spacing drift.

    Spacing always comes from the ground-truth mask afterwards.
    """
    if gt.dims != pred.dims:
        raise ShapeMismatchError(f"grid dims differ: ground truth {gt.dims} vs prediction {pred.dims}")
    drift = max(
        abs(a - b) for a, b in zip(gt.spacing.as_tuple(), pred.spacing.as_tuple())
    )
    if drift > SPACING_TOLERANCE_MM:
        log.warning(
            "spacing differs by %.6g mm (gt %s vs pred %s); using ground-truth spacing",
            drift,
            gt.spacing.as_tuple(),
            pred.spacing.as_tuple(),
        )


def confusion(pred: VoxelMask, gt: VoxelMask) -> ConfusionCounts:
    """Voxel confusion counts between a prediction and the reference."""
    if pred.dims != gt.dims:
        raise ShapeMismatchError(f"grid dims differ: {pred.dims} vs {gt.dims}")
    p, g = pred.data, gt.data
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p)) - tp
    fn = int(np.count_nonzero(g)) - tp
    tn = p.size - tp - fp - fn
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)
