import struct
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from airtree import Spacing, VoxelMask


@pytest.fixture
def rng():
    return np.random.default_rng(20220831)


def make_mask(data, spacing=(1.0, 1.0, 1.0)) -> VoxelMask:
    return VoxelMask(np.asarray(data, dtype=bool), Spacing(*spacing))


def random_mask(rng, dims, density=0.4, spacing=(1.0, 1.0, 1.0)) -> VoxelMask:
    return make_mask(rng.random(dims) < density, spacing)


def line_mask(n, axis=2, dims=None, spacing=(1.0, 1.0, 1.0)):
    """A straight 1-voxel line of n voxels along an axis, 1-voxel margin."""
    if dims is None:
        dims = [5, 5, 5]
        dims[axis] = n + 2
    data = np.zeros(dims, dtype=bool)
    index = [2, 2, 2]
    index[axis] = slice(1, n + 1)
    data[tuple(index)] = True
    return make_mask(data, spacing)


def write_nifti(path, values, spacing=(1.0, 1.0, 1.0), datatype=2, gzipped=False):
    """Hand-rolled NIfTI-1 writer, independent of the package writer."""
    codes = {2: "u1", 4: "i2", 8: "i4", 16: "f4", 64: "f8"}
    bitpix = {2: 8, 4: 16, 8: 32, 16: 32, 64: 64}
    arr = np.asarray(values).astype(codes[datatype])
    nx, ny, nz = arr.shape
    hdr = bytearray(348)
    struct.pack_into("<i", hdr, 0, 348)
    struct.pack_into("<8h", hdr, 40, 3, nx, ny, nz, 1, 1, 1, 1)
    struct.pack_into("<2h", hdr, 70, datatype, bitpix[datatype])
    struct.pack_into("<8f", hdr, 76, 1.0, *spacing, 0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<f", hdr, 108, 352.0)
    hdr[344:348] = b"n+1\x00"
    blob = bytes(hdr) + b"\x00" * 4 + arr.tobytes(order="F")
    if gzipped:
        import gzip

        blob = gzip.compress(blob)
    Path(path).write_bytes(blob)
    return Path(path)
