"""Disk cache for reference skeletons, keyed by ground-truth content.

Skeletonization dominates batch runtime, so the thinned voxel set of
each ground-truth file is cached (branch parsing is cheap and depends on
run options, so it is redone per run).  Writes go through a temp file
and an atomic rename; concurrent computation of the same key inside one
process is deduplicated with per-key locks.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
import threading
from pathlib import Path

import numpy as np

from .topology import SkeletonGraph, skeleton_from_voxels, skeletonize
from .volume import Spacing, VoxelMask


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def cache_key(gt_sha256: str, binarize_threshold: float) -> str:
    tag = f"{gt_sha256}|thr={binarize_threshold!r}".encode()
    return hashlib.sha256(tag).hexdigest()


class SkeletonCache:
    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._master = threading.Lock()

    def _lock_for(self, key: str) -> threading.Lock:
        with self._master:
            return self._locks.setdefault(key, threading.Lock())

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.npz"

    def load(self, key: str) -> SkeletonGraph | None:
        path = self._path(key)
        if not path.is_file():
            return None
        try:
            with np.load(path) as npz:
                voxels = npz["voxels"]
                dims = tuple(int(d) for d in npz["dims"])
                sp = npz["spacing"]
        except (OSError, KeyError, ValueError):
            return None  # unreadable entries are recomputed
        return skeleton_from_voxels(voxels, dims, Spacing(*(float(v) for v in sp)))

    def store(self, key: str, skel: SkeletonGraph) -> None:
        path = self._path(key)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                np.savez(
                    fh,
                    voxels=skel.voxels,
                    dims=np.array(skel.dims, dtype=np.int64),
                    spacing=np.array(skel.spacing.as_tuple(), dtype=np.float64),
                )
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def skeleton_for(self, gt: VoxelMask, key: str) -> SkeletonGraph:
        """Cached skeletonization; computes at most once per key per process."""
        skel = self.load(key)
        if skel is not None:
            return skel
        with self._lock_for(key):
            skel = self.load(key)
            if skel is not None:
                return skel
            skel = skeletonize(gt)
            self.store(key, skel)
            return skel
