import gzip
import struct

import numpy as np
import pytest

from airtree import (
    MaskFormatError,
    ShapeMismatchError,
    Spacing,
    VoxelMask,
    confusion,
    load_mask,
    save_mask,
    shape_check,
)
from airtree.volume import binarize

from conftest import make_mask, random_mask, write_nifti
from oracles import confusion_oracle


class TestSpacing:
    def test_positive_required(self):
        with pytest.raises(MaskFormatError):
            Spacing(0.0, 1.0, 1.0)
        with pytest.raises(MaskFormatError):
            Spacing(1.0, -0.5, 1.0)
        with pytest.raises(MaskFormatError):
            Spacing(1.0, 1.0, float("nan"))

    def test_step_mm(self):
        sp = Spacing(0.6, 0.8, 1.0)
        assert sp.step_mm((1, 1, 0)) == pytest.approx(1.0)
        assert sp.step_mm((0, 0, 1)) == pytest.approx(1.0)


class TestNifti:
    def test_empty_uint8_volume(self, tmp_path):
        path = write_nifti(tmp_path / "zero.nii", np.zeros((3, 3, 3), np.uint8))
        mask = load_mask(path)
        assert mask.dims == (3, 3, 3)
        assert mask.foreground_count == 0

    def test_float32_and_uint8_encodings_agree(self, tmp_path, rng):
        values = (rng.random((8, 8, 8)) < 0.5).astype(np.uint8)
        p1 = write_nifti(tmp_path / "u8.nii", values, datatype=2)
        p2 = write_nifti(tmp_path / "f32.nii", values.astype(np.float32), datatype=16)
        m1, m2 = load_mask(p1), load_mask(p2)
        assert np.array_equal(m1.data, m2.data)

    def test_header_dims_and_spacing(self, tmp_path):
        # production-sized header: 512x512x600 at (0.70, 0.70, 0.50) mm
        values = np.zeros((512, 512, 600), np.uint8)
        path = write_nifti(tmp_path / "big.nii.gz", values, spacing=(0.70, 0.70, 0.50), gzipped=True)
        mask = load_mask(path)
        assert mask.dims == (512, 512, 600)
        assert mask.spacing.as_tuple() == pytest.approx((0.70, 0.70, 0.50))

    def test_gzip_roundtrip_matches_plain(self, tmp_path, rng):
        values = (rng.random((6, 5, 4)) < 0.4).astype(np.uint8)
        plain = load_mask(write_nifti(tmp_path / "a.nii", values))
        packed = load_mask(write_nifti(tmp_path / "a.nii.gz", values, gzipped=True))
        assert plain == packed

    def test_all_datatype_codes(self, tmp_path, rng):
        values = (rng.random((4, 4, 4)) < 0.5).astype(np.uint8)
        for code in (2, 4, 8, 16, 64):
            path = write_nifti(tmp_path / f"dt{code}.nii", values, datatype=code)
            assert np.array_equal(load_mask(path).data, values.astype(bool))

    def test_threshold_binarization(self, tmp_path):
        values = np.zeros((3, 3, 3), np.float32)
        values[0, 0, 0] = 0.4
        values[1, 1, 1] = 0.6
        path = write_nifti(tmp_path / "t.nii", values, datatype=16)
        assert load_mask(path).foreground_count == 2  # > 0
        assert load_mask(path, binarize_threshold=0.5).foreground_count == 1

    def test_bad_magic(self, tmp_path):
        path = write_nifti(tmp_path / "bad.nii", np.zeros((3, 3, 3), np.uint8))
        raw = bytearray(path.read_bytes())
        raw[344:348] = b"xxxx"
        path.write_bytes(bytes(raw))
        with pytest.raises(MaskFormatError, match="magic"):
            load_mask(path)

    def test_bad_sizeof_hdr(self, tmp_path):
        path = write_nifti(tmp_path / "bad.nii", np.zeros((3, 3, 3), np.uint8))
        raw = bytearray(path.read_bytes())
        struct.pack_into("<i", raw, 0, 999)
        path.write_bytes(bytes(raw))
        with pytest.raises(MaskFormatError, match="sizeof_hdr"):
            load_mask(path)

    def test_unsupported_datatype(self, tmp_path):
        path = write_nifti(tmp_path / "bad.nii", np.zeros((3, 3, 3), np.uint8))
        raw = bytearray(path.read_bytes())
        struct.pack_into("<2h", raw, 70, 128, 24)  # RGB code: unsupported
        path.write_bytes(bytes(raw))
        with pytest.raises(MaskFormatError, match="datatype"):
            load_mask(path)

    def test_payload_shorter_than_dims(self, tmp_path):
        path = write_nifti(tmp_path / "bad.nii", np.zeros((4, 4, 4), np.uint8))
        raw = path.read_bytes()
        path.write_bytes(raw[:-10])
        with pytest.raises(MaskFormatError, match="payload"):
            load_mask(path)

    def test_non_positive_pixdim(self, tmp_path):
        path = write_nifti(tmp_path / "bad.nii", np.zeros((3, 3, 3), np.uint8))
        raw = bytearray(path.read_bytes())
        struct.pack_into("<f", raw, 80, 0.0)  # pixdim[1]
        path.write_bytes(bytes(raw))
        with pytest.raises(MaskFormatError, match="pixdim"):
            load_mask(path)

    def test_big_endian_header(self, tmp_path):
        values = (np.arange(27).reshape(3, 3, 3) % 2).astype(np.uint8)
        hdr = bytearray(348)
        struct.pack_into(">i", hdr, 0, 348)
        struct.pack_into(">8h", hdr, 40, 3, 3, 3, 3, 1, 1, 1, 1)
        struct.pack_into(">2h", hdr, 70, 2, 8)
        struct.pack_into(">8f", hdr, 76, 1.0, 1.0, 1.0, 1.0, 0, 0, 0, 0)
        struct.pack_into(">f", hdr, 108, 352.0)
        hdr[344:348] = b"n+1\x00"
        path = tmp_path / "be.nii"
        path.write_bytes(bytes(hdr) + b"\x00" * 4 + values.tobytes(order="F"))
        mask = load_mask(path)
        assert mask.foreground_count == int(values.sum())


class TestRawFormat:
    def test_roundtrip_bit_exact(self, tmp_path, rng):
        mask = random_mask(rng, (9, 7, 5), spacing=(0.7, 0.8, 0.9))
        path = tmp_path / "m.tbm"
        save_mask(mask, path)
        again = load_mask(path)
        assert np.array_equal(again.data, mask.data)
        # spacing only carries f32 precision in this format
        assert again.spacing.as_tuple() == pytest.approx(mask.spacing.as_tuple(), abs=1e-6)
        # byte-level check of the payload
        raw = path.read_bytes()
        assert raw[:4] == b"TBM1"
        assert raw[28:] == mask.data.astype(np.uint8).tobytes(order="F")

    def test_rejects_non_binary_payload(self, tmp_path):
        header = b"TBM1" + struct.pack("<3I", 2, 2, 2) + struct.pack("<3f", 1, 1, 1)
        (tmp_path / "bad.tbm").write_bytes(header + bytes([0, 1, 2, 0, 1, 0, 1, 0]))
        with pytest.raises(MaskFormatError, match="outside"):
            load_mask(tmp_path / "bad.tbm")

    def test_truncated_payload(self, tmp_path):
        header = b"TBM1" + struct.pack("<3I", 3, 3, 3) + struct.pack("<3f", 1, 1, 1)
        (tmp_path / "bad.tbm").write_bytes(header + b"\x01" * 10)
        with pytest.raises(MaskFormatError, match="payload"):
            load_mask(tmp_path / "bad.tbm")

    def test_nifti_save_roundtrip(self, tmp_path, rng):
        mask = random_mask(rng, (6, 7, 8), spacing=(0.5, 0.6, 0.7))
        for name in ("m.nii", "m.nii.gz"):
            save_mask(mask, tmp_path / name)
            assert load_mask(tmp_path / name) == mask


class TestBinarize:
    def test_idempotent(self, rng):
        values = rng.normal(size=(6, 6, 6))
        once = binarize(values)
        twice = binarize(once.astype(np.float64))
        assert np.array_equal(once, twice)

    def test_nan_is_background(self):
        values = np.full((2, 2, 2), np.nan)
        assert binarize(values).sum() == 0


class TestShapeCheck:
    def test_equal_ok(self, rng):
        a = random_mask(rng, (4, 4, 4))
        shape_check(a, a)

    def test_dimension_mismatch(self, rng):
        a = random_mask(rng, (4, 4, 4))
        b = random_mask(rng, (5, 4, 4))
        with pytest.raises(ShapeMismatchError):
            shape_check(a, b)

    def test_spacing_drift_warns_only(self, rng, caplog):
        a = random_mask(rng, (4, 4, 4), spacing=(0.7, 0.7, 0.5))
        b = random_mask(rng, (4, 4, 4), spacing=(0.7, 0.7, 0.5001))
        with caplog.at_level("WARNING"):
            shape_check(a, b)
        assert any("spacing" in r.message for r in caplog.records)

    def test_spacing_drift_within_tolerance_silent(self, rng, caplog):
        a = random_mask(rng, (4, 4, 4), spacing=(0.7, 0.7, 0.5))
        b = random_mask(rng, (4, 4, 4), spacing=(0.7, 0.7, 0.5 + 5e-5))
        with caplog.at_level("WARNING"):
            shape_check(a, b)
        assert not caplog.records


class TestConfusion:
    def test_identity(self):
        data = np.zeros((4, 4, 4), bool)
        data.ravel(order="F")[:10] = True
        m = make_mask(data)
        c = confusion(m, m)
        assert (c.tp, c.fp, c.fn, c.tn) == (10, 0, 0, 54)

    def test_disjoint(self):
        a = np.zeros((4, 4, 4), bool)
        b = np.zeros((4, 4, 4), bool)
        a.ravel(order="F")[:3] = True
        b.ravel(order="F")[10:14] = True
        c = confusion(make_mask(a), make_mask(b))
        assert (c.tp, c.fp, c.fn, c.tn) == (0, 3, 4, 57)

    def test_matches_bruteforce(self, rng):
        for _ in range(5):
            pred = random_mask(rng, (16, 16, 16))
            gt = random_mask(rng, (16, 16, 16))
            c = confusion(pred, gt)
            assert (c.tp, c.fp, c.fn, c.tn) == confusion_oracle(pred.data, gt.data)
            assert c.total == pred.total_voxels

    def test_swap_symmetry(self, rng):
        pred = random_mask(rng, (8, 8, 8))
        gt = random_mask(rng, (8, 8, 8))
        a = confusion(pred, gt)
        b = confusion(gt, pred)
        assert (a.tp, a.tn) == (b.tp, b.tn)
        assert (a.fp, a.fn) == (b.fn, b.fp)
