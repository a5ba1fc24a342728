import os

import numpy as np
import pytest

from blocknet.dataset import build_dataset, make_example, quantize, read_dataset, write_dataset
from blocknet.errors import FormatError, MagicMismatchError, TruncatedFileError, VersionError


@pytest.fixture(scope="module")
def small():
    return build_dataset("blt_srp", 40, 42)


def test_balance_even():
    ds = build_dataset("blt_srp", 1000, 42)
    assert len(ds) == 1000
    assert np.count_nonzero(ds.labels == 0) == 500
    assert np.count_nonzero(ds.labels == 1) == 500


def test_balance_odd():
    ds = build_dataset("crs_ncrs", 11, 3)
    assert np.count_nonzero(ds.labels == 0) == 6
    assert np.count_nonzero(ds.labels == 1) == 5


def test_deterministic(small):
    again = build_dataset("blt_srp", 40, 42)
    assert again == small
    assert again.images.tobytes() == small.images.tobytes()


def test_seed_changes_data(small):
    assert build_dataset("blt_srp", 40, 43) != small


def test_shuffled(small):
    assert not np.array_equal(small.labels, np.arange(40) % 2)


def test_parallel_generation_matches_sequential(small):
    assert build_dataset("blt_srp", 40, 42, workers=2) == small


def test_examples_have_their_own_streams():
    # example i does not depend on how many examples come before it
    img, label = make_example("ang_crs", 9, 17)
    ds = build_dataset("ang_crs", 20, 9)
    assert label == 1
    assert any(np.array_equal(img, row) for row in ds.images)


def test_features_dequantize(small):
    x = small.features()
    assert x.dtype == np.float64 and x.shape == (40, 1024)
    assert np.array_equal(x * 255.0, small.images.astype(np.float64))


def test_quantize_rounds_half_up():
    assert quantize([0.0, 1.0, 0.5 / 255, 0.49 / 255]).tolist() == [0, 255, 1, 0]


def test_round_trip(tmp_path, small):
    path = tmp_path / "d.bnds"
    write_dataset(small, path)
    assert read_dataset(path) == small


def test_file_size(tmp_path):
    ds = build_dataset("ang_crs", 10, 1)
    path = tmp_path / "d.bnds"
    write_dataset(ds, path)
    assert os.path.getsize(path) == 4 + 2 + 1 + 8 + 8 + 10 * (1 + 1024) == 10273


def test_header_layout(tmp_path):
    ds = build_dataset("crs_ncrs", 4, 0x0102030405060708)
    path = tmp_path / "d.bnds"
    write_dataset(ds, path)
    raw = path.read_bytes()
    assert raw[:4] == b"BNDS"
    assert raw[4:6] == b"\x01\x00"
    assert raw[6] == 5
    assert raw[7:15] == (4).to_bytes(8, "little")
    assert raw[15:23] == bytes([8, 7, 6, 5, 4, 3, 2, 1])
    assert raw[23] == ds.labels[0]


def test_bad_magic(tmp_path, small):
    path = tmp_path / "d.bnds"
    write_dataset(small, path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"XXXX"
    path.write_bytes(bytes(raw))
    with pytest.raises(MagicMismatchError):
        read_dataset(path)


def test_bad_version(tmp_path, small):
    path = tmp_path / "d.bnds"
    write_dataset(small, path)
    raw = bytearray(path.read_bytes())
    raw[4] = 9
    path.write_bytes(bytes(raw))
    with pytest.raises(VersionError):
        read_dataset(path)


def test_truncated(tmp_path, small):
    path = tmp_path / "d.bnds"
    write_dataset(small, path)
    path.write_bytes(path.read_bytes()[:-1])
    with pytest.raises(TruncatedFileError):
        read_dataset(path)
    path.write_bytes(b"BNDS\x01")
    with pytest.raises(TruncatedFileError):
        read_dataset(path)


def test_errors_are_distinct():
    assert len({MagicMismatchError, VersionError, TruncatedFileError}) == 3
    for cls in (MagicMismatchError, VersionError, TruncatedFileError):
        assert issubclass(cls, FormatError)


def test_rejects_tiny_or_unknown():
    with pytest.raises(ValueError):
        build_dataset("blt_srp", 1, 0)
    with pytest.raises(ValueError):
        build_dataset("nope", 10, 0)
