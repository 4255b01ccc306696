"""Data I/O tests: IDX parsing, splits, checkpoints, montages, CSV."""

import csv
import gzip
import struct

import numpy as np
import pytest

import synthdata
from sparsespike.core import StdpParams
from sparsespike.dataio import (
    Checkpoint,
    CheckpointError,
    IdxFormatError,
    ImageSet,
    load_checkpoint,
    load_idx_images,
    load_idx_labels,
    make_montage,
    sample_images,
    sample_split,
    save_checkpoint,
    write_csv,
    write_image_grid,
)


@pytest.fixture()
def images():
    return np.random.default_rng(31).integers(0, 256, size=(12, 28, 28), dtype=np.uint8)


def test_idx_image_round_trip(tmp_path, images):
    # writer lives in the test tree, so reader and writer can't share a bug
    path = tmp_path / "imgs.idx"
    synthdata.write_idx_images(path, images)
    loaded = load_idx_images(path)
    np.testing.assert_array_equal(loaded.images, images)
    assert loaded.count == 12 and loaded.labels is None


def test_idx_gzip_round_trip_and_sniffing(tmp_path, images):
    path = tmp_path / "imgs.idx.gz"
    synthdata.write_idx_images(path, images, compress=True)
    np.testing.assert_array_equal(load_idx_images(path).images, images)
    np.testing.assert_array_equal(load_idx_images(path, gzipped=True).images, images)
    with pytest.raises(IdxFormatError):
        load_idx_images(path, gzipped=False)  # forced raw read hits a bad magic


def test_idx_label_round_trip(tmp_path):
    labels = synthdata.make_labels(50, seed=2)
    path = tmp_path / "labels.idx"
    synthdata.write_idx_labels(path, labels)
    np.testing.assert_array_equal(load_idx_labels(path), labels)
    gz = tmp_path / "labels.idx.gz"
    synthdata.write_idx_labels(gz, labels, compress=True)
    np.testing.assert_array_equal(load_idx_labels(gz), labels)


def test_idx_rejects_malformed_files(tmp_path, images):
    cases = {
        "truncated": b"\x00\x00\x08",
        "bad_magic": struct.pack(">IIII", 0x900, 1, 28, 28) + bytes(784),
        "bad_geometry": struct.pack(">IIII", 0x803, 1, 27, 28) + bytes(756),
        "short_payload": struct.pack(">IIII", 0x803, 2, 28, 28) + bytes(784),
        "bad_gzip": b"\x1f\x8b" + b"junk",
    }
    for name, blob in cases.items():
        path = tmp_path / name
        path.write_bytes(blob)
        with pytest.raises(IdxFormatError):
            load_idx_images(path)
    bad_labels = tmp_path / "bad_labels"
    bad_labels.write_bytes(struct.pack(">II", 0x801, 5) + bytes(3))
    with pytest.raises(IdxFormatError):
        load_idx_labels(bad_labels)


def test_sample_split_is_disjoint_and_seeded(images):
    labels = np.arange(12, dtype=np.uint8)
    full = ImageSet(images=images, labels=labels)
    train, test = sample_split(full, 7, 3, seed=5)
    assert train.count == 7 and test.count == 3
    assert set(train.labels).isdisjoint(test.labels)  # labels tag the source rows
    again, _ = sample_split(full, 7, 3, seed=5)
    np.testing.assert_array_equal(train.images, again.images)
    with pytest.raises(ValueError):
        sample_split(full, 10, 3, seed=5)
    with pytest.raises(ValueError):
        sample_split(full, -1, 3, seed=5)


def test_sample_images_bounds(images):
    full = ImageSet(images=images)
    assert sample_images(full, 0, seed=1).count == 0
    assert sample_images(full, 12, seed=1).count == 12
    with pytest.raises(ValueError):
        sample_images(full, 13, seed=1)


def test_checkpoint_round_trip_is_bit_exact(tmp_path):
    w = np.random.default_rng(33).random((60, 9), dtype=np.float32)
    ckpt = Checkpoint(
        m=60,
        n=9,
        theta=17.5,
        stdp=StdpParams(4e-3, 3e-3, 0.6, 0.1),
        epoch=12,
        weights=w,
    )
    path = tmp_path / "net.sspk"
    save_checkpoint(path, ckpt)
    back = load_checkpoint(path)
    np.testing.assert_array_equal(
        back.weights.view(np.uint32), w.view(np.uint32)
    )  # bit pattern, not just value
    assert (back.m, back.n, back.theta, back.epoch) == (60, 9, 17.5, 12)
    assert back.stdp == ckpt.stdp


def test_checkpoint_rejects_corruption(tmp_path):
    w = np.zeros((4, 2), dtype=np.float32)
    good = Checkpoint(m=4, n=2, theta=20.0, stdp=StdpParams(), epoch=0, weights=w)
    path = tmp_path / "net.sspk"
    save_checkpoint(path, good)
    blob = path.read_bytes()

    (tmp_path / "short").write_bytes(blob[:10])
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "short")
    (tmp_path / "magic").write_bytes(b"XXXX" + blob[4:])
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "magic")
    (tmp_path / "payload").write_bytes(blob[:-4])
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "payload")
    with pytest.raises(CheckpointError):
        save_checkpoint(path, Checkpoint(m=5, n=2, theta=20.0, stdp=StdpParams(), epoch=0, weights=w))


def test_montage_layout_and_normalization():
    tiles = [np.zeros((4, 4)), np.full((4, 4), 3.0), np.linspace(-1, 1, 16).reshape(4, 4)]
    canvas = make_montage(tiles, cols=2)
    assert canvas.shape == (9, 9)  # two rows of 4-pixel tiles with 1-pixel gutters
    assert (canvas[4, :] == 0).all() and (canvas[:, 4] == 0).all()
    assert (canvas[0:4, 0:4] == 128).all()  # constant tiles map to mid gray
    assert (canvas[0:4, 5:9] == 128).all()
    ramp = canvas[5:9, 0:4]
    assert ramp.min() == 0 and ramp.max() == 255
    with pytest.raises(ValueError):
        make_montage(np.zeros((0, 4, 4)))


def test_write_image_grid_formats(tmp_path):
    tiles = np.random.default_rng(34).normal(size=(3, 6, 6))
    pgm = tmp_path / "grid.pgm"
    write_image_grid(tiles, pgm, cols=3)
    blob = pgm.read_bytes()
    assert blob.startswith(b"P5\n20 6\n255\n")
    assert len(blob) == len(b"P5\n20 6\n255\n") + 6 * 20
    png = tmp_path / "grid.png"
    write_image_grid(tiles, png)
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_write_csv_preserves_float_precision(tmp_path):
    path = tmp_path / "rows.csv"
    value = 0.123456789012345678
    write_csv(path, ["name", "x"], [["a", value], ["b", 2]])
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["name", "x"]
    assert float(rows[1][1]) == value
    assert rows[2] == ["b", "2"]
    with pytest.raises(ValueError):
        write_csv(path, [], [])
