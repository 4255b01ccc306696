"""File I/O: IDX image ingestion, splits, checkpoints, image grids, CSV.

IDX files (the MNIST-family format) are big-endian; checkpoints use a small
little-endian binary layout that round-trips weights bit-exactly.
"""

from __future__ import annotations

import csv
import gzip
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import StdpParams

__all__ = [
    "IdxFormatError",
    "CheckpointError",
    "ImageSet",
    "Checkpoint",
    "load_idx_images",
    "load_idx_labels",
    "sample_split",
    "sample_images",
    "save_checkpoint",
    "load_checkpoint",
    "make_montage",
    "write_image_grid",
    "write_csv",
]

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
IMAGE_ROWS = 28
IMAGE_COLS = 28

CHECKPOINT_MAGIC = b"SSPK"
CHECKPOINT_VERSION = 1
# magic, version, M, N, theta, alpha+, alpha-, mu+, mu-, epoch
_CKPT_HEADER = struct.Struct("<4sIII5dI")


class IdxFormatError(ValueError):
    """Raised when an IDX file is malformed or has unexpected dimensions."""


class CheckpointError(ValueError):
    """Raised when a checkpoint file fails validation."""


@dataclass(frozen=True)
class ImageSet:
    """A stack of 28x28 byte images with optional labels."""

    images: np.ndarray
    labels: np.ndarray | None = None

    @property
    def count(self) -> int:
        return int(self.images.shape[0])


@dataclass(frozen=True)
class Checkpoint:
    m: int
    n: int
    theta: float
    stdp: StdpParams
    epoch: int
    weights: np.ndarray
    version: int = CHECKPOINT_VERSION


def _read_bytes(path: str | Path, gzipped: bool | None) -> bytes:
    raw = Path(path).read_bytes()
    if gzipped is None:
        gzipped = raw[:2] == b"\x1f\x8b"
    if gzipped:
        try:
            return gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise IdxFormatError(f"{path}: not a valid gzip stream ({exc})") from exc
    return raw


def load_idx_images(path: str | Path, gzipped: bool | None = None) -> ImageSet:
    """Parse an IDX unsigned-byte image tensor, validating 28x28 geometry.

    ``gzipped=None`` sniffs the gzip signature, so both raw and .gz files
    load transparently.
    """
    data = _read_bytes(path, gzipped)
    if len(data) < 16:
        raise IdxFormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, count, rows, cols = struct.unpack(">IIII", data[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise IdxFormatError(f"{path}: bad magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}")
    if rows != IMAGE_ROWS or cols != IMAGE_COLS:
        raise IdxFormatError(f"{path}: expected 28x28 images, got {rows}x{cols}")
    payload = data[16:]
    expected = count * rows * cols
    if len(payload) != expected:
        raise IdxFormatError(
            f"{path}: payload holds {len(payload)} bytes, header promises {expected}"
        )
    images = np.frombuffer(payload, dtype=np.uint8).reshape(count, rows, cols).copy()
    return ImageSet(images=images)


def load_idx_labels(path: str | Path, gzipped: bool | None = None) -> np.ndarray:
    """Parse an IDX unsigned-byte label vector."""
    data = _read_bytes(path, gzipped)
    if len(data) < 8:
        raise IdxFormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, count = struct.unpack(">II", data[:8])
    if magic != IDX_LABEL_MAGIC:
        raise IdxFormatError(f"{path}: bad magic 0x{magic:08x}, expected 0x{IDX_LABEL_MAGIC:08x}")
    payload = data[8:]
    if len(payload) != count:
        raise IdxFormatError(f"{path}: payload holds {len(payload)} bytes, header promises {count}")
    return np.frombuffer(payload, dtype=np.uint8).copy()


def sample_split(
    image_set: ImageSet, n_train: int, n_test: int, seed: int
) -> tuple[ImageSet, ImageSet]:
    """Draw disjoint uniformly random train/test subsets, seed-deterministic."""
    if n_train < 0 or n_test < 0:
        raise ValueError(f"split sizes must be nonnegative, got {n_train}/{n_test}")
    if n_train + n_test > image_set.count:
        raise ValueError(
            f"cannot draw {n_train}+{n_test} images from a set of {image_set.count}"
        )
    perm = np.random.default_rng(seed).permutation(image_set.count)
    return (
        _take(image_set, perm[:n_train]),
        _take(image_set, perm[n_train : n_train + n_test]),
    )


def sample_images(image_set: ImageSet, n: int, seed: int) -> ImageSet:
    """Draw one uniformly random subset of n images, seed-deterministic."""
    if not 0 <= n <= image_set.count:
        raise ValueError(f"cannot draw {n} images from a set of {image_set.count}")
    perm = np.random.default_rng(seed).permutation(image_set.count)
    return _take(image_set, perm[:n])


def _take(image_set: ImageSet, idx: np.ndarray) -> ImageSet:
    labels = None if image_set.labels is None else image_set.labels[idx]
    return ImageSet(images=image_set.images[idx], labels=labels)


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> None:
    """Write a checkpoint; weights stored float32 little-endian row-major."""
    if ckpt.weights.shape != (ckpt.m, ckpt.n):
        raise CheckpointError(
            f"weights shape {ckpt.weights.shape} does not match header {ckpt.m}x{ckpt.n}"
        )
    header = _CKPT_HEADER.pack(
        CHECKPOINT_MAGIC,
        ckpt.version,
        ckpt.m,
        ckpt.n,
        ckpt.theta,
        ckpt.stdp.alpha_plus,
        ckpt.stdp.alpha_minus,
        ckpt.stdp.mu_plus,
        ckpt.stdp.mu_minus,
        ckpt.epoch,
    )
    body = np.ascontiguousarray(ckpt.weights, dtype="<f4").tobytes()
    Path(path).write_bytes(header + body)


def load_checkpoint(path: str | Path) -> Checkpoint:
    data = Path(path).read_bytes()
    if len(data) < _CKPT_HEADER.size:
        raise CheckpointError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, m, n, theta, a_plus, a_minus, mu_plus, mu_minus, epoch = (
        _CKPT_HEADER.unpack(data[: _CKPT_HEADER.size])
    )
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    body = data[_CKPT_HEADER.size :]
    if len(body) != m * n * 4:
        raise CheckpointError(
            f"{path}: weight payload holds {len(body)} bytes, header promises {m * n * 4}"
        )
    weights = np.frombuffer(body, dtype="<f4").reshape(m, n).copy()
    return Checkpoint(
        m=m,
        n=n,
        theta=theta,
        stdp=StdpParams(a_plus, a_minus, mu_plus, mu_minus),
        epoch=epoch,
        weights=weights,
    )


def make_montage(grids: np.ndarray | list[np.ndarray], cols: int | None = None) -> np.ndarray:
    """Tile signed grids into one 8-bit grayscale image.

    Each tile is min-max normalized on its own (fields carry arbitrary
    scale); a constant tile maps to mid-gray 128. Tiles are separated by a
    1-pixel black gutter.
    """
    grids = np.asarray(grids, dtype=np.float64)
    if grids.ndim != 3 or grids.shape[0] == 0:
        raise ValueError(f"expected a nonempty (count, H, W) stack, got shape {grids.shape}")
    count, h, w = grids.shape
    if cols is None:
        cols = math.ceil(math.sqrt(count))
    rows = math.ceil(count / cols)
    canvas = np.zeros((rows * (h + 1) - 1, cols * (w + 1) - 1), dtype=np.uint8)
    for i in range(count):
        tile = grids[i]
        lo, hi = float(tile.min()), float(tile.max())
        if hi - lo <= 1e-12 * max(1.0, abs(hi), abs(lo)):
            scaled = np.full((h, w), 128, dtype=np.uint8)
        else:
            scaled = np.rint((tile - lo) / (hi - lo) * 255.0).astype(np.uint8)
        r, c = divmod(i, cols)
        canvas[r * (h + 1) : r * (h + 1) + h, c * (w + 1) : c * (w + 1) + w] = scaled
    return canvas


def write_image_grid(
    grids: np.ndarray | list[np.ndarray], path: str | Path, cols: int | None = None
) -> None:
    """Render grids as a montage and write it as PNG or PGM (by extension)."""
    montage = make_montage(grids, cols=cols)
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        header = f"P5\n{montage.shape[1]} {montage.shape[0]}\n255\n".encode("ascii")
        path.write_bytes(header + montage.tobytes())
        return
    import matplotlib.image

    matplotlib.image.imsave(path, montage, cmap="gray", vmin=0, vmax=255)


def write_csv(path: str | Path, header: list[str], rows: list[list]) -> None:
    """Write one header row plus records; floats keep full repr precision."""
    if not header:
        raise ValueError("CSV header is empty")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
