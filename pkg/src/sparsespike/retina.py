"""Retinal front end: center-surround filtering and first-spike latency coding.

A grayscale image is filtered with a difference-of-Gaussians kernel, split
into rectified ON and OFF activity maps, and each active cell is assigned a
spike time equal to the reciprocal of its activity. Strong local contrast
therefore spikes early; weak contrast spikes late or not at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DogKernel",
    "LgnActivityMap",
    "LatencyVector",
    "EncodedStimulus",
    "make_dog_kernel",
    "dog_response",
    "encode_lgn",
    "latency_encode",
    "encode_image",
    "encode_dataset",
]

DEFAULT_SIGMA_CENTER = 1.0
DEFAULT_SIGMA_SURROUND = 2.0
DEFAULT_KERNEL_SIZE = 6
DEFAULT_ACTIVITY_FLOOR = 1e-6


@dataclass(frozen=True)
class DogKernel:
    """Zero-sum difference-of-Gaussians kernel with a fixed anchor cell."""

    weights: np.ndarray
    sigma_center: float
    sigma_surround: float

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def anchor(self) -> int:
        # For even sizes the anchor sits just below-right of the true center,
        # e.g. cell (3, 3) of a 6x6 kernel.
        return self.size // 2


@dataclass(frozen=True)
class LgnActivityMap:
    """Rectified ON/OFF activity, one pair of cells per pixel."""

    on: np.ndarray
    off: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.on.shape

    @property
    def contrast(self) -> np.ndarray:
        """Signed contrast (ON minus OFF), used as reconstruction target."""
        return self.on - self.off


@dataclass(frozen=True)
class LatencyVector:
    """Sparse spike times over a population of afferents.

    Only afferents that spike are stored. Entries are sorted by
    (time, afferent index), which is the order events are consumed
    downstream; ties in time are broken by the lower index.
    """

    indices: np.ndarray
    times: np.ndarray
    n_afferents: int

    def __len__(self) -> int:
        return int(self.indices.shape[0])

    def dense_times(self) -> np.ndarray:
        """Per-afferent spike times, +inf for afferents that never spike."""
        dense = np.full(self.n_afferents, np.inf)
        dense[self.indices] = self.times
        return dense


@dataclass(frozen=True)
class EncodedStimulus:
    """One stimulus after retinal encoding.

    Keeps both the spike representation fed to the network and the signed
    contrast map that reconstruction is scored against.
    """

    latencies: LatencyVector
    contrast: np.ndarray


def make_dog_kernel(
    sigma_center: float = DEFAULT_SIGMA_CENTER,
    sigma_surround: float = DEFAULT_SIGMA_SURROUND,
    size: int = DEFAULT_KERNEL_SIZE,
) -> DogKernel:
    """Build a zero-sum difference-of-Gaussians kernel.

    Both Gaussians are sampled on the same grid (cell offsets measured from
    the anchor at ``size // 2``), individually normalized to unit mass, and
    subtracted. The residual mean is removed so the kernel sums to zero and
    constant inputs produce no interior response.
    """
    if not 0.0 < sigma_center < sigma_surround:
        raise ValueError(
            f"need 0 < sigma_center < sigma_surround, got {sigma_center} and {sigma_surround}"
        )
    if size < 2:
        raise ValueError(f"kernel size must be at least 2, got {size}")
    offsets = np.arange(size) - size // 2
    d2 = offsets[:, None] ** 2 + offsets[None, :] ** 2

    def unit_gaussian(sigma: float) -> np.ndarray:
        g = np.exp(-d2 / (2.0 * sigma * sigma))
        return g / g.sum()

    k = unit_gaussian(sigma_center) - unit_gaussian(sigma_surround)
    k -= k.mean()
    return DogKernel(weights=k, sigma_center=sigma_center, sigma_surround=sigma_surround)


def dog_response(image: np.ndarray, kernel: DogKernel) -> np.ndarray:
    """Signed center-surround response, same shape as the image.

    Correlation (no kernel flip) with zero padding outside the image. Output
    cell (i, j) aligns with kernel anchor placed at pixel (i, j), so with a
    6x6 kernel the window spans rows i-3 .. i+2.
    """
    if image.ndim != 2:
        raise ValueError(f"expected a 2D image, got shape {image.shape}")
    if image.size == 0:
        raise ValueError("image is empty")
    img = np.asarray(image, dtype=np.float64)
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("image values must lie in [0, 1]")
    size, a = kernel.size, kernel.anchor
    padded = np.pad(img, ((a, size - 1 - a), (a, size - 1 - a)))
    windows = np.lib.stride_tricks.sliding_window_view(padded, (size, size))
    return np.einsum("ijuv,uv->ij", windows, kernel.weights)


def encode_lgn(image: np.ndarray, kernel: DogKernel) -> LgnActivityMap:
    """Filter an image and rectify into ON (bright) and OFF (dark) maps.

    At every pixel at most one polarity is active; both can be zero.
    """
    s = dog_response(image, kernel)
    return LgnActivityMap(on=np.maximum(s, 0.0), off=np.maximum(-s, 0.0))


def latency_encode(
    lgn: LgnActivityMap, activity_floor: float = DEFAULT_ACTIVITY_FLOOR
) -> LatencyVector:
    """Convert activity to first-spike latencies, time = 1 / activity.

    Cells below ``activity_floor`` never spike and are omitted. Afferents are
    indexed by the flattened ON map (row-major) followed by the flattened OFF
    map, so an HxW stimulus drives 2*H*W afferents.
    """
    if activity_floor <= 0.0:
        raise ValueError(f"activity_floor must be positive, got {activity_floor}")
    activity = np.concatenate([lgn.on.ravel(), lgn.off.ravel()])
    spiking = np.flatnonzero(activity >= activity_floor)
    times = 1.0 / activity[spiking]
    order = np.lexsort((spiking, times))
    return LatencyVector(
        indices=spiking[order], times=times[order], n_afferents=activity.shape[0]
    )


def encode_image(
    image: np.ndarray,
    kernel: DogKernel,
    activity_floor: float = DEFAULT_ACTIVITY_FLOOR,
) -> EncodedStimulus:
    """Full retinal pass for one image already scaled to [0, 1]."""
    lgn = encode_lgn(image, kernel)
    return EncodedStimulus(
        latencies=latency_encode(lgn, activity_floor), contrast=lgn.contrast
    )


def encode_dataset(
    images: np.ndarray,
    kernel: DogKernel,
    activity_floor: float = DEFAULT_ACTIVITY_FLOOR,
) -> list[EncodedStimulus]:
    """Encode a stack of images, scaling uint8 pixel values to [0, 1]."""
    if images.ndim != 3:
        raise ValueError(f"expected (count, H, W) images, got shape {images.shape}")
    if images.dtype == np.uint8:
        images = images.astype(np.float64) / 255.0
    return [encode_image(img, kernel, activity_floor) for img in images]
