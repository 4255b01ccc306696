"""Linear readout: receptive-field estimation, reconstruction, and scoring.

A neuron's receptive field is the weighted sum of the signed kernels of its
afferents (ON kernels positive, OFF negative), stamped into pixel space with
the same zero padding the retina used. A stimulus is reconstructed as the sum
of the fields of the neurons that spiked, and scored against the signed
contrast map by mean squared error after z-scoring both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import NetworkConfig, present
from .retina import DogKernel, EncodedStimulus, LatencyVector

__all__ = [
    "ReceptiveFieldBank",
    "ResponseVector",
    "ImageRecord",
    "EvalReport",
    "estimate_rf",
    "responses",
    "reconstruct",
    "reconstruction_error",
    "evaluate",
]


@dataclass(frozen=True)
class ReceptiveFieldBank:
    """Per-neuron signed pixel-space fields sharing one geometry."""

    fields: np.ndarray
    geometry: tuple[int, int]
    kernel_anchor: int

    @property
    def n_neurons(self) -> int:
        return self.fields.shape[0]


@dataclass(frozen=True)
class ResponseVector:
    """Binary per-neuron spike indicators for one test presentation."""

    responses: np.ndarray

    @property
    def spike_count(self) -> int:
        return int(self.responses.sum())


@dataclass(frozen=True)
class ImageRecord:
    index: int
    error: float
    spike_count: int


@dataclass(frozen=True)
class EvalReport:
    mean_error: float
    error_std: float
    mean_spikes: float
    records: list[ImageRecord]


def estimate_rf(
    w: np.ndarray, kernel: DogKernel, geometry: tuple[int, int]
) -> ReceptiveFieldBank:
    """Project afferent weights back to pixel space, one field per neuron.

    Afferent rows are ordered ON block then OFF block (row-major pixels), so
    the signed per-pixel weight map is w_on - w_off; each pixel then stamps
    the kernel scaled by that weight, with contributions falling outside the
    image cropped away (mirror of the retina's zero padding).
    """
    h, width = geometry
    m, n = w.shape
    if m != 2 * h * width:
        raise ValueError(f"weights have {m} rows but geometry {geometry} needs {2 * h * width}")
    pixels = h * width
    signed = (w[:pixels, :] - w[pixels:, :]).T.reshape(n, h, width).astype(np.float64)
    size, a = kernel.size, kernel.anchor
    buf = np.zeros((n, h + size - 1, width + size - 1))
    for u in range(size):
        for v in range(size):
            buf[:, u : u + h, v : v + width] += kernel.weights[u, v] * signed
    return ReceptiveFieldBank(
        fields=buf[:, a : a + h, a : a + width].copy(),
        geometry=geometry,
        kernel_anchor=a,
    )


def responses(latencies: LatencyVector, w: np.ndarray, cfg: NetworkConfig) -> ResponseVector:
    """Binary spike indicators from a frozen test-mode presentation."""
    outcome = present(latencies, w, cfg, mode="test")
    r = np.zeros(w.shape[1], dtype=bool)
    r[[neuron for neuron, _ in outcome.winners]] = True
    return ResponseVector(responses=r)


def reconstruct(r: ResponseVector, bank: ReceptiveFieldBank) -> np.ndarray:
    """Sum of the receptive fields of the neurons that spiked."""
    if r.responses.shape[0] != bank.n_neurons:
        raise ValueError(
            f"{r.responses.shape[0]} responses for a bank of {bank.n_neurons} fields"
        )
    if r.spike_count == 0:
        return np.zeros(bank.geometry)
    return bank.fields[r.responses].sum(axis=0)


def _zscore(x: np.ndarray) -> np.ndarray:
    # Constant maps (std indistinguishable from zero at float precision)
    # standardize to all zeros rather than amplified rounding noise.
    mu = float(x.mean())
    sd = float(x.std())
    if sd <= 1e-12 * max(1.0, abs(mu)):
        return np.zeros_like(x, dtype=np.float64)
    return (x - mu) / sd


def reconstruction_error(reference: np.ndarray, or_image: np.ndarray) -> float:
    """Mean squared error between z-scored maps; ranges over [0, 4].

    Z-scoring makes the measure symmetric and invariant to positive affine
    rescaling of either side; for nonconstant maps it equals 2(1 - rho) with
    rho the Pearson correlation.
    """
    if reference.shape != or_image.shape:
        raise ValueError(f"geometry mismatch: {reference.shape} vs {or_image.shape}")
    za = _zscore(np.asarray(reference, dtype=np.float64))
    zb = _zscore(np.asarray(or_image, dtype=np.float64))
    return float(np.mean((za - zb) ** 2))


def evaluate(
    w: np.ndarray,
    bank: ReceptiveFieldBank,
    dataset: list[EncodedStimulus],
    cfg: NetworkConfig,
) -> EvalReport:
    """Score every stimulus: respond, reconstruct, compare to its contrast map.

    Aggregation uses compensated summation so the report does not depend on
    evaluation order.
    """
    if not dataset:
        raise ValueError("evaluation dataset is empty")
    records = []
    for i, stim in enumerate(dataset):
        r = responses(stim.latencies, w, cfg)
        err = reconstruction_error(stim.contrast, reconstruct(r, bank))
        records.append(ImageRecord(index=i, error=err, spike_count=r.spike_count))
    n = len(records)
    mean_error = math.fsum(rec.error for rec in records) / n
    variance = math.fsum((rec.error - mean_error) ** 2 for rec in records) / n
    mean_spikes = math.fsum(rec.spike_count for rec in records) / n
    return EvalReport(
        mean_error=mean_error,
        error_std=math.sqrt(variance),
        mean_spikes=mean_spikes,
        records=records,
    )
