"""Integrate-and-fire output layer with winner-take-all competition and STDP.

Neurons integrate weighted afferent spikes in event order. The first
``wta_k`` neurons to reach threshold during a presentation are the winners;
everyone else keeps integrating but the presentation ends once the quota is
filled or the input is exhausted. Plasticity moves each winner's afferent
weights toward the spike pattern that made it fire.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .retina import LatencyVector

__all__ = [
    "StdpParams",
    "NetworkConfig",
    "MembraneTrace",
    "PresentationOutcome",
    "init_weights",
    "wta_select",
    "membrane_trace",
    "present",
    "stdp_delta",
    "apply_stdp",
]

DEFAULT_THETA = 20.0

# Events are consumed in blocks: one gather + cumsum per block keeps the
# inner loop in numpy while preserving the exact per-event addition order.
_EVENT_BLOCK = 128


@dataclass(frozen=True)
class StdpParams:
    """Multiplicative STDP with an all-or-nothing temporal window.

    Afferents that spiked at or before the winner's spike are potentiated,
    all others (including afferents that never spiked) are depressed:

        LTP: dw = +alpha_plus  * (1 - w) ** mu_plus
        LTD: dw = -alpha_minus *      w  ** mu_minus

    Exponents in [0, 1] interpolate between additive (1) and hard
    multiplicative (0 for LTP at w=0) behavior; weights stay in [0, 1].
    """

    alpha_plus: float = 5e-3
    alpha_minus: float = 3.75e-3
    mu_plus: float = 0.65
    mu_minus: float = 0.05

    def __post_init__(self) -> None:
        if self.alpha_plus <= 0.0 or self.alpha_minus <= 0.0:
            raise ValueError("learning rates must be positive")
        if not (0.0 <= self.mu_plus <= 1.0 and 0.0 <= self.mu_minus <= 1.0):
            raise ValueError("stdp exponents must lie in [0, 1]")


@dataclass(frozen=True)
class NetworkConfig:
    """Static description of one output layer."""

    n_neurons: int
    theta: float = DEFAULT_THETA
    wta_k: int = 1
    stdp: StdpParams = field(default_factory=StdpParams)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_neurons < 1:
            raise ValueError(f"n_neurons must be positive, got {self.n_neurons}")
        if self.theta <= 0.0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if not 1 <= self.wta_k <= self.n_neurons:
            raise ValueError(
                f"wta_k must lie in [1, n_neurons], got {self.wta_k} with "
                f"{self.n_neurons} neurons"
            )


class MembraneTrace:
    """Piecewise-constant membrane potential of a single neuron.

    The potential starts at zero and jumps by the afferent weight at each
    input spike; it is right-continuous, so ``value_at(t)`` includes any jump
    exactly at ``t``.
    """

    def __init__(self, event_times: np.ndarray, levels: np.ndarray) -> None:
        self.event_times = event_times
        self.levels = levels

    def value_at(self, t: float) -> float:
        i = int(np.searchsorted(self.event_times, t, side="right"))
        return 0.0 if i == 0 else float(self.levels[i - 1])

    def first_crossing(self, theta: float) -> tuple[float, int] | None:
        """Time and event index of the first level >= theta, or None."""
        # Weights are nonnegative, so levels are nondecreasing.
        i = int(np.searchsorted(self.levels, theta, side="left"))
        if i >= self.levels.shape[0]:
            return None
        return float(self.event_times[i]), i


@dataclass(frozen=True)
class PresentationOutcome:
    """What one stimulus presentation produced.

    ``winners`` holds (neuron index, spike time) in firing order; ties within
    one input event resolve to the lower neuron index. ``fired_masks`` gives,
    per winner, which afferents had spiked at or before that winner's spike
    time; this is exactly the LTP mask for plasticity.
    """

    winners: list[tuple[int, float]]
    fired_masks: list[np.ndarray]

    @property
    def spike_count(self) -> int:
        return len(self.winners)


def init_weights(m: int, n: int, seed: int) -> np.ndarray:
    """Uniform [0, 1) float32 weights, afferents by rows, neurons by columns."""
    if m < 1 or n < 1:
        raise ValueError(f"weight matrix dimensions must be positive, got {m}x{n}")
    rng = np.random.default_rng(seed)
    return rng.random((m, n), dtype=np.float32)


def wta_select(inputs: np.ndarray) -> np.ndarray:
    """One-hot vector marking the strict argmax; ties go to the lowest index."""
    if inputs.ndim != 1 or inputs.shape[0] == 0:
        raise ValueError(f"expected a nonempty 1D vector, got shape {inputs.shape}")
    out = np.zeros(inputs.shape[0], dtype=np.int64)
    out[int(np.argmax(inputs))] = 1
    return out


def membrane_trace(latencies: LatencyVector, weight_column: np.ndarray) -> MembraneTrace:
    """Exact membrane trajectory of one neuron for one stimulus."""
    if weight_column.ndim != 1 or weight_column.shape[0] != latencies.n_afferents:
        raise ValueError(
            f"weight column has {weight_column.shape} entries for "
            f"{latencies.n_afferents} afferents"
        )
    if weight_column.size and (weight_column.min() < 0.0 or weight_column.max() > 1.0):
        raise ValueError("weights must lie in [0, 1]")
    steps = weight_column[latencies.indices].astype(np.float64)
    return MembraneTrace(event_times=latencies.times.copy(), levels=np.cumsum(steps))


def present(
    latencies: LatencyVector,
    w: np.ndarray,
    cfg: NetworkConfig,
    mode: str = "train",
) -> PresentationOutcome:
    """Run one stimulus through the layer and pick the winners.

    Afferent spikes are consumed in (time, index) order. Every neuron
    integrates the full event stream; a neuron that reaches ``cfg.theta``
    spikes once at the event that crossed it and is refractory for the rest
    of the presentation. Non-winners are never reset mid-stream. In train
    mode the presentation stops once ``cfg.wta_k`` neurons have spiked; in
    test mode every neuron may spike once (the quota is the layer size).
    All potentials reset to zero between presentations.
    """
    if mode not in ("train", "test"):
        raise ValueError(f"mode must be 'train' or 'test', got {mode!r}")
    m, n = w.shape
    if latencies.n_afferents != m:
        raise ValueError(
            f"stimulus drives {latencies.n_afferents} afferents but weights have {m} rows"
        )
    if cfg.n_neurons != n:
        raise ValueError(f"config says {cfg.n_neurons} neurons but weights have {n} columns")
    quota = cfg.wta_k if mode == "train" else n

    n_events = len(latencies)
    crossing_event = np.full(n, -1, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    running = np.zeros(n, dtype=np.float64)
    found = 0
    for start in range(0, n_events, _EVENT_BLOCK):
        idx = latencies.indices[start : start + _EVENT_BLOCK]
        block = w[idx, :].astype(np.float64)
        block[0] += running
        cum = np.cumsum(block, axis=0)
        running = cum[-1].copy()
        hit = active & (cum[-1] >= cfg.theta)
        if hit.any():
            first_in_block = np.argmax(cum[:, hit] >= cfg.theta, axis=0)
            crossing_event[hit] = start + first_in_block
            active[hit] = False
            found += int(hit.sum())
            if found >= quota:
                break

    fired = np.flatnonzero(crossing_event >= 0)
    order = np.lexsort((fired, crossing_event[fired]))
    ranked = fired[order][:quota]

    winners: list[tuple[int, float]] = []
    fired_masks: list[np.ndarray] = []
    for neuron in ranked:
        t_spike = float(latencies.times[crossing_event[neuron]])
        mask = np.zeros(m, dtype=bool)
        mask[latencies.indices[latencies.times <= t_spike]] = True
        winners.append((int(neuron), t_spike))
        fired_masks.append(mask)
    return PresentationOutcome(winners=winners, fired_masks=fired_masks)


def stdp_delta(w: float, pre_before_post: bool, p: StdpParams) -> float:
    """Weight change for a single synapse of the winning neuron."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"weight must lie in [0, 1], got {w}")
    if pre_before_post:
        return float(p.alpha_plus * np.float64(1.0 - w) ** p.mu_plus)
    return float(-p.alpha_minus * np.float64(w) ** p.mu_minus)


def apply_stdp(
    w: np.ndarray, winner: int, fired_mask: np.ndarray, p: StdpParams
) -> np.ndarray:
    """Update the winner's afferent weights in place and return the matrix.

    Afferents under ``fired_mask`` are potentiated, all others depressed,
    and the column is clamped to [0, 1]. Within one presentation each winner
    fires once, so updating winners sequentially in place is equivalent to
    applying all their column updates against the pre-presentation weights.
    """
    m, n = w.shape
    if not 0 <= winner < n:
        raise ValueError(f"winner index {winner} outside layer of {n} neurons")
    if fired_mask.shape != (m,):
        raise ValueError(f"fired mask shape {fired_mask.shape} does not match {m} afferents")
    col = w[:, winner].astype(np.float64)
    ltp = p.alpha_plus * (1.0 - col) ** p.mu_plus
    ltd = -p.alpha_minus * col**p.mu_minus
    col += np.where(fired_mask, ltp, ltd)
    w[:, winner] = np.clip(col, 0.0, 1.0).astype(w.dtype)
    return w
