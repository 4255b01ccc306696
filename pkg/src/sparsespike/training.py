"""Training loop and parameter sweeps.

One run presents the encoded training set for a number of epochs, shuffling
per epoch with a seeded generator, and applies STDP to every winner of every
presentation. Sweeps train one fresh network per axis value (population size
or WTA softness) and score each with the linear readout.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import readout
from .core import NetworkConfig, apply_stdp, init_weights, present
from .retina import DogKernel, EncodedStimulus

__all__ = [
    "TrainPlan",
    "TrainStats",
    "EpochStats",
    "SweepRow",
    "train_epoch",
    "train",
    "sweep",
]

DEFAULT_EPOCHS = 20
DEFAULT_CONVERGENCE_TOL = 1e-5

SWEEP_POPULATION = "population"
SWEEP_WTA = "wta"


@dataclass(frozen=True)
class TrainPlan:
    network: NetworkConfig
    epochs: int = DEFAULT_EPOCHS
    shuffle_each_epoch: bool = True
    convergence_tol: float = DEFAULT_CONVERGENCE_TOL
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be at least 1, got {self.epochs}")
        if self.convergence_tol < 0.0:
            raise ValueError(f"convergence_tol must be nonnegative, got {self.convergence_tol}")


@dataclass(frozen=True)
class EpochStats:
    """Summary of one epoch: mean |dw| over all synapses, mean winners per presentation."""

    mean_abs_dw: float
    mean_winners: float


@dataclass
class TrainStats:
    mean_abs_dw: list[float] = field(default_factory=list)
    mean_winners: list[float] = field(default_factory=list)
    final_epoch: int = -1


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: int
    train_error: float
    test_error: float
    mean_test_spikes: float


def train_epoch(
    stimuli: list[EncodedStimulus],
    w: np.ndarray,
    cfg: NetworkConfig,
    order: np.ndarray,
) -> tuple[np.ndarray, EpochStats]:
    """Present each stimulus once in ``order``, updating winners after each.

    Updates are applied once the presentation finishes, so all winners of one
    stimulus see the weights as they stood when it started.
    """
    if order.size == 0:
        raise ValueError("presentation order is empty")
    for stim in stimuli:
        if stim.latencies.n_afferents != w.shape[0]:
            raise ValueError(
                f"stimulus drives {stim.latencies.n_afferents} afferents "
                f"but weights have {w.shape[0]} rows"
            )
    before = w.astype(np.float64)
    total_winners = 0
    for i in order:
        outcome = present(stimuli[int(i)].latencies, w, cfg, mode="train")
        total_winners += outcome.spike_count
        for (neuron, _), mask in zip(outcome.winners, outcome.fired_masks):
            apply_stdp(w, neuron, mask, cfg.stdp)
    mean_abs_dw = float(np.mean(np.abs(w.astype(np.float64) - before)))
    return w, EpochStats(mean_abs_dw=mean_abs_dw, mean_winners=total_winners / len(order))


def train(dataset: list[EncodedStimulus], plan: TrainPlan) -> tuple[np.ndarray, TrainStats]:
    """Train a fresh network on the encoded dataset.

    Weights are drawn from the network seed; presentation order reshuffles
    every epoch from the plan seed. Stops early once the epoch's mean
    absolute weight change falls below ``plan.convergence_tol``, but never
    before one full epoch.
    """
    if not dataset:
        raise ValueError("training dataset is empty")
    m = dataset[0].latencies.n_afferents
    w = init_weights(m, plan.network.n_neurons, plan.network.seed)
    rng = np.random.default_rng(plan.rng_seed)
    stats = TrainStats()
    for epoch in range(plan.epochs):
        if plan.shuffle_each_epoch:
            order = rng.permutation(len(dataset))
        else:
            order = np.arange(len(dataset))
        w, epoch_stats = train_epoch(dataset, w, plan.network, order)
        stats.mean_abs_dw.append(epoch_stats.mean_abs_dw)
        stats.mean_winners.append(epoch_stats.mean_winners)
        stats.final_epoch = epoch
        if epoch_stats.mean_abs_dw < plan.convergence_tol:
            break
    return w, stats


def _row_config(plan: TrainPlan, axis: str, value: int) -> TrainPlan:
    """Derive the independent per-row plan for one sweep value.

    Seeds are offset by the axis value itself, so rows are reproducible,
    mutually independent, and unaffected by the order values are listed in.
    """
    if axis == SWEEP_POPULATION:
        network = replace(plan.network, n_neurons=value, seed=plan.network.seed + value)
    elif axis == SWEEP_WTA:
        network = replace(plan.network, wta_k=value, seed=plan.network.seed + value)
    else:
        raise ValueError(f"unknown sweep axis {axis!r}")
    return replace(plan, network=network, rng_seed=plan.rng_seed + value)


def _run_row(
    plan: TrainPlan,
    axis: str,
    value: int,
    train_set: list[EncodedStimulus],
    test_set: list[EncodedStimulus],
    kernel: DogKernel,
    geometry: tuple[int, int],
) -> SweepRow:
    row_plan = _row_config(plan, axis, value)
    w, _ = train(train_set, row_plan)
    bank = readout.estimate_rf(w, kernel, geometry)
    train_report = readout.evaluate(w, bank, train_set, row_plan.network)
    test_report = readout.evaluate(w, bank, test_set, row_plan.network)
    return SweepRow(
        axis=axis,
        value=value,
        train_error=train_report.mean_error,
        test_error=test_report.mean_error,
        mean_test_spikes=test_report.mean_spikes,
    )


def sweep(
    plan: TrainPlan,
    axis: str,
    values: list[int],
    train_set: list[EncodedStimulus],
    test_set: list[EncodedStimulus],
    kernel: DogKernel,
    geometry: tuple[int, int],
    workers: int = 1,
) -> list[SweepRow]:
    """Train and evaluate one independent network per axis value.

    Rows do not share any state, so they may run in parallel worker
    processes; results always come back in the order values were given.
    """
    if not values:
        raise ValueError("sweep needs at least one axis value")
    if any(v < 1 for v in values):
        raise ValueError(f"axis values must be positive, got {values}")
    if axis == SWEEP_WTA:
        if max(values) > plan.network.n_neurons:
            raise ValueError(
                f"wta values must not exceed {plan.network.n_neurons} neurons, got {values}"
            )
    elif axis == SWEEP_POPULATION:
        if plan.network.wta_k > min(values):
            raise ValueError(
                f"wta_k={plan.network.wta_k} exceeds the smallest population in {values}"
            )
    else:
        raise ValueError(f"unknown sweep axis {axis!r}")

    args = [(plan, axis, v, train_set, test_set, kernel, geometry) for v in values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_row, *zip(*args)))
    return [_run_row(*a) for a in args]
