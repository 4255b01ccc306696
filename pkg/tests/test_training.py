"""Training loop tests: epochs, convergence, reproducibility, sweeps."""

import numpy as np
import pytest

from sparsespike.core import NetworkConfig, init_weights
from sparsespike.retina import EncodedStimulus, LatencyVector, make_dog_kernel
from sparsespike.training import (
    SWEEP_POPULATION,
    SWEEP_WTA,
    TrainPlan,
    sweep,
    train,
    train_epoch,
)

M = 2 * 28 * 28  # afferents for the standard geometry


def _stim(rng, events=40):
    idx = rng.permutation(M)[:events]
    times = np.sort(rng.uniform(0.5, 5.0, size=events))
    lat = LatencyVector(indices=idx, times=times, n_afferents=M)
    return EncodedStimulus(latencies=lat, contrast=rng.random((28, 28)))


def _dataset(seed, count=6):
    rng = np.random.default_rng(seed)
    return [_stim(rng) for _ in range(count)]


def test_blank_stimulus_changes_nothing():
    lat = LatencyVector(
        indices=np.array([], dtype=np.int64), times=np.array([]), n_afferents=M
    )
    blank = EncodedStimulus(latencies=lat, contrast=np.zeros((28, 28)))
    w = init_weights(M, 4, seed=0)
    before = w.copy()
    _, stats = train_epoch([blank], w, NetworkConfig(n_neurons=4), np.arange(1))
    np.testing.assert_array_equal(w, before)
    assert stats.mean_abs_dw == 0.0
    assert stats.mean_winners == 0.0


def test_every_presentation_finds_a_winner_when_threshold_is_low():
    data = _dataset(1, count=4)
    w = np.full((M, 3), 0.5, dtype=np.float32)
    _, stats = train_epoch(data, w, NetworkConfig(n_neurons=3, theta=2.0), np.arange(4))
    assert stats.mean_winners == 1.0
    assert stats.mean_abs_dw > 0.0


def test_train_equals_manual_epoch_replay():
    data = _dataset(2)
    cfg = NetworkConfig(n_neurons=5, theta=8.0, seed=3)
    plan = TrainPlan(network=cfg, epochs=2, shuffle_each_epoch=False)
    w_trained, stats = train(data, plan)

    w = init_weights(M, 5, seed=3)
    order = np.arange(len(data))
    w, first = train_epoch(data, w, cfg, order)
    w, second = train_epoch(data, w, cfg, order)
    np.testing.assert_array_equal(w_trained, w)
    assert stats.mean_abs_dw == [first.mean_abs_dw, second.mean_abs_dw]
    assert stats.final_epoch == 1


def test_train_is_bit_reproducible():
    data = _dataset(4)
    plan = TrainPlan(network=NetworkConfig(n_neurons=4, theta=8.0, seed=1), epochs=3)
    w1, s1 = train(data, plan)
    w2, s2 = train(data, plan)
    np.testing.assert_array_equal(w1, w2)
    assert s1.mean_abs_dw == s2.mean_abs_dw


def test_shuffling_changes_the_trajectory():
    data = _dataset(5, count=8)
    base = TrainPlan(network=NetworkConfig(n_neurons=4, theta=8.0, seed=1), epochs=2)
    w_shuffled, _ = train(data, base)
    w_fixed, _ = train(data, TrainPlan(network=base.network, epochs=2, shuffle_each_epoch=False))
    assert not np.array_equal(w_shuffled, w_fixed)


def test_infinite_tolerance_stops_after_one_epoch():
    data = _dataset(6)
    plan = TrainPlan(
        network=NetworkConfig(n_neurons=3, theta=8.0), epochs=10, convergence_tol=np.inf
    )
    _, stats = train(data, plan)
    assert stats.final_epoch == 0
    assert len(stats.mean_abs_dw) == 1


def test_plan_and_input_validation():
    with pytest.raises(ValueError):
        TrainPlan(network=NetworkConfig(n_neurons=2), epochs=0)
    with pytest.raises(ValueError):
        TrainPlan(network=NetworkConfig(n_neurons=2), convergence_tol=-1.0)
    with pytest.raises(ValueError):
        train([], TrainPlan(network=NetworkConfig(n_neurons=2)))
    data = _dataset(7, count=2)
    with pytest.raises(ValueError):
        train_epoch(data, init_weights(10, 2, 0), NetworkConfig(n_neurons=2), np.arange(2))
    with pytest.raises(ValueError):
        train_epoch(data, init_weights(M, 2, 0), NetworkConfig(n_neurons=2), np.array([]))


@pytest.fixture(scope="module")
def sweep_inputs():
    kernel = make_dog_kernel()
    return _dataset(8, count=5), _dataset(9, count=3), kernel


def test_sweep_rows_are_independent_and_ordered(sweep_inputs):
    train_set, test_set, kernel = sweep_inputs
    plan = TrainPlan(network=NetworkConfig(n_neurons=4, theta=8.0), epochs=1)
    both = sweep(plan, SWEEP_POPULATION, [3, 5], train_set, test_set, kernel, (28, 28))
    assert [r.value for r in both] == [3, 5]
    assert all(r.axis == SWEEP_POPULATION for r in both)
    alone = sweep(plan, SWEEP_POPULATION, [5], train_set, test_set, kernel, (28, 28))
    assert alone[0] == both[1]  # a row does not depend on its neighbors


def test_sweep_worker_pool_matches_serial(sweep_inputs):
    train_set, test_set, kernel = sweep_inputs
    plan = TrainPlan(network=NetworkConfig(n_neurons=4, theta=8.0), epochs=1)
    serial = sweep(plan, SWEEP_WTA, [1, 2], train_set, test_set, kernel, (28, 28))
    pooled = sweep(
        plan, SWEEP_WTA, [1, 2], train_set, test_set, kernel, (28, 28), workers=2
    )
    assert serial == pooled


def test_sweep_validation(sweep_inputs):
    train_set, test_set, kernel = sweep_inputs
    plan = TrainPlan(network=NetworkConfig(n_neurons=4, theta=8.0), epochs=1)
    with pytest.raises(ValueError):
        sweep(plan, SWEEP_WTA, [8], train_set, test_set, kernel, (28, 28))
    with pytest.raises(ValueError):
        sweep(plan, "threshold", [1], train_set, test_set, kernel, (28, 28))
    with pytest.raises(ValueError):
        sweep(plan, SWEEP_POPULATION, [], train_set, test_set, kernel, (28, 28))
    with pytest.raises(ValueError):
        sweep(plan, SWEEP_POPULATION, [0, 4], train_set, test_set, kernel, (28, 28))
    wide = TrainPlan(network=NetworkConfig(n_neurons=4, theta=8.0, wta_k=4), epochs=1)
    with pytest.raises(ValueError):
        sweep(wide, SWEEP_POPULATION, [2], train_set, test_set, kernel, (28, 28))
