"""Shared fixtures, including the expensive session-scoped acceptance sweeps.

The acceptance tests all score networks trained at the reference scale
(1,000 training images, 200 test images, 20 epochs), so the two parameter
sweeps are trained once per session and shared between criteria. Real IDX
data is used when SPARSESPIKE_DATA_DIR points at a directory containing
train-images-idx3-ubyte(.gz) and t10k-images-idx3-ubyte(.gz); otherwise the
synthetic corpus from synthdata.py stands in.
"""

import os
import time
from pathlib import Path

import pytest

os.environ.setdefault("MPLBACKEND", "Agg")

import synthdata
from sparsespike import dataio, training
from sparsespike.core import NetworkConfig
from sparsespike.retina import encode_dataset, make_dog_kernel
from sparsespike.training import TrainPlan

N_TRAIN = 1000
N_TEST = 200
GEOMETRY = (28, 28)
POPULATION_VALUES = [10, 50, 100, 150, 200, 250]
WTA_VALUES = [1, 10, 50, 100, 150]


def _find_idx(root: Path, stem: str):
    for name in (stem, stem + ".gz"):
        p = root / name
        if p.exists():
            return p
    return None


@pytest.fixture(scope="session")
def dog_kernel():
    return make_dog_kernel()


@pytest.fixture(scope="session")
def ref_sets():
    """(train, test) uint8 image stacks at the reference split sizes."""
    root = os.environ.get("SPARSESPIKE_DATA_DIR")
    if root:
        train_path = _find_idx(Path(root), "train-images-idx3-ubyte")
        test_path = _find_idx(Path(root), "t10k-images-idx3-ubyte")
        if train_path is not None and test_path is not None:
            train = dataio.sample_images(dataio.load_idx_images(train_path), N_TRAIN, seed=0)
            test = dataio.sample_images(dataio.load_idx_images(test_path), N_TEST, seed=1)
            return train.images, test.images
    return synthdata.make_images(N_TRAIN, seed=11), synthdata.make_images(N_TEST, seed=12)


@pytest.fixture(scope="session")
def ref_encoded(ref_sets, dog_kernel):
    train, test = ref_sets
    return encode_dataset(train, dog_kernel), encode_dataset(test, dog_kernel)


@pytest.fixture(scope="session")
def default_plan():
    """Library defaults: 20 epochs, hard WTA, threshold 20, seed 0."""
    return TrainPlan(network=NetworkConfig(n_neurons=150))


@pytest.fixture(scope="session")
def population_sweep(default_plan, ref_encoded, dog_kernel):
    """Population-size sweep rows plus the sweep's wall-clock seconds."""
    enc_train, enc_test = ref_encoded
    t0 = time.monotonic()
    rows = training.sweep(
        default_plan,
        training.SWEEP_POPULATION,
        POPULATION_VALUES,
        enc_train,
        enc_test,
        dog_kernel,
        GEOMETRY,
    )
    return rows, time.monotonic() - t0


@pytest.fixture(scope="session")
def wta_sweep(default_plan, ref_encoded, dog_kernel):
    """WTA softness sweep at the reference population size."""
    enc_train, enc_test = ref_encoded
    return training.sweep(
        default_plan,
        training.SWEEP_WTA,
        WTA_VALUES,
        enc_train,
        enc_test,
        dog_kernel,
        GEOMETRY,
    )
