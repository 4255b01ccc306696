"""Spike-latency sparse coding of images.

Pipeline: center-surround retinal filtering, first-spike latency conversion,
an integrate-and-fire layer with winner-take-all competition trained by STDP,
and a linear readout that reconstructs stimuli from binary spike responses.
"""

from .core import (
    NetworkConfig,
    PresentationOutcome,
    StdpParams,
    apply_stdp,
    init_weights,
    membrane_trace,
    present,
    stdp_delta,
    wta_select,
)
from .dataio import (
    Checkpoint,
    CheckpointError,
    IdxFormatError,
    ImageSet,
    load_checkpoint,
    load_idx_images,
    load_idx_labels,
    sample_split,
    save_checkpoint,
)
from .readout import (
    EvalReport,
    ReceptiveFieldBank,
    ResponseVector,
    estimate_rf,
    evaluate,
    reconstruct,
    reconstruction_error,
    responses,
)
from .retina import (
    DogKernel,
    EncodedStimulus,
    LatencyVector,
    LgnActivityMap,
    encode_dataset,
    encode_image,
    encode_lgn,
    latency_encode,
    make_dog_kernel,
)
from .training import SweepRow, TrainPlan, TrainStats, sweep, train, train_epoch

__version__ = "0.1.0"

__all__ = [
    "NetworkConfig",
    "PresentationOutcome",
    "StdpParams",
    "apply_stdp",
    "init_weights",
    "membrane_trace",
    "present",
    "stdp_delta",
    "wta_select",
    "Checkpoint",
    "CheckpointError",
    "IdxFormatError",
    "ImageSet",
    "load_checkpoint",
    "load_idx_images",
    "load_idx_labels",
    "sample_split",
    "save_checkpoint",
    "EvalReport",
    "ReceptiveFieldBank",
    "ResponseVector",
    "estimate_rf",
    "evaluate",
    "reconstruct",
    "reconstruction_error",
    "responses",
    "DogKernel",
    "EncodedStimulus",
    "LatencyVector",
    "LgnActivityMap",
    "encode_dataset",
    "encode_image",
    "encode_lgn",
    "latency_encode",
    "make_dog_kernel",
    "SweepRow",
    "TrainPlan",
    "TrainStats",
    "sweep",
    "train",
    "train_epoch",
    "__version__",
]
