"""Command-line driver for the full pipeline.

Subcommands: train, eval, sweep, export-rf, encode. Configuration comes from
a JSON key-value file plus flag overrides (flags > file > defaults); every
run echoes its fully resolved config into the output directory so results
can be reproduced from the artifacts alone.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dataio, readout, training
from .core import NetworkConfig, StdpParams
from .dataio import Checkpoint, CheckpointError, IdxFormatError, ImageSet
from .retina import encode_dataset, make_dog_kernel
from .training import TrainPlan

__all__ = ["ConfigError", "DEFAULTS", "resolve_config", "main"]

IMAGE_SHAPE = (dataio.IMAGE_ROWS, dataio.IMAGE_COLS)

DEFAULTS: dict = {
    "sigma_center": 1.0,
    "sigma_surround": 2.0,
    "kernel_size": 6,
    "activity_floor": 1e-6,
    "n_neurons": 150,
    "theta": 20.0,
    "wta_k": 1,
    "alpha_plus": 5e-3,
    "alpha_minus": 3.75e-3,
    "mu_plus": 0.65,
    "mu_minus": 0.05,
    "epochs": 20,
    "shuffle_each_epoch": True,
    "convergence_tol": 1e-5,
    "seed": 0,
    "n_train": 1000,
    "n_test": 200,
    "workers": 1,
}

# RunConfig keys the CLI flags may override.
_FLAG_KEYS = {
    "seed": "seed",
    "neurons": "n_neurons",
    "wta_k": "wta_k",
    "theta": "theta",
    "epochs": "epochs",
}


class ConfigError(ValueError):
    """Raised for unusable configuration: unknown keys, bad types, missing inputs."""


def resolve_config(config_path: str | None, overrides: dict) -> dict:
    """Merge defaults, config file, and flag overrides into one document."""
    resolved = dict(DEFAULTS)
    if config_path is not None:
        try:
            loaded = json.loads(Path(config_path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{config_path}: not valid JSON ({exc})") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"{config_path}: config must be a JSON object")
        unknown = sorted(set(loaded) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"{config_path}: unknown config keys {unknown}")
        for key, value in loaded.items():
            resolved[key] = _coerce(key, value)
    for key, value in overrides.items():
        if value is not None:
            resolved[key] = _coerce(key, value)
    return resolved


def _coerce(key: str, value):
    default = DEFAULTS[key]
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"config key {key!r} must be a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"config key {key!r} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key {key!r} must be a number, got {value!r}")
        return float(value)
    return value


def _network_config(cfg: dict) -> NetworkConfig:
    stdp = StdpParams(
        alpha_plus=cfg["alpha_plus"],
        alpha_minus=cfg["alpha_minus"],
        mu_plus=cfg["mu_plus"],
        mu_minus=cfg["mu_minus"],
    )
    return NetworkConfig(
        n_neurons=cfg["n_neurons"],
        theta=cfg["theta"],
        wta_k=cfg["wta_k"],
        stdp=stdp,
        seed=cfg["seed"],
    )


def _train_plan(cfg: dict) -> TrainPlan:
    return TrainPlan(
        network=_network_config(cfg),
        epochs=cfg["epochs"],
        shuffle_each_epoch=cfg["shuffle_each_epoch"],
        convergence_tol=cfg["convergence_tol"],
        rng_seed=cfg["seed"],
    )


def _prepare_out(args, cfg: dict) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    return out


def _load_splits(args, cfg: dict, need_test: bool) -> tuple[ImageSet | None, ImageSet | None]:
    """Resolve train/test image subsets from the data flags.

    One file: a disjoint split is drawn from it. Two files: the train subset
    is sampled from --train-images and the test subset from --test-images
    (Fashion-MNIST ships separate train/t10k files).
    """
    train_path = getattr(args, "train_images", None)
    test_path = getattr(args, "test_images", None)
    seed = cfg["seed"]
    if train_path and test_path:
        train_set = dataio.sample_images(dataio.load_idx_images(train_path), cfg["n_train"], seed)
        test_set = dataio.sample_images(dataio.load_idx_images(test_path), cfg["n_test"], seed + 1)
        return train_set, test_set
    if train_path:
        train_set, test_set = dataio.sample_split(
            dataio.load_idx_images(train_path), cfg["n_train"], cfg["n_test"], seed
        )
        return train_set, test_set
    if test_path:
        if need_test:
            test_set = dataio.sample_images(
                dataio.load_idx_images(test_path), cfg["n_test"], seed + 1
            )
            return None, test_set
    raise ConfigError("no input images: pass --train-images (and optionally --test-images)")


def cmd_train(args) -> int:
    cfg = resolve_config(args.config, {k: getattr(args, f) for f, k in _FLAG_KEYS.items()})
    if not getattr(args, "train_images", None):
        raise ConfigError("train needs --train-images")
    out = _prepare_out(args, cfg)
    train_set, _ = _load_splits(args, cfg, need_test=False)
    kernel = make_dog_kernel(cfg["sigma_center"], cfg["sigma_surround"], cfg["kernel_size"])
    encoded = encode_dataset(train_set.images, kernel, cfg["activity_floor"])
    plan = _train_plan(cfg)
    w, stats = training.train(encoded, plan)
    dataio.save_checkpoint(
        out / "weights.sspk",
        Checkpoint(
            m=w.shape[0],
            n=w.shape[1],
            theta=cfg["theta"],
            stdp=plan.network.stdp,
            epoch=stats.final_epoch,
            weights=w,
        ),
    )
    dataio.write_csv(
        out / "train_stats.csv",
        ["epoch", "mean_abs_dw", "mean_winners"],
        [[e, dw, mw] for e, (dw, mw) in enumerate(zip(stats.mean_abs_dw, stats.mean_winners))],
    )
    bank = readout.estimate_rf(w, kernel, IMAGE_SHAPE)
    dataio.write_image_grid(bank.fields, out / "receptive_fields.png")
    print(
        f"trained {w.shape[1]} neurons for {stats.final_epoch + 1} epochs, "
        f"final mean |dw| {stats.mean_abs_dw[-1]:.3e} -> {out}"
    )
    return 0


def cmd_eval(args) -> int:
    cfg = resolve_config(args.config, {k: getattr(args, f) for f, k in _FLAG_KEYS.items()})
    ckpt = dataio.load_checkpoint(args.checkpoint)
    # The checkpoint is authoritative for the trained architecture; explicit
    # --theta still allows probing a different response threshold.
    cfg["n_neurons"] = ckpt.n
    cfg["theta"] = ckpt.theta if args.theta is None else args.theta
    cfg["wta_k"] = 1
    cfg["alpha_plus"] = ckpt.stdp.alpha_plus
    cfg["alpha_minus"] = ckpt.stdp.alpha_minus
    cfg["mu_plus"] = ckpt.stdp.mu_plus
    cfg["mu_minus"] = ckpt.stdp.mu_minus
    out = _prepare_out(args, cfg)
    _, test_set = _load_splits(args, cfg, need_test=True)
    if test_set is None or test_set.count == 0:
        raise ValueError("test split is empty")
    kernel = make_dog_kernel(cfg["sigma_center"], cfg["sigma_surround"], cfg["kernel_size"])
    encoded = encode_dataset(test_set.images, kernel, cfg["activity_floor"])
    network = _network_config(cfg)
    bank = readout.estimate_rf(ckpt.weights, kernel, IMAGE_SHAPE)
    report = readout.evaluate(ckpt.weights, bank, encoded, network)
    dataio.write_csv(
        out / "per_image.csv",
        ["index", "error", "spike_count"],
        [[r.index, r.error, r.spike_count] for r in report.records],
    )
    dataio.write_csv(
        out / "summary.csv",
        ["mean_error", "error_std", "mean_spikes"],
        [[report.mean_error, report.error_std, report.mean_spikes]],
    )
    tiles = []
    for i in range(min(8, test_set.count)):
        r = readout.responses(encoded[i].latencies, ckpt.weights, network)
        tiles += [
            test_set.images[i].astype(np.float64),
            encoded[i].contrast,
            readout.reconstruct(r, bank),
        ]
    dataio.write_image_grid(tiles, out / "reconstructions.png", cols=3)
    print(
        f"evaluated {test_set.count} images: mean error {report.mean_error:.4f} "
        f"(std {report.error_std:.4f}), mean spikes {report.mean_spikes:.2f} -> {out}"
    )
    return 0


def _parse_axis(text: str) -> tuple[str, list[int]]:
    name, sep, tail = text.partition("=")
    name = name.strip()
    if not sep or name not in (training.SWEEP_POPULATION, training.SWEEP_WTA):
        raise ConfigError(
            f"axis must look like 'population=10,50' or 'wta=1,10', got {text!r}"
        )
    try:
        values = [int(v) for v in tail.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"axis values must be integers, got {tail!r}") from exc
    if not values:
        raise ConfigError(f"axis {name!r} lists no values")
    return name, values


def cmd_sweep(args) -> int:
    cfg = resolve_config(args.config, {k: getattr(args, f) for f, k in _FLAG_KEYS.items()})
    axis, values = _parse_axis(args.axis)
    if not getattr(args, "train_images", None):
        raise ConfigError("sweep needs --train-images")
    out = _prepare_out(args, cfg)
    train_set, test_set = _load_splits(args, cfg, need_test=True)
    kernel = make_dog_kernel(cfg["sigma_center"], cfg["sigma_surround"], cfg["kernel_size"])
    enc_train = encode_dataset(train_set.images, kernel, cfg["activity_floor"])
    enc_test = encode_dataset(test_set.images, kernel, cfg["activity_floor"])
    rows = training.sweep(
        _train_plan(cfg),
        axis,
        values,
        enc_train,
        enc_test,
        kernel,
        IMAGE_SHAPE,
        workers=cfg["workers"],
    )
    dataio.write_csv(
        out / f"sweep_{axis}.csv",
        ["axis", "value", "train_error", "test_error", "mean_test_spikes"],
        [[r.axis, r.value, r.train_error, r.test_error, r.mean_test_spikes] for r in rows],
    )
    _write_sweep_plot(rows, axis, out / f"sweep_{axis}.png")
    for r in rows:
        print(
            f"{axis}={r.value}: train {r.train_error:.4f}, test {r.test_error:.4f}, "
            f"spikes {r.mean_test_spikes:.2f}"
        )
    return 0


def _write_sweep_plot(rows: list[training.SweepRow], axis: str, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = [r.value for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, [r.train_error for r in rows], "o-", label="train error")
    ax.plot(xs, [r.test_error for r in rows], "s-", label="test error")
    ax.set_xlabel("population size" if axis == training.SWEEP_POPULATION else "WTA k")
    ax.set_ylabel("reconstruction error")
    ax.legend(loc="best")
    ax2 = ax.twinx()
    ax2.plot(xs, [r.mean_test_spikes for r in rows], "^--", color="gray", label="test spikes")
    ax2.set_ylabel("mean test spikes")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def cmd_export_rf(args) -> int:
    cfg = resolve_config(args.config, {k: getattr(args, f) for f, k in _FLAG_KEYS.items()})
    ckpt = dataio.load_checkpoint(args.checkpoint)
    out = _prepare_out(args, cfg)
    kernel = make_dog_kernel(cfg["sigma_center"], cfg["sigma_surround"], cfg["kernel_size"])
    bank = readout.estimate_rf(ckpt.weights, kernel, IMAGE_SHAPE)
    dataio.write_image_grid(bank.fields, out / "receptive_fields.png")
    print(f"exported {bank.n_neurons} receptive fields -> {out}")
    return 0


def cmd_encode(args) -> int:
    cfg = resolve_config(args.config, {k: getattr(args, f) for f, k in _FLAG_KEYS.items()})
    if args.count < 1:
        raise ConfigError(f"--count must be positive, got {args.count}")
    out = _prepare_out(args, cfg)
    images = dataio.load_idx_images(args.images)
    count = min(args.count, images.count)
    if count == 0:
        raise ValueError("image file holds no images")
    kernel = make_dog_kernel(cfg["sigma_center"], cfg["sigma_surround"], cfg["kernel_size"])
    encoded = encode_dataset(images.images[:count], kernel, cfg["activity_floor"])
    dataio.write_image_grid([e.contrast for e in encoded], out / "lgn_maps.png")
    spikes = sum(len(e.latencies) for e in encoded) / count
    print(f"encoded {count} images, mean {spikes:.0f} afferent spikes each -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsespike",
        description="Spike-latency sparse coding: train, evaluate, and inspect networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, data_flags: bool = True) -> None:
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="base RNG seed")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--neurons", type=int, help="output layer size N")
        p.add_argument("--wta-k", dest="wta_k", type=int, help="winners allowed per presentation")
        p.add_argument("--theta", type=float, help="firing threshold")
        p.add_argument("--epochs", type=int, help="training epochs")
        if data_flags:
            p.add_argument("--train-images", help="IDX image file for training")
            p.add_argument("--test-images", help="IDX image file for testing")

    p_train = sub.add_parser("train", help="train a network and write a checkpoint")
    add_common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a test split")
    p_eval.add_argument("checkpoint", help="checkpoint file from train")
    add_common(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", help="train/evaluate across an axis of values")
    p_sweep.add_argument("axis", help="axis and values, e.g. population=10,50,100 or wta=1,10,50")
    add_common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_rf = sub.add_parser("export-rf", help="render a checkpoint's receptive fields")
    p_rf.add_argument("checkpoint", help="checkpoint file from train")
    add_common(p_rf, data_flags=False)
    p_rf.set_defaults(func=cmd_export_rf)

    p_enc = sub.add_parser("encode", help="dump LGN contrast maps for inspection")
    p_enc.add_argument("images", help="IDX image file")
    p_enc.add_argument("--count", type=int, default=16, help="images to encode (default 16)")
    add_common(p_enc, data_flags=False)
    p_enc.set_defaults(func=cmd_encode)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (IdxFormatError, CheckpointError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
