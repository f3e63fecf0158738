"""Command-line pipeline: synth, train, score, eval.

Flags may also come from a JSON config file (--config); explicit flags
override file values. Exit codes: 0 success, 2 configuration or input
errors, 3 numeric aborts during training.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import metrics
from .data import (SynthSpec, TimeSeriesDataset, apply_normalizer, fit_normalizer,
                   load_csv, save_csv, synth_dataset)
from .embed import EmbedderConfig
from .errors import ConfigError, NumericalAbort
from .model import load_model, save_model
from .score import label_scores, load_scores_csv, save_scores_csv, score_series
from .train import TrainConfig, export_centroid_trajectory, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _add_common(p):
    p.add_argument("--config", type=Path, default=None,
                   help="JSON file of flag defaults; explicit flags win")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adclust",
        description="Single-cluster self-labeling anomaly detection pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate train/test CSVs with injected anomalies")
    _add_common(p)
    p.add_argument("--length", type=int, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--anomaly-ratio", type=float, default=None)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--amplitude", type=float, default=None)
    p.add_argument("--name", type=str, default=None)

    p = sub.add_parser("train", help="fit a model on a normal-only training CSV")
    _add_common(p)
    p.add_argument("--train", type=Path, default=None, dest="train_path")
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-windows", type=int, default=None)
    p.add_argument("--optimizer", choices=["adam", "sgd"], default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--lambda", type=float, default=None, dest="lam")
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--nu0", type=float, default=None)
    p.add_argument("--mode", choices=["single", "multi"], default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--embedder", choices=["dilated_rnn", "gru", "mlp_window"], default=None)
    p.add_argument("--hidden-dim", type=int, default=None)
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--dilations", type=str, default=None,
                   help="comma-separated, e.g. 1,2,4")
    p.add_argument("--no-bias", action="store_true", default=None)
    p.add_argument("--loss", choices=["total", "distance_only"], default=None)

    p = sub.add_parser("score", help="score a test CSV with a trained model")
    _add_common(p)
    p.add_argument("--model", type=Path, default=None, dest="model_path")
    p.add_argument("--test", type=Path, default=None, dest="test_path")
    p.add_argument("--has-labels", action=argparse.BooleanOptionalAction, default=None,
                   help="test CSV carries a trailing label column (default: yes)")
    p.add_argument("--alpha", type=float, default=None)

    p = sub.add_parser("eval", help="evaluate a scores CSV against labeled truth")
    _add_common(p)
    p.add_argument("--scores", type=Path, default=None, dest="scores_path")
    p.add_argument("--test", type=Path, default=None, dest="test_path")
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--buffer", type=int, default=None)

    return parser


def _merged(args, key, fallback):
    """Flag value, else config-file value, else fallback."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    if args.config_data and key in args.config_data:
        return args.config_data[key]
    return fallback


def _load_config_file(args):
    args.config_data = {}
    if args.config is not None:
        try:
            with open(args.config) as fh:
                args.config_data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from None
        if not isinstance(args.config_data, dict):
            raise ConfigError(f"{args.config}: config file must hold a JSON object")


def cmd_synth(args) -> int:
    out = Path(_merged(args, "out", Path(".")))
    out.mkdir(parents=True, exist_ok=True)
    seed = int(_merged(args, "seed", 0))
    length = int(_merged(args, "length", 2000))
    dim = int(_merged(args, "dim", 2))
    ratio = float(_merged(args, "anomaly_ratio", 0.1))
    noise = float(_merged(args, "noise", 0.05))
    amplitude = float(_merged(args, "amplitude", 1.0))
    name = str(_merged(args, "name", "synth"))

    train_spec = SynthSpec(length=length, dim=dim, anomaly_ratio=0.0, seed=seed,
                           noise=noise, amplitude=amplitude, name=f"{name}-train")
    test_spec = SynthSpec(length=length, dim=dim, anomaly_ratio=ratio, seed=seed + 1,
                          noise=noise, amplitude=amplitude, name=f"{name}-test")
    train_ds = synth_dataset(train_spec)
    test_ds = synth_dataset(test_spec)
    save_csv(out / "train.csv", train_ds, with_labels=False)
    save_csv(out / "test.csv", test_ds, with_labels=True)
    manifest = {
        "name": name,
        "length": length,
        "dim": dim,
        "anomaly_ratio": ratio,
        "noise": noise,
        "amplitude": amplitude,
        "seed": seed,
        "test_label_count": int(test_ds.labels.sum()),
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out / 'train.csv'}, {out / 'test.csv'}, {out / 'manifest.json'}")
    return EXIT_OK


def cmd_train(args) -> int:
    train_path = _merged(args, "train_path", None)
    if train_path is None:
        raise ConfigError("train: --train CSV path is required")
    out = Path(_merged(args, "out", Path(".")))
    out.mkdir(parents=True, exist_ok=True)

    raw = load_csv(train_path, has_labels=False)
    stats = fit_normalizer(raw)
    data = apply_normalizer(raw, stats)

    window = int(_merged(args, "window", 100))
    dilations = _merged(args, "dilations", None)
    layers = int(_merged(args, "layers", 2))
    if isinstance(dilations, str):
        dilations = tuple(int(x) for x in dilations.split(","))
    elif dilations is None:
        dilations = tuple(2 ** i for i in range(layers))
    embedder = EmbedderConfig(
        kind=str(_merged(args, "embedder", "dilated_rnn")),
        input_dim=data.dim,
        hidden_dim=int(_merged(args, "hidden_dim", 32)),
        layers=layers,
        dilations=dilations,
        use_bias=not bool(_merged(args, "no_bias", False)),
    )
    config = TrainConfig(
        embedder=embedder,
        epochs=int(_merged(args, "epochs", 50)),
        batch_windows=int(_merged(args, "batch_windows", 8)),
        optimizer=str(_merged(args, "optimizer", "adam")),
        lr=float(_merged(args, "lr", 0.01)),
        rho=float(_merged(args, "rho", 0.1)),
        lam=float(_merged(args, "lam", 1e-4)),
        tau=float(_merged(args, "tau", 0.1)),
        nu_init=float(_merged(args, "nu0", 0.5)),
        seed=int(_merged(args, "seed", 0)),
        mode=str(_merged(args, "mode", "single")),
        k=int(_merged(args, "k", 1)),
        window=min(window, data.length),
        stride=_merged(args, "stride", None),
        loss=str(_merged(args, "loss", "total")),
    )
    model, log = train(data, config, normalizer=stats)
    save_model(out / "model.json", model)
    with open(out / "trainlog.csv", "w") as fh:
        fh.write(log.to_text())
    export_centroid_trajectory(log, out / "centroid_trajectory.csv")
    print(f"trained {config.mode} model: nu={model.nu:.6f} r_sq={model.radius_sq:.6f} "
          f"epochs={len(log.records)}")
    print(f"wrote {out / 'model.json'}, {out / 'trainlog.csv'}, "
          f"{out / 'centroid_trajectory.csv'}")
    return EXIT_OK


def cmd_score(args) -> int:
    model_path = _merged(args, "model_path", None)
    test_path = _merged(args, "test_path", None)
    if model_path is None or test_path is None:
        raise ConfigError("score: --model and --test are required")
    out = Path(_merged(args, "out", Path(".")))
    out.mkdir(parents=True, exist_ok=True)
    alpha = float(_merged(args, "alpha", 0.1))
    has_labels = bool(_merged(args, "has_labels", True))

    model = load_model(model_path)
    raw = load_csv(test_path, has_labels=has_labels)
    data = apply_normalizer(raw, model.normalizer) if model.normalizer else raw
    series = score_series(data, model, alpha)
    save_scores_csv(out / "scores.csv", series)
    print(f"scored {data.length} points: threshold={series.threshold!r} "
          f"flagged={int(series.labels.sum())}")
    print(f"wrote {out / 'scores.csv'}")
    return EXIT_OK


def cmd_eval(args) -> int:
    scores_path = _merged(args, "scores_path", None)
    test_path = _merged(args, "test_path", None)
    if scores_path is None or test_path is None:
        raise ConfigError("eval: --scores and --test are required")
    out = Path(_merged(args, "out", Path(".")))
    out.mkdir(parents=True, exist_ok=True)
    window = int(_merged(args, "window", 100))
    buffer = int(_merged(args, "buffer", metrics.DEFAULT_BUFFER))

    scores, pred = load_scores_csv(scores_path)
    truth_ds = load_csv(test_path, has_labels=True)
    if truth_ds.length != len(scores):
        raise ConfigError(
            f"scores length {len(scores)} != truth length {truth_ds.length}"
        )
    report = metrics.evaluate(truth_ds.labels, pred, scores=scores, buffer=buffer,
                              vus_buffers=range(0, window // 2 + 1))
    with open(out / "report.csv", "w") as fh:
        fh.write(report.to_csv_text())
    with open(out / "report.txt", "w") as fh:
        fh.write(report.to_kv_text())
    print(report.to_kv_text().strip())
    print(f"wrote {out / 'report.csv'}, {out / 'report.txt'}")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "score": cmd_score,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _load_config_file(args)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
