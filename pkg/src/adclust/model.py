"""Trained-model state and its versioned text artifact.

The artifact is JSON (diffable, desk-scale sizes). Floats are written
with full repr precision, so save/load round-trips values exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import NormalizationStats
from .embed import EmbedderConfig
from .errors import ConfigError

FORMAT_VERSION = 1


@dataclass
class ModelState:
    """Everything needed to score: embedder values, centers, nu, radius."""

    mode: str
    embedder: EmbedderConfig
    params: list  # per-layer dicts of numpy arrays
    centers: np.ndarray  # (k, f)
    nu: float
    radius_sq: float
    normalizer: NormalizationStats | None = None
    config_echo: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("single", "multi"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        self.centers = np.asarray(self.centers, dtype=np.float64)
        if self.centers.ndim != 2:
            raise ConfigError(f"centers must be 2-D (k x f), got {self.centers.shape}")

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def center(self) -> np.ndarray:
        return self.centers[0]


def save_model(path, model: ModelState) -> None:
    payload = {
        "format_version": FORMAT_VERSION,
        "mode": model.mode,
        "embedder": model.embedder.to_dict(),
        "params": [
            {name: np.asarray(arr).tolist() for name, arr in layer.items()}
            for layer in model.params
        ],
        "centers": model.centers.tolist(),
        "nu": model.nu,
        "radius_sq": model.radius_sq,
        "normalizer": None if model.normalizer is None else {
            "mean": model.normalizer.mean.tolist(),
            "std": model.normalizer.std.tolist(),
        },
        "config_echo": model.config_echo,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path) -> ModelState:
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not a valid model artifact ({exc})") from None
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise ConfigError(
            f"{path}: artifact format_version {version!r} unsupported (expected {FORMAT_VERSION})"
        )
    norm = payload.get("normalizer")
    return ModelState(
        mode=payload["mode"],
        embedder=EmbedderConfig.from_dict(payload["embedder"]),
        params=[
            {name: np.asarray(arr, dtype=np.float64) for name, arr in layer.items()}
            for layer in payload["params"]
        ],
        centers=np.asarray(payload["centers"], dtype=np.float64),
        nu=float(payload["nu"]),
        radius_sq=float(payload["radius_sq"]),
        normalizer=None if norm is None else NormalizationStats(
            mean=np.asarray(norm["mean"]), std=np.asarray(norm["std"])
        ),
        config_echo=payload.get("config_echo", {}),
    )
