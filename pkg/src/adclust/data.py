"""Time series loading, normalization, windowing, and synthesis.

Datasets are read-only after construction and safe to share across
threads. CSV is the single ingestion format: one row per time step,
comma-separated channels, optional trailing 0/1 label column.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass
class TimeSeriesDataset:
    """A T x d multivariate series with optional per-point binary labels."""

    values: np.ndarray
    labels: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ConfigError(f"values must be 2-D (T x d), got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError(f"dataset {self.name!r} contains non-finite values")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.values.shape[0],):
                raise ConfigError(
                    f"labels length {self.labels.shape} does not match T={self.values.shape[0]}"
                )
            bad = set(np.unique(self.labels)) - {0, 1}
            if bad:
                raise ConfigError(f"labels must be 0/1, found {sorted(bad)}")

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass
class WindowView:
    """A contiguous [start, start+length) slice of a parent dataset."""

    start: int
    length: int
    parent: TimeSeriesDataset

    def __post_init__(self):
        if self.length < 1:
            raise ConfigError(f"window length must be >= 1, got {self.length}")
        if self.start < 0 or self.start + self.length > self.parent.length:
            raise ConfigError(
                f"window [{self.start}, {self.start + self.length}) out of range "
                f"for T={self.parent.length}"
            )

    @property
    def values(self) -> np.ndarray:
        return self.parent.values[self.start:self.start + self.length]

    @property
    def labels(self) -> np.ndarray | None:
        if self.parent.labels is None:
            return None
        return self.parent.labels[self.start:self.start + self.length]


@dataclass
class NormalizationStats:
    """Per-channel mean and (floored) population standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        if np.any(self.std <= 0):
            raise ConfigError("normalization std must be strictly positive")


STD_FLOOR = 1e-8


def load_csv(path, has_labels: bool = False, name: str | None = None) -> TimeSeriesDataset:
    """Parse a CSV series; malformed rows are errors, never silently dropped."""
    rows = []
    labels = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                raise ConfigError(f"{path}:{lineno}: empty row")
            if width is None:
                width = len(row)
                if has_labels and width < 2:
                    raise ConfigError(f"{path}: labeled file needs >= 2 columns")
            elif len(row) != width:
                raise ConfigError(
                    f"{path}:{lineno}: ragged row ({len(row)} fields, expected {width})"
                )
            try:
                fields = [float(cell) for cell in row]
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
            if any(not math.isfinite(v) for v in fields):
                raise ConfigError(f"{path}:{lineno}: non-finite cell")
            if has_labels:
                lab = fields[-1]
                if lab not in (0.0, 1.0):
                    raise ConfigError(f"{path}:{lineno}: label {lab!r} outside {{0,1}}")
                labels.append(int(lab))
                fields = fields[:-1]
            rows.append(fields)
    if not rows:
        raise ConfigError(f"{path}: no rows")
    return TimeSeriesDataset(
        values=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64) if has_labels else None,
        name=name if name is not None else str(path),
    )


def save_csv(path, dataset: TimeSeriesDataset, with_labels: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for t in range(dataset.length):
            row = [repr(float(v)) for v in dataset.values[t]]
            if with_labels:
                if dataset.labels is None:
                    raise ConfigError("dataset has no labels to write")
                row.append(str(int(dataset.labels[t])))
            writer.writerow(row)


def fit_normalizer(train: TimeSeriesDataset) -> NormalizationStats:
    """Per-channel z-score statistics (population std, floored at 1e-8)."""
    if train.length < 2:
        raise ConfigError(f"need T >= 2 to fit a normalizer, got T={train.length}")
    mean = train.values.mean(axis=0)
    std = train.values.std(axis=0)  # population (divide-by-T)
    std = np.maximum(std, STD_FLOOR)
    return NormalizationStats(mean=mean, std=std)


def apply_normalizer(ds: TimeSeriesDataset, stats: NormalizationStats) -> TimeSeriesDataset:
    if stats.mean.shape[0] != ds.dim:
        raise ConfigError(f"stats dim {stats.mean.shape[0]} != dataset dim {ds.dim}")
    return TimeSeriesDataset(
        values=(ds.values - stats.mean) / stats.std,
        labels=None if ds.labels is None else ds.labels.copy(),
        name=ds.name,
    )


def invert_normalizer(ds: TimeSeriesDataset, stats: NormalizationStats) -> TimeSeriesDataset:
    return TimeSeriesDataset(
        values=ds.values * stats.std + stats.mean,
        labels=None if ds.labels is None else ds.labels.copy(),
        name=ds.name,
    )


def make_windows(ds: TimeSeriesDataset, win: int, stride: int) -> list[WindowView]:
    """Windows at starts 0, stride, 2*stride, ... while they fit.

    Count equals floor((T - win) / stride) + 1. Non-overlapping iff
    stride >= win.
    """
    if win < 1 or win > ds.length:
        raise ConfigError(f"window size {win} invalid for T={ds.length}")
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    return [WindowView(start, win, ds) for start in range(0, ds.length - win + 1, stride)]


@dataclass
class SynthSpec:
    """Generator knobs for a sinusoid-plus-anomalies benchmark series.

    anomaly_ratio 0 produces a clean (normal-only) series; otherwise the
    ratio must stay below 0.5.
    """

    length: int = 2000
    dim: int = 2
    anomaly_ratio: float = 0.1
    seed: int = 0
    noise: float = 0.05
    amplitude: float = 1.0
    name: str = "synth"

    def __post_init__(self):
        if self.length < 2:
            raise ConfigError(f"length must be >= 2, got {self.length}")
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if not (self.anomaly_ratio == 0.0 or 0.0 < self.anomaly_ratio < 0.5):
            raise ConfigError(
                f"anomaly_ratio must be 0 or in (0, 0.5), got {self.anomaly_ratio}"
            )
        if self.noise < 0:
            raise ConfigError(f"noise must be >= 0, got {self.noise}")
        if self.amplitude <= 0:
            raise ConfigError(f"amplitude must be > 0, got {self.amplitude}")


def _base_signal(spec: SynthSpec) -> np.ndarray:
    rng = np.random.default_rng([spec.seed, 0])
    t = np.arange(spec.length)
    values = np.empty((spec.length, spec.dim))
    for j in range(spec.dim):
        period = rng.uniform(40.0, 80.0)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        values[:, j] = spec.amplitude * np.sin(2.0 * math.pi * t / period + phase)
    values += spec.noise * rng.standard_normal(values.shape)
    return values


def _anomaly_segments(spec: SynthSpec) -> list[tuple[int, int]]:
    """Non-overlapping [start, end) segments covering exactly round(ratio*T) points."""
    target = int(round(spec.anomaly_ratio * spec.length))
    if target == 0:
        return []
    rng = np.random.default_rng([spec.seed, 1])
    segments = []
    taken = np.zeros(spec.length, dtype=bool)
    remaining = target
    attempts = 0
    while remaining > 0:
        attempts += 1
        if attempts > 10000:
            raise ConfigError("could not place anomaly segments; ratio too dense for T")
        seg_len = min(int(rng.integers(5, 26)), remaining)
        if spec.length - seg_len <= 0:
            seg_len = remaining
        start = int(rng.integers(0, spec.length - seg_len + 1))
        lo = max(0, start - 2)
        hi = min(spec.length, start + seg_len + 2)
        if taken[lo:hi].any():
            continue
        taken[start:start + seg_len] = True
        segments.append((start, start + seg_len))
        remaining -= seg_len
    return sorted(segments)


def synth_dataset(spec: SynthSpec) -> TimeSeriesDataset:
    """Deterministic synthetic series: sinusoids plus spike/level-shift segments.

    Injected deltas have magnitude in [3, 4.5] x amplitude, so with zero
    noise every anomalous point differs from the clean baseline by at
    least three signal amplitudes. Labels mark exactly the injected
    points.
    """
    values = _base_signal(spec)
    labels = np.zeros(spec.length, dtype=np.int64)
    rng = np.random.default_rng([spec.seed, 2])
    for start, end in _anomaly_segments(spec):
        magnitude = spec.amplitude * rng.uniform(3.0, 4.5)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        kind = "spike" if rng.random() < 0.5 else "shift"
        if kind == "spike":
            # alternating-sign burst
            pattern = np.where(np.arange(end - start) % 2 == 0, 1.0, -1.0)
            values[start:end] += sign * magnitude * pattern[:, None]
        else:
            values[start:end] += sign * magnitude
        labels[start:end] = 1
    return TimeSeriesDataset(values=values, labels=labels, name=spec.name)
