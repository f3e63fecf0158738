"""Per-point anomaly scores and percentile thresholding.

Scores are computed window by window (stride = window size, with one
overlapping tail window when the length is not a multiple) and
concatenated in time order. Inference is pure numpy: the threshold and
center are frozen, targets are hard (no label smoothing).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import embed
from .cluster import (assign_target, nearest_rank_quantile, one_directed_terms,
                      soft_assign_values)
from .data import TimeSeriesDataset
from .errors import ConfigError
from .model import ModelState
from .multicluster import multi_anomaly_score, student_t_assign_values, target_distribution


@dataclass
class ScoreSeries:
    """Scores plus the derived threshold and binary labels."""

    scores: np.ndarray
    threshold: float
    labels: np.ndarray
    alpha: float


def percentile_threshold(scores, alpha: float) -> float:
    """Threshold at the (1 - alpha) nearest-rank quantile of the scores."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ConfigError("cannot threshold an empty score series")
    return float(nearest_rank_quantile(scores, 1.0 - alpha))


def label_scores(scores, alpha: float) -> ScoreSeries:
    """Binary labels by strict comparison against the percentile threshold."""
    scores = np.asarray(scores, dtype=np.float64)
    delta = percentile_threshold(scores, alpha)
    return ScoreSeries(
        scores=scores,
        threshold=delta,
        labels=(scores > delta).astype(np.int64),
        alpha=alpha,
    )


def _window_starts(T: int, win: int) -> list:
    """Non-overlapping starts plus one tail window when T % win != 0."""
    if T <= win:
        return [0]
    starts = list(range(0, T - win + 1, win))
    if starts[-1] + win < T:
        starts.append(T - win)
    return starts


def _embed_series(values: np.ndarray, model: ModelState) -> np.ndarray:
    """Embed a whole series into (T, f), honoring window boundaries."""
    T = values.shape[0]
    win = min(int(model.config_echo.get("window", embed_default_window(T))), T)
    f = model.embedder.hidden_dim
    H = np.zeros((T, f))
    filled = np.zeros(T, dtype=bool)
    for start in _window_starts(T, win):
        block = embed.forward_values(values[start:start + win], model.embedder, model.params)
        fresh = ~filled[start:start + win]
        H[start:start + win][fresh] = block[fresh]
        filled[start:start + win] = True
    return H


def embed_default_window(T: int) -> int:
    return min(100, T)


def score_single(data: TimeSeriesDataset, model: ModelState) -> np.ndarray:
    """Self-labeling score: adaptive-loss term plus squared distance minus radius."""
    if model.mode != "single":
        raise ConfigError(f"model mode {model.mode!r} is not 'single'")
    H = _embed_series(data.values, model)
    center = model.center
    q = soft_assign_values(H, center)
    p_hard, _ = assign_target(q, model.nu, tau=0.0)
    terms = one_directed_terms(q, p_hard, model.nu)
    dist_sq = ((H - center) ** 2).sum(axis=1)
    return terms + dist_sq - model.radius_sq


def score_multi(data: TimeSeriesDataset, model: ModelState) -> np.ndarray:
    """Multi-center score: per-row KL plus summed squared distances."""
    if model.mode != "multi":
        raise ConfigError(f"model mode {model.mode!r} is not 'multi'")
    H = _embed_series(data.values, model)
    q = student_t_assign_values(H, model.centers)
    p = target_distribution(q)
    return multi_anomaly_score(H, model.centers, q, p)


def score_series(data: TimeSeriesDataset, model: ModelState, alpha: float) -> ScoreSeries:
    scores = score_single(data, model) if model.mode == "single" else score_multi(data, model)
    return label_scores(scores, alpha)


def embedding_dispersion(data: TimeSeriesDataset, model: ModelState) -> float:
    """Mean squared distance of embeddings to the (first) center."""
    H = _embed_series(data.values, model)
    return float(((H - model.center) ** 2).sum(axis=1).mean())


def save_scores_csv(path, series: ScoreSeries) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_index", "score", "label"])
        for t, (s, lab) in enumerate(zip(series.scores, series.labels)):
            writer.writerow([t, repr(float(s)), int(lab)])


def load_scores_csv(path):
    """Return (scores, labels) arrays from a scores CSV."""
    scores = []
    labels = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["time_index", "score", "label"]:
            raise ConfigError(f"{path}: unexpected scores header {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise ConfigError(f"{path}:{lineno}: expected 3 fields")
            scores.append(float(row[1]))
            labels.append(int(row[2]))
    return np.asarray(scores), np.asarray(labels, dtype=np.int64)
