"""Evaluation metrics without point adjustment.

Seven numbers per prediction/truth pair: point-wise F1, affiliation
precision/recall, range-ROC and range-PR areas at one buffer length, and
their averages over a buffer grid (volume-under-surface style). All
functions are pure and operate on numpy arrays.

Parameter choices that the metric families leave open are fixed here and
should be reported next to any numbers: the event buffer is a symmetric
linear ramp clipped at the series ends, and the volume grid defaults to
buffer lengths 0 .. window // 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

DEFAULT_BUFFER = 5
DEFAULT_WINDOW = 100


def _as_binary(x, name):
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D")
    vals = set(np.unique(arr)) - {0, 1, 0.0, 1.0, False, True}
    if vals:
        raise ValueError(f"{name} must be binary, found {sorted(vals)}")
    return arr.astype(np.int64)


def events_from_labels(labels) -> list:
    """Maximal runs of ones as inclusive (start, end) index pairs."""
    labels = np.asarray(labels).astype(bool)
    if labels.ndim != 1:
        raise ValueError("labels must be 1-D")
    events = []
    start = None
    for i, v in enumerate(labels):
        if v and start is None:
            start = i
        elif not v and start is not None:
            events.append((start, i - 1))
            start = None
    if start is not None:
        events.append((start, len(labels) - 1))
    return events


# -- point-wise F1 -----------------------------------------------------------


def f1_pointwise(pred, truth):
    """(precision, recall, f1) with 0/0 conventions resolving to 0."""
    pred = _as_binary(pred, "pred")
    truth = _as_binary(truth, "truth")
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    tp = int(np.sum((pred == 1) & (truth == 1)))
    fp = int(np.sum((pred == 1) & (truth == 0)))
    fn = int(np.sum((pred == 0) & (truth == 1)))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


# -- affiliation precision / recall -------------------------------------------


class AffiliationPR(NamedTuple):
    precision: float
    recall: float
    precision_defined: bool


def _zone_ids(T: int, events: list) -> np.ndarray:
    """Assign each index to its nearest truth event (ties to the earlier one)."""
    idx = np.arange(T)
    dists = np.stack([np.maximum.reduce([s - idx, idx - e, np.zeros(T, dtype=np.int64)])
                      for s, e in events])
    return dists.argmin(axis=0)


def _survival_fraction(sorted_vals: np.ndarray, d) -> np.ndarray:
    """Fraction of sorted_vals that are >= d (vectorized over d)."""
    n = len(sorted_vals)
    return (n - np.searchsorted(sorted_vals, d, side="left")) / n


def affiliation_pr(pred, truth) -> AffiliationPR:
    """Event-local affiliation metrics on integer time points.

    The series is partitioned into zones, one per truth event, each index
    belonging to its nearest event. Within a zone, a predicted point is
    credited with the probability that a uniformly random zone point lies
    at least as far from the event as it does; a truth point is credited
    with the probability that a uniformly random zone point lies at least
    as far from it as the nearest prediction does. Precision averages
    prediction credits per zone then across zones with predictions;
    recall averages truth credits per event then across events.

    Empty truth is an error. Empty prediction leaves precision undefined;
    it is reported as 0.0 with precision_defined=False so that tabulated
    comparisons never crash.
    """
    pred = _as_binary(pred, "pred")
    truth = _as_binary(truth, "truth")
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    events = events_from_labels(truth)
    if not events:
        raise ValueError("affiliation metrics undefined for empty truth")
    T = len(truth)
    zone_of = _zone_ids(T, events)
    pred_idx = np.flatnonzero(pred)

    zone_precisions = []
    event_recalls = []
    for j, (s, e) in enumerate(events):
        zone = np.flatnonzero(zone_of == j)
        event_dist = np.maximum.reduce([s - zone, zone - e, np.zeros(len(zone), dtype=np.int64)])
        sorted_event_dist = np.sort(event_dist)
        preds_here = pred_idx[zone_of[pred_idx] == j]

        if len(preds_here) > 0:
            d_pred = np.maximum.reduce(
                [s - preds_here, preds_here - e, np.zeros(len(preds_here), dtype=np.int64)]
            )
            zone_precisions.append(float(np.mean(_survival_fraction(sorted_event_dist, d_pred))))

        truth_points = np.arange(s, e + 1)
        if len(preds_here) > 0:
            nearest = np.min(np.abs(truth_points[:, None] - preds_here[None, :]), axis=1)
            credits = []
            for y, d in zip(truth_points, nearest):
                dist_to_y = np.sort(np.abs(zone - y))
                credits.append(float(_survival_fraction(dist_to_y, d)))
            event_recalls.append(float(np.mean(credits)))
        else:
            event_recalls.append(0.0)

    recall = float(np.mean(event_recalls))
    if zone_precisions:
        return AffiliationPR(float(np.mean(zone_precisions)), recall, True)
    return AffiliationPR(0.0, recall, False)


# -- range AUC and volume-under-surface ---------------------------------------


def buffered_labels(truth, buffer: int) -> np.ndarray:
    """Soften event borders with a linear ramp of the given length.

    Position i steps outside an event border receives weight
    1 - i / (buffer + 1); overlaps take the maximum, and the result is
    clipped at the series ends. buffer = 0 returns the labels unchanged.
    """
    truth = _as_binary(truth, "truth").astype(np.float64)
    if buffer < 0:
        raise ValueError(f"buffer must be >= 0, got {buffer}")
    if buffer == 0:
        return truth
    out = truth.copy()
    T = len(truth)
    for s, e in events_from_labels(truth):
        for i in range(1, buffer + 1):
            w = 1.0 - i / (buffer + 1.0)
            if s - i >= 0:
                out[s - i] = max(out[s - i], w)
            if e + i < T:
                out[e + i] = max(out[e + i], w)
    return out


def _sweep_curve(scores: np.ndarray, weights: np.ndarray):
    """TPR/FPR/precision over all descending score thresholds (ties grouped)."""
    order = np.argsort(-scores, kind="stable")
    w = weights[order]
    s = scores[order]
    boundaries = np.flatnonzero(np.diff(s)) if len(s) > 1 else np.array([], dtype=int)
    cut = np.concatenate([boundaries, [len(s) - 1]])
    cum_w = np.cumsum(w)[cut]
    cum_n = cut + 1.0
    P = weights.sum()
    N = len(weights) - P
    if P <= 0 or N <= 0:
        raise ValueError("need both positive and negative mass in the truth labels")
    tpr = cum_w / P
    fpr = (cum_n - cum_w) / N
    precision = cum_w / cum_n
    return tpr, fpr, precision


def range_auc(scores, truth, buffer: int = DEFAULT_BUFFER):
    """(range-ROC area, range-PR area) on buffer-softened labels.

    All distinct score thresholds are swept; areas are trapezoidal. With
    buffer = 0 the ROC area coincides exactly with the classic
    tie-corrected AUC.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = _as_binary(truth, "truth")
    if scores.shape != truth.shape:
        raise ValueError(f"length mismatch: {scores.shape} vs {truth.shape}")
    if not events_from_labels(truth):
        raise ValueError("range metrics undefined for empty truth")
    weights = buffered_labels(truth, buffer)
    tpr, fpr, precision = _sweep_curve(scores, weights)

    tpr_roc = np.concatenate([[0.0], tpr])
    fpr_roc = np.concatenate([[0.0], fpr])
    roc_area = float(np.sum(np.diff(fpr_roc) * (tpr_roc[1:] + tpr_roc[:-1]) / 2.0))

    rec_pr = np.concatenate([[0.0], tpr])
    prec_pr = np.concatenate([[1.0], precision])
    pr_area = float(np.sum(np.diff(rec_pr) * (prec_pr[1:] + prec_pr[:-1]) / 2.0))
    return roc_area, pr_area


def vus(scores, truth, buffers=None):
    """Average the two range areas over a grid of buffer lengths."""
    if buffers is None:
        buffers = range(0, DEFAULT_WINDOW // 2 + 1)
    buffers = list(buffers)
    if not buffers:
        raise ValueError("buffer grid must be nonempty")
    rocs, prs = zip(*(range_auc(scores, truth, b) for b in buffers))
    return float(np.mean(rocs)), float(np.mean(prs))


# -- report --------------------------------------------------------------------


METRIC_COLUMNS = ("f1", "aff_p", "aff_r", "r_a_r", "r_a_p", "v_roc", "v_pr")


@dataclass
class EvalReport:
    """The seven tabulated metrics for one prediction/truth pair."""

    f1: float
    aff_p: float
    aff_r: float
    r_a_r: float
    r_a_p: float
    v_roc: float
    v_pr: float
    aff_p_defined: bool = True

    def as_row(self) -> list:
        return [getattr(self, c) for c in METRIC_COLUMNS]

    def to_kv_text(self) -> str:
        lines = [f"{c}={float(getattr(self, c))!r}" for c in METRIC_COLUMNS]
        lines.append(f"aff_p_defined={self.aff_p_defined!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_kv_text(cls, text: str) -> "EvalReport":
        fields = {}
        for line in text.strip().splitlines():
            key, _, raw = line.partition("=")
            fields[key] = raw
        return cls(
            **{c: float(fields[c]) for c in METRIC_COLUMNS},
            aff_p_defined=fields.get("aff_p_defined", "True") == "True",
        )

    def to_csv_text(self) -> str:
        header = ",".join(METRIC_COLUMNS)
        row = ",".join(repr(float(v)) for v in self.as_row())
        return f"{header}\n{row}\n"


def evaluate(truth, pred, scores=None, buffer: int = DEFAULT_BUFFER,
             vus_buffers=None) -> EvalReport:
    """Assemble all seven metrics; scores default to the binary prediction."""
    truth = _as_binary(truth, "truth")
    pred = _as_binary(pred, "pred")
    if scores is None:
        scores = pred.astype(np.float64)
    _, _, f1 = f1_pointwise(pred, truth)
    aff = affiliation_pr(pred, truth)
    r_a_r, r_a_p = range_auc(scores, truth, buffer)
    v_roc, v_pr = vus(scores, truth, vus_buffers)
    return EvalReport(
        f1=f1,
        aff_p=aff.precision,
        aff_r=aff.recall,
        r_a_r=r_a_r,
        r_a_p=r_a_p,
        v_roc=v_roc,
        v_pr=v_pr,
        aff_p_defined=aff.precision_defined,
    )
