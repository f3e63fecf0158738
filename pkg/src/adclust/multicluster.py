"""Multi-center extension: heavy-tailed soft assignment with a KL self-target.

With k centers the cosine machinery is replaced by a Student-t style
kernel: q_tj is the normalized inverse of (1 + squared distance), the
target distribution p sharpens q against per-cluster mass, and the
clustering loss is KL(P | Q). With a single center the kernel is
constant 1 and the KL term vanishes, which is exactly why the k = 1 path
uses the cosine loss instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .cluster import squared_distance


@dataclass
class MultiClusterState:
    """k learnable centers (tape leaves) plus the regularizer weight."""

    centers: list  # k lists of f leaf Nodes
    lam: float = 1e-4

    def __post_init__(self):
        if len(self.centers) < 1:
            raise ValueError("need at least one center")
        if self.lam < 0.0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")

    @property
    def k(self) -> int:
        return len(self.centers)

    def center_values(self) -> np.ndarray:
        return np.array([[c.value for c in center] for center in self.centers])


def student_t_assign(H, centers):
    """Row-stochastic T x k soft assignment on the tape."""
    Q = []
    for h in H:
        inv = [1.0 / (1.0 + squared_distance(h, c)) for c in centers]
        total = inv[0]
        for node in inv[1:]:
            total = total + node
        Q.append([node / total for node in inv])
    return Q


def student_t_assign_values(H: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Numpy twin of student_t_assign."""
    H = np.asarray(H, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    d2 = ((H[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    inv = 1.0 / (1.0 + d2)
    return inv / inv.sum(axis=1, keepdims=True)


def target_distribution(q: np.ndarray) -> np.ndarray:
    """Sharpened self-training target; stop-gradient, so plain numpy.

    p_tj is q_tj squared over the cluster mass, renormalized per row.
    """
    q = np.asarray(q, dtype=np.float64)
    weight = q ** 2 / q.sum(axis=0, keepdims=True)
    return weight / weight.sum(axis=1, keepdims=True)


def kl_cluster_loss(p: np.ndarray, q_nodes) -> ad.Node:
    """KL(P | Q) with P fixed; zero target entries contribute nothing."""
    p = np.asarray(p, dtype=np.float64)
    acc = None
    for t, row in enumerate(q_nodes):
        for j, q_node in enumerate(row):
            pij = float(p[t, j])
            if pij <= 0.0:
                continue
            term = pij * (math.log(pij) - ad.log(q_node))
            acc = term if acc is None else acc + term
    if acc is None:
        # all-zero target: KL is 0 by the 0 log 0 convention
        tape = q_nodes[0][0].tape
        return tape.const(0.0)
    return acc


def kl_value(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Per-row KL divergence as plain floats."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    ratio = np.where(p > 0.0, p / np.maximum(q, 1e-300), 1.0)
    terms = np.where(p > 0.0, p * np.log(ratio), 0.0)
    return terms.sum(axis=1)


def multi_distance_loss(H, centers, lam: float, weight_nodes=()) -> ad.Node:
    """Mean over time of summed squared distances to every center."""
    acc = None
    for h in H:
        for c in centers:
            d2 = squared_distance(h, c)
            acc = d2 if acc is None else acc + d2
    loss = acc * (1.0 / len(H))
    weight_nodes = list(weight_nodes)
    if lam > 0.0 and weight_nodes:
        loss = loss + lam * ad.norm_sq(weight_nodes)
    return loss


def multi_anomaly_score(H: np.ndarray, centers: np.ndarray,
                        q: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Per-point score: row KL plus summed squared distance to all centers.

    The learnable threshold plays no role here; the score is fully
    determined by the trained centers and embeddings.
    """
    H = np.asarray(H, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    d2 = ((H[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return kl_value(p, q) + d2.sum(axis=1)
