"""Single-cluster objective: distance mapping plus the adaptive self-labeling loss.

The clustering loss compares a normalized cosine similarity q in [0, 1]
against a self-assigned target p obtained by thresholding q at the
learnable value nu in (0, 1). Inside the logarithm the loss uses a linear
piece for target-1 points and the concave power q**(1-nu) for target-0
points; both pieces grow toward 1 as q and nu grow, so the loss pushes
similarities and the threshold upward together.

Two parallel implementations are kept deliberately: a tape (autodiff)
path used in training and a closed-form numpy path used for grids,
scoring, and as an independent cross-check of the gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import NumericalAbort

Q_FLOOR = 1e-7


@dataclass
class ClusterState:
    """Learnable center and threshold plus the fixed loss hyperparameters.

    center entries and nu_raw are tape leaves; radius_sq is refreshed
    from a quantile each epoch and never receives gradient. nu is the
    logistic squash of nu_raw, which keeps it inside the open interval
    (0, 1) without projection steps.
    """

    center: list  # f leaf Nodes
    nu_raw: ad.Node
    radius_sq: float = 0.0
    rho: float = 0.1
    lam: float = 1e-4
    tau: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise ValueError(f"rho must be in (0, 1], got {self.rho}")
        if not 0.0 <= self.tau <= 0.5:
            raise ValueError(f"tau must be in [0, 0.5], got {self.tau}")
        if self.lam < 0.0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")

    @property
    def nu(self) -> float:
        x = self.nu_raw.value
        if x >= 0:
            v = 1.0 / (1.0 + math.exp(-x))
        else:
            e = math.exp(x)
            v = e / (1.0 + e)
        # the squash saturates in float64 around |x| ~ 37; keep the
        # interval open as the contract requires
        return min(max(v, 1e-12), 1.0 - 1e-12)

    def nu_node(self) -> ad.Node:
        return ad.sigmoid(self.nu_raw)

    def center_values(self) -> np.ndarray:
        return np.array([c.value for c in self.center])

    @property
    def center_norm(self) -> float:
        return float(np.linalg.norm(self.center_values()))


def nu_raw_from_nu(nu: float) -> float:
    """Inverse of the logistic squash."""
    if not 0.0 < nu < 1.0:
        raise ValueError(f"nu must be in (0, 1), got {nu}")
    return math.log(nu / (1.0 - nu))


# -- assignment -------------------------------------------------------------


def soft_assign(h, center) -> ad.Node:
    """Cosine similarity between a feature and the center, mapped to [0, 1]."""
    return ad.cosine_sim(h, center) * 0.5 + 0.5


def soft_assign_values(H: np.ndarray, center: np.ndarray) -> np.ndarray:
    """Numpy twin of soft_assign for whole feature matrices."""
    h_norms = np.linalg.norm(H, axis=1)
    c_norm = np.linalg.norm(center)
    if c_norm == 0.0 or np.any(h_norms == 0.0):
        raise NumericalAbort("zero-norm feature or center in soft assignment")
    cos = np.clip(H @ center / (h_norms * c_norm), -1.0, 1.0)
    return (cos + 1.0) / 2.0


def assign_target(q, nu: float, tau: float = 0.0):
    """Threshold similarities into hard targets, then optionally smooth.

    Points with q >= nu get target 1 (ties count as inside). No gradient
    flows through this step; it consumes and returns plain floats.
    """
    q = np.asarray(q, dtype=np.float64)
    p_hard = (q >= nu).astype(np.float64)
    p_soft = p_hard * (1.0 - tau) + (1.0 - p_hard) * tau
    return p_hard, p_soft


# -- adaptive loss: closed-form numpy path ----------------------------------


def _clamp_q(q):
    return np.clip(np.asarray(q, dtype=np.float64), Q_FLOOR, 1.0)


def linear_piece_slope(nu):
    """Slope (1 - nu**(1-nu)) / (1 - nu) of the target-1 piece; in (0, 1)."""
    nu = np.asarray(nu, dtype=np.float64)
    return (1.0 - nu ** (1.0 - nu)) / (1.0 - nu)


def one_directed_terms(q, p, nu: float) -> np.ndarray:
    """Per-point loss terms -(p*log f1 + (1-p)*log f2) as plain floats."""
    qc = _clamp_q(q)
    p = np.asarray(p, dtype=np.float64)
    slope = linear_piece_slope(nu)
    f1 = slope * (qc - 1.0) + 1.0
    log_f2 = (1.0 - nu) * np.log(qc)
    return -(p * np.log(f1) + (1.0 - p) * log_f2)


def one_directed_loss_value(q, p, nu: float) -> float:
    return float(np.sum(one_directed_terms(q, p, nu)))


def grad_one_directed(q, p, nu: float, pointwise: bool = False):
    """Closed-form (dL/dq per point, dL/dnu) for the adaptive loss.

    dL/dnu is summed over points by default; pointwise=True returns the
    per-point contributions instead. Matches the tape autodiff of
    one_directed_loss to ~1e-10 and central finite differences to 1e-4
    relative at interior points.
    """
    qc = _clamp_q(q)
    p = np.asarray(p, dtype=np.float64)
    slope = linear_piece_slope(nu)
    f1 = slope * (qc - 1.0) + 1.0
    dq = -(p * slope / f1 + (1.0 - p) * (1.0 - nu) / qc)
    # d f1 / d nu = (q-1)/((1-nu)^2 nu^nu) * (nu^nu + nu - nu^2 - 1 + nu(1-nu) log nu)
    brace = nu ** nu + nu - nu * nu - 1.0 + nu * (1.0 - nu) * math.log(nu)
    df1_dnu = (qc - 1.0) / ((1.0 - nu) ** 2 * nu ** nu) * brace
    dnu_terms = -p * df1_dnu / f1 + (1.0 - p) * np.log(qc)
    if pointwise:
        return dq, dnu_terms
    return dq, float(np.sum(dnu_terms))


# -- adaptive loss: tape path ------------------------------------------------


def one_directed_loss(q_nodes, p, nu_node: ad.Node) -> ad.Node:
    """Tape version of the adaptive loss; p is a stop-gradient target.

    q entries are assumed in [0, 1] (soft_assign guarantees it); the log
    clamp in the engine covers q = 0.
    """
    p = [float(x) for x in np.asarray(p, dtype=np.float64)]
    if len(q_nodes) != len(p):
        raise ValueError(f"q/p length mismatch: {len(q_nodes)} vs {len(p)}")
    one_minus_nu = 1.0 - nu_node
    slope = (1.0 - ad.exp(one_minus_nu * ad.log(nu_node))) / one_minus_nu
    acc = None
    for q_t, p_t in zip(q_nodes, p):
        f1 = slope * (q_t - 1.0) + 1.0
        term = p_t * ad.log(f1) + (1.0 - p_t) * (one_minus_nu * ad.log(q_t))
        acc = term if acc is None else acc + term
    return -acc


# -- distance objective ------------------------------------------------------


def squared_distance(h, center) -> ad.Node:
    return ad.norm_sq([h_i - c_i for h_i, c_i in zip(h, center)])


def distance_loss(H, state: ClusterState, weight_nodes=()) -> ad.Node:
    """Hypersphere objective for one window of features.

    radius_sq enters as a constant (no gradient); gradient flows to the
    embedder weights through H and to the center through the distances.
    The regularizer covers weight matrices only.
    """
    acc = None
    for h in H:
        excess = ad.hinge(squared_distance(h, state.center) - state.radius_sq)
        acc = excess if acc is None else acc + excess
    loss = state.radius_sq + acc * (1.0 / state.rho)
    weight_nodes = list(weight_nodes)
    if state.lam > 0.0 and weight_nodes:
        loss = loss + state.lam * ad.norm_sq(weight_nodes)
    return loss


def nearest_rank_quantile(values, level: float) -> float:
    """Nearest-rank quantile: smallest element with rank >= ceil(level*n)."""
    xs = sorted(float(v) for v in values)
    if not xs:
        raise ValueError("quantile of empty sequence")
    if not 0.0 <= level <= 1.0:
        raise ValueError(f"quantile level {level} outside [0, 1]")
    # round before ceil so float dust in level*n cannot bump the rank
    rank = math.ceil(round(level * len(xs), 9))
    return xs[max(rank, 1) - 1]


def update_radius(dists_sq, rho: float) -> float:
    """Refresh the squared radius as the (1-rho) nearest-rank quantile."""
    return nearest_rank_quantile(dists_sq, 1.0 - rho)


def total_loss(l_distance: ad.Node, l_cluster: ad.Node) -> ad.Node:
    out = l_distance + l_cluster
    if math.isnan(out.value) or math.isinf(out.value):
        raise NumericalAbort(
            f"non-finite total loss: distance={l_distance.value!r} cluster={l_cluster.value!r}"
        )
    return out
