"""Training loop: embed, assign, compose losses, backpropagate, update.

Each epoch refreshes the squared radius from the quantile of all
training distances first, then steps over shuffled batches of whole
windows. One optimizer instance covers embedder weights, the center(s),
and the raw threshold jointly. The loop is single-threaded and
deterministic for a fixed (data, config, seed).
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import embed
from .cluster import (ClusterState, assign_target, distance_loss, nu_raw_from_nu,
                      one_directed_loss, soft_assign, total_loss, update_radius)
from .data import TimeSeriesDataset, make_windows
from .errors import CollapseError, ConfigError, NumericalAbort
from .model import ModelState
from .multicluster import (MultiClusterState, kl_cluster_loss, multi_distance_loss,
                           student_t_assign, student_t_assign_values, target_distribution)

LOSS_KINDS = ("total", "distance_only")
CENTER_INITS = ("warm", "zero")


@dataclass
class TrainConfig:
    embedder: embed.EmbedderConfig = field(default_factory=embed.EmbedderConfig)
    epochs: int = 50
    batch_windows: int = 8
    optimizer: str = "adam"
    lr: float = 0.01
    rho: float = 0.1
    lam: float = 1e-4
    tau: float = 0.1
    nu_init: float = 0.5
    seed: int = 0
    mode: str = "single"
    k: int = 1
    window: int = 100
    stride: int | None = None
    collapse_tol: float = 1e-6  # 0 disables the sentinel
    loss: str = "total"
    center_init: str = "warm"
    freeze_center: bool = False
    converge_rtol: float = 1e-5
    converge_patience: int = 10
    snapshot_every: int = 5

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if self.batch_windows < 1:
            raise ConfigError(f"batch_windows must be >= 1, got {self.batch_windows}")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"optimizer must be adam or sgd, got {self.optimizer!r}")
        if self.mode not in ("single", "multi"):
            raise ConfigError(f"mode must be single or multi, got {self.mode!r}")
        if self.mode == "multi" and self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.loss not in LOSS_KINDS:
            raise ConfigError(f"loss must be one of {LOSS_KINDS}, got {self.loss!r}")
        if self.center_init not in CENTER_INITS:
            raise ConfigError(f"center_init must be one of {CENTER_INITS}")
        if not 0.0 < self.nu_init < 1.0:
            raise ConfigError(f"nu_init must be in (0, 1), got {self.nu_init}")

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "embedder"}
        d["embedder"] = self.embedder.to_dict()
        return d


@dataclass
class EpochRecord:
    epoch: int
    nu: float
    r_sq: float
    mean_dist: float
    l_cluster: float
    l_distance: float
    l_total: float
    c_norm: float
    wall_time: float = 0.0  # excluded from serialization


LOG_COLUMNS = ("epoch", "nu", "r_sq", "mean_dist", "l_cluster", "l_distance",
               "l_total", "c_norm")


@dataclass
class TrainLog:
    """One record per completed epoch plus periodic center snapshots."""

    records: list = field(default_factory=list)
    center_snapshots: list = field(default_factory=list)  # (epoch, np.ndarray)

    def to_text(self) -> str:
        lines = [",".join(LOG_COLUMNS)]
        for r in self.records:
            lines.append(",".join(
                [str(r.epoch)] + [repr(float(getattr(r, c))) for c in LOG_COLUMNS[1:]]
            ))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TrainLog":
        lines = text.strip().splitlines()
        if not lines or lines[0] != ",".join(LOG_COLUMNS):
            raise ConfigError("unexpected training-log header")
        records = []
        for line in lines[1:]:
            parts = line.split(",")
            records.append(EpochRecord(
                epoch=int(parts[0]),
                **{c: float(v) for c, v in zip(LOG_COLUMNS[1:], parts[1:])},
            ))
        return cls(records=records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def warm_start(window_blocks, config: embed.EmbedderConfig, snapshot) -> np.ndarray:
    """Mean embedding over one forward pass, nudged off zero if degenerate."""
    if not window_blocks:
        raise ConfigError("warm start needs at least one window")
    total = np.zeros(config.hidden_dim)
    count = 0
    for block in window_blocks:
        H = embed.forward_values(block, config, snapshot)
        total += H.sum(axis=0)
        count += H.shape[0]
    center = total / count
    if np.linalg.norm(center) < 1e-3:
        center = center.copy()
        center[0] += 1e-1
    return center


def _embed_all(blocks, config, snapshot):
    return [embed.forward_values(b, config, snapshot) for b in blocks]


def _multi_center_init(H_all: np.ndarray, k: int, rng) -> np.ndarray:
    """k seeded sample embeddings with a small jitter to break ties."""
    idx = rng.choice(H_all.shape[0], size=min(k, H_all.shape[0]), replace=False)
    centers = H_all[idx].copy()
    while centers.shape[0] < k:
        centers = np.vstack([centers, H_all[rng.integers(H_all.shape[0])]])
    centers += 0.01 * rng.standard_normal(centers.shape)
    return centers


def train(data: TimeSeriesDataset, config: TrainConfig,
          normalizer=None) -> tuple[ModelState, TrainLog]:
    """Run the full loop on (already normalized) data."""
    windows = make_windows(data, config.window,
                           config.stride if config.stride is not None else config.window)
    blocks = [w.values for w in windows]

    tape = ad.Tape()
    params = embed.init_params(config.embedder, config.seed, tape)
    rng = np.random.default_rng([config.seed, 101])

    snapshot = params.snapshot()
    f = config.embedder.hidden_dim
    if config.mode == "single":
        if config.center_init == "zero":
            center0 = np.zeros(f)
        else:
            center0 = warm_start(blocks, config.embedder, snapshot)
        center_leaves = tape.leaf_vector(center0)
        nu_raw = tape.leaf(nu_raw_from_nu(config.nu_init))
        state = ClusterState(center=center_leaves, nu_raw=nu_raw,
                             rho=config.rho, lam=config.lam, tau=config.tau)
        centers_list = [center_leaves]
    else:
        H_all = np.vstack(_embed_all(blocks, config.embedder, snapshot))
        if config.center_init == "zero":
            centers0 = np.zeros((config.k, f))
        else:
            centers0 = _multi_center_init(H_all, config.k, rng)
        centers_list = [tape.leaf_vector(c) for c in centers0]
        nu_raw = tape.leaf(nu_raw_from_nu(config.nu_init))
        state = MultiClusterState(centers=centers_list, lam=config.lam)

    opt_params = params.trainable()
    if not config.freeze_center:
        for leaves in centers_list:
            opt_params.extend(leaves)
    if config.mode == "single" and config.loss == "total":
        opt_params.append(nu_raw)
    adam_state = ad.AdamState.for_params(opt_params)
    base_mark = tape.checkpoint()

    weight_leaves = params.weight_nodes()
    log = TrainLog()
    n_win = len(windows)
    order_rng = np.random.default_rng([config.seed, 202])

    def centers_values():
        return np.array([[c.value for c in leaves] for leaves in centers_list])

    for epoch in range(config.epochs + 1):
        t0 = time.perf_counter()
        snapshot = params.snapshot()
        H_blocks = _embed_all(blocks, config.embedder, snapshot)
        H_flat = np.vstack(H_blocks)
        cvals = centers_values()
        if config.mode == "single":
            dists = ((H_flat - cvals[0]) ** 2).sum(axis=1)
            nu_now = state.nu
        else:
            dists = ((H_flat[:, None, :] - cvals[None, :, :]) ** 2).sum(axis=2).mean(axis=1)
            nu_now = 1.0 / (1.0 + math.exp(-nu_raw.value))
        mean_dist = float(dists.mean())
        c_norm = float(np.linalg.norm(cvals[0]))

        if config.collapse_tol > 0 and c_norm < config.collapse_tol \
                and mean_dist < config.collapse_tol:
            raise CollapseError(
                f"epoch {epoch}: center norm {c_norm:.3e} and embedding spread "
                f"{mean_dist:.3e} both under {config.collapse_tol:.1e}"
            )

        if epoch % config.snapshot_every == 0:
            log.center_snapshots.append((epoch, cvals[0].copy()))
        if epoch == config.epochs:
            break

        if config.mode == "single":
            state.radius_sq = update_radius(dists, config.rho)
        multi_targets = None
        if config.mode == "multi":
            q_all = student_t_assign_values(H_flat, cvals)
            multi_targets = target_distribution(q_all)

        perm = order_rng.permutation(n_win)
        batch_l_dist = []
        batch_l_clus = []
        batch_l_total = []
        for lo in range(0, n_win, config.batch_windows):
            batch = perm[lo:lo + config.batch_windows]
            tape.rewind(base_mark)
            tape.zero_grads()
            if config.mode == "single":
                l_d, l_c = _single_batch_losses(batch, blocks, params, state,
                                                weight_leaves, config)
            else:
                l_d, l_c = _multi_batch_losses(batch, blocks, params, state,
                                               weight_leaves, multi_targets, config)
            if config.loss == "distance_only":
                loss = l_d
                if math.isnan(loss.value) or math.isinf(loss.value):
                    raise NumericalAbort(f"non-finite distance loss {loss.value!r}")
            else:
                loss = total_loss(l_d, l_c)
            ad.backward(loss)
            grads = ad.collect_grads(opt_params)
            if config.optimizer == "adam":
                ad.adam_step(opt_params, grads, adam_state, config.lr)
            else:
                ad.sgd_step(opt_params, grads, config.lr)
            batch_l_dist.append(l_d.value)
            batch_l_clus.append(l_c.value if config.loss == "total" else 0.0)
            batch_l_total.append(loss.value)

        record = EpochRecord(
            epoch=epoch + 1,
            nu=nu_now,
            r_sq=state.radius_sq if config.mode == "single" else 0.0,
            mean_dist=mean_dist,
            l_cluster=float(np.mean(batch_l_clus)),
            l_distance=float(np.mean(batch_l_dist)),
            l_total=float(np.mean(batch_l_total)),
            c_norm=c_norm,
            wall_time=time.perf_counter() - t0,
        )
        log.records.append(record)

        if _converged(log, config):
            break

    model = ModelState(
        mode=config.mode,
        embedder=config.embedder,
        params=params.snapshot(),
        centers=centers_values(),
        nu=state.nu if config.mode == "single" else config.nu_init,
        radius_sq=state.radius_sq if config.mode == "single" else 0.0,
        normalizer=normalizer,
        config_echo=config.to_dict(),
    )
    return model, log


def _single_batch_losses(batch, blocks, params, state, weight_leaves, config):
    nu_node = state.nu_node()
    nu_now = state.nu
    l_d = None
    l_c = None
    for wi in batch:
        H = embed.forward(blocks[wi], params)
        d = distance_loss(H, state, weight_leaves)
        l_d = d if l_d is None else l_d + d
        if config.loss == "total":
            q_nodes = [soft_assign(h, state.center) for h in H]
            q_vals = np.array([q.value for q in q_nodes])
            _, p_soft = assign_target(q_vals, nu_now, state.tau)
            c = one_directed_loss(q_nodes, p_soft, nu_node)
            l_c = c if l_c is None else l_c + c
    inv = 1.0 / len(batch)
    l_d = l_d * inv
    if config.loss == "total":
        l_c = l_c * inv
    return l_d, l_c


def _multi_batch_losses(batch, blocks, params, state, weight_leaves,
                        targets, config):
    """KL self-training loss; targets were refreshed once this epoch."""
    l_d = None
    l_c = None
    for wi in batch:
        H = embed.forward(blocks[wi], params)
        d = multi_distance_loss(H, state.centers, state.lam, weight_leaves)
        l_d = d if l_d is None else l_d + d
        q_nodes = student_t_assign(H, state.centers)
        # target rows aligned with this window inside the concatenated pass
        offset = sum(len(blocks[i]) for i in range(wi))
        p_rows = targets[offset:offset + len(blocks[wi])]
        c = kl_cluster_loss(p_rows, q_nodes)
        l_c = c if l_c is None else l_c + c
    inv = 1.0 / len(batch)
    return l_d * inv, l_c * inv


def _converged(log: TrainLog, config: TrainConfig) -> bool:
    n = config.converge_patience
    if len(log.records) <= n:
        return False
    old = log.records[-1 - n].l_total
    new = log.records[-1].l_total
    return (old - new) / max(abs(old), 1e-12) < config.converge_rtol


def export_centroid_trajectory(log: TrainLog, path) -> None:
    """Write epoch, raw center, and a 2-D principal-axis projection.

    With fewer than two snapshots only the raw center is written. Axis
    signs are fixed so the largest-magnitude component is positive,
    keeping the file deterministic.
    """
    snaps = log.center_snapshots
    if not snaps:
        raise ConfigError("no center snapshots to export")
    f = len(snaps[0][1])
    header = ["epoch"] + [f"c_{i}" for i in range(f)]
    rows = []
    if len(snaps) >= 2:
        M = np.stack([c for _, c in snaps])
        centered = M - M.mean(axis=0)
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        axes = vt[:2] if vt.shape[0] >= 2 else np.vstack([vt, np.zeros((2 - vt.shape[0], f))])
        for i in range(axes.shape[0]):
            j = int(np.argmax(np.abs(axes[i])))
            if axes[i, j] < 0:
                axes[i] = -axes[i]
        proj = centered @ axes.T
        header += ["pc_1", "pc_2"]
        for (epoch, c), p in zip(snaps, proj):
            rows.append([epoch] + [repr(float(v)) for v in c] + [repr(float(v)) for v in p])
    else:
        for epoch, c in snaps:
            rows.append([epoch] + [repr(float(v)) for v in c])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
