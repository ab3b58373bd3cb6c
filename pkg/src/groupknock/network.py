"""Competing-layer network and the weight-derived group importance statistic.

Architecture: each feature group and its knockoff copy feed one linear neuron
(h_j = S_j . x_{G_j} + St_j . xt_{G_j}), so original and knockoff weights
compete for the group's signal. The m competing outputs are scaled
elementwise by w0 and passed through a two-hidden-layer ReLU perceptron
(m neurons per layer) to a scalar response.

Training minimizes mean squared error plus an L1 penalty on every weight
(filters and MLP matrices, never biases) with mini-batch Adam. All gradients
are computed analytically here; there is no autodiff dependency.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, NumericalDivergence
from .knockoffs import AugmentedDesign, GroupPartition

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

EARLY_STOP_PATIENCE = 20
_EARLY_STOP_RTOL = 1e-6


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    l1_strength: float = 1e-3
    epochs: int = 200
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.l1_strength < 0:
            raise ValueError("l1_strength must be non-negative")


@dataclass
class NetworkWeights:
    """Filter pairs per group plus the MLP weight matrices and biases."""

    filters_x: tuple[np.ndarray, ...]
    filters_knock: tuple[np.ndarray, ...]
    w0: np.ndarray  # (m,) elementwise scale between competing layer and MLP
    w1: np.ndarray  # (m, m)
    w2: np.ndarray  # (m, m)
    w3: np.ndarray  # (m,)
    b1: np.ndarray
    b2: np.ndarray
    b3: np.ndarray  # (1,)
    loss_trace: list[float] | None = field(default=None, repr=False, compare=False)

    @property
    def m(self) -> int:
        return self.w0.shape[0]

    def copy(self) -> "NetworkWeights":
        return copy.deepcopy(self)


@dataclass
class GroupImportance:
    z: np.ndarray
    z_knock: np.ndarray
    w_stat: np.ndarray


def init_network(partition: GroupPartition, seed: int) -> NetworkWeights:
    """Random initial weights, deterministic given the seed.

    Both sides of every filter pair are drawn from the same distribution
    (scale 1/sqrt(2 p_j), the group neuron's fan-in), so the initializer
    carries no preference between a group and its knockoff. MLP entries are
    scaled by 1/sqrt(fan-in); biases start at zero.
    """
    rng = np.random.default_rng(seed)
    m = partition.m
    filters_x = []
    filters_knock = []
    for g in partition.groups:
        scale = 1.0 / np.sqrt(2.0 * g.size)
        filters_x.append(rng.normal(scale=scale, size=g.size))
        filters_knock.append(rng.normal(scale=scale, size=g.size))
    # Unit-magnitude random signs (variance exactly 1/fan-in): every group
    # starts with a live gate, so the penalty cannot sever a group's gradient
    # path before any signal credit reaches its filters.
    return NetworkWeights(
        filters_x=tuple(filters_x),
        filters_knock=tuple(filters_knock),
        w0=rng.choice((-1.0, 1.0), size=m),
        w1=rng.normal(scale=1.0 / np.sqrt(m), size=(m, m)),
        w2=rng.normal(scale=1.0 / np.sqrt(m), size=(m, m)),
        w3=rng.normal(scale=1.0 / np.sqrt(m), size=m),
        b1=np.zeros(m),
        b2=np.zeros(m),
        b3=np.zeros(1),
    )


def _competing_output(net: NetworkWeights, partition: GroupPartition, xmat: np.ndarray) -> np.ndarray:
    p = partition.p
    h = np.empty((xmat.shape[0], partition.m))
    for j, g in enumerate(partition.groups):
        h[:, j] = xmat[:, g] @ net.filters_x[j] + xmat[:, p + g] @ net.filters_knock[j]
    return h


def _forward_batch(net: NetworkWeights, partition: GroupPartition, xmat: np.ndarray):
    """Returns (prediction, intermediates) for backprop reuse."""
    h = _competing_output(net, partition, xmat)
    u = h * net.w0
    z1 = u @ net.w1 + net.b1
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ net.w2 + net.b2
    a2 = np.maximum(z2, 0.0)
    out = a2 @ net.w3 + net.b3[0]
    return out, (h, u, z1, a1, z2, a2)


def predict(net: NetworkWeights, partition: GroupPartition, xmat: np.ndarray) -> np.ndarray:
    """Network output for each row of an n x 2p matrix [X, X_knock]."""
    xmat = np.asarray(xmat, dtype=float)
    if xmat.ndim != 2 or xmat.shape[1] != 2 * partition.p:
        raise DimensionMismatch(
            f"expected {2 * partition.p} columns, got matrix of shape {xmat.shape}"
        )
    out, _ = _forward_batch(net, partition, xmat)
    return out


def forward(net: NetworkWeights, partition: GroupPartition, row: np.ndarray) -> float:
    """Scalar prediction for a single row laid out as [x, x_knock]."""
    row = np.asarray(row, dtype=float)
    if row.ndim != 1 or row.shape[0] != 2 * partition.p:
        raise DimensionMismatch(
            f"expected a row of length {2 * partition.p}, got shape {row.shape}"
        )
    out, _ = _forward_batch(net, partition, row[None, :])
    return float(out[0])


def _penalized_l1(net: NetworkWeights) -> float:
    total = sum(float(np.sum(np.abs(f))) for f in net.filters_x)
    total += sum(float(np.sum(np.abs(f))) for f in net.filters_knock)
    for w in (net.w0, net.w1, net.w2, net.w3):
        total += float(np.sum(np.abs(w)))
    return total


def loss_and_gradients(
    net: NetworkWeights,
    partition: GroupPartition,
    xmat: np.ndarray,
    y: np.ndarray,
    l1_strength: float,
):
    """Full loss (MSE + L1 on weights) and its gradients.

    Gradients are returned in the same structure as the parameter list from
    :func:`parameter_arrays`. The L1 term contributes sign(w) subgradients,
    taken as 0 at exactly zero.
    """
    y = np.asarray(y, dtype=float)
    n = xmat.shape[0]
    out, (h, u, z1, a1, z2, a2) = _forward_batch(net, partition, xmat)
    err = out - y
    mse = float(np.mean(err**2))
    loss = mse + l1_strength * _penalized_l1(net)

    dout = (2.0 / n) * err
    g_w3 = a2.T @ dout
    g_b3 = np.array([np.sum(dout)])
    da2 = np.outer(dout, net.w3)
    dz2 = da2 * (z2 > 0.0)
    g_w2 = a1.T @ dz2
    g_b2 = dz2.sum(axis=0)
    da1 = dz2 @ net.w2.T
    dz1 = da1 * (z1 > 0.0)
    g_w1 = u.T @ dz1
    g_b1 = dz1.sum(axis=0)
    du = dz1 @ net.w1.T
    g_w0 = (du * h).sum(axis=0)
    dh = du * net.w0

    p = partition.p
    g_fx = []
    g_fk = []
    for j, g in enumerate(partition.groups):
        g_fx.append(xmat[:, g].T @ dh[:, j])
        g_fk.append(xmat[:, p + g].T @ dh[:, j])

    if l1_strength > 0.0:
        for gf, f in zip(g_fx, net.filters_x):
            gf += l1_strength * np.sign(f)
        for gf, f in zip(g_fk, net.filters_knock):
            gf += l1_strength * np.sign(f)
        g_w0 += l1_strength * np.sign(net.w0)
        g_w1 += l1_strength * np.sign(net.w1)
        g_w2 += l1_strength * np.sign(net.w2)
        g_w3 += l1_strength * np.sign(net.w3)

    grads = list(g_fx) + list(g_fk) + [g_w0, g_w1, g_w2, g_w3, g_b1, g_b2, g_b3]
    return loss, grads


def parameter_arrays(net: NetworkWeights) -> list[np.ndarray]:
    """Live references to all trainable arrays, in gradient order."""
    return (
        list(net.filters_x)
        + list(net.filters_knock)
        + [net.w0, net.w1, net.w2, net.w3, net.b1, net.b2, net.b3]
    )


def train(
    net: NetworkWeights,
    design: AugmentedDesign,
    y: np.ndarray,
    cfg: TrainConfig,
) -> NetworkWeights:
    """Mini-batch Adam on MSE + L1; returns new weights, input untouched.

    The per-epoch full-data loss is kept on the returned weights as
    ``loss_trace``. Training stops early once the loss has not improved for
    EARLY_STOP_PATIENCE consecutive epochs. Raises NumericalDivergence if the
    loss becomes non-finite.
    """
    y = np.asarray(y, dtype=float)
    if design.n != y.shape[0]:
        raise DimensionMismatch(f"design has {design.n} rows, response has {y.shape[0]}")
    xmat = design.matrix()
    partition = design.partition
    rng = np.random.default_rng(cfg.seed)

    trained = net.copy()
    params = parameter_arrays(trained)
    adam_m = [np.zeros_like(w) for w in params]
    adam_v = [np.zeros_like(w) for w in params]
    step = 0

    trace: list[float] = []
    best = np.inf
    stale = 0
    n = xmat.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, grads = loss_and_gradients(
                trained, partition, xmat[batch], y[batch], cfg.l1_strength
            )
            if not np.isfinite(loss):
                raise NumericalDivergence(
                    "batch loss became non-finite; lower the learning rate"
                )
            step += 1
            bc1 = 1.0 - ADAM_BETA1**step
            bc2 = 1.0 - ADAM_BETA2**step
            for w, g, m1, v1 in zip(params, grads, adam_m, adam_v):
                m1 *= ADAM_BETA1
                m1 += (1.0 - ADAM_BETA1) * g
                v1 *= ADAM_BETA2
                v1 += (1.0 - ADAM_BETA2) * g * g
                w -= cfg.learning_rate * (m1 / bc1) / (np.sqrt(v1 / bc2) + ADAM_EPS)

        epoch_loss, _ = loss_and_gradients(trained, partition, xmat, y, cfg.l1_strength)
        if not np.isfinite(epoch_loss):
            raise NumericalDivergence("epoch loss became non-finite; lower the learning rate")
        trace.append(epoch_loss)
        if best - epoch_loss > _EARLY_STOP_RTOL * max(1.0, abs(epoch_loss)):
            best = epoch_loss
            stale = 0
        else:
            stale += 1
            if stale >= EARLY_STOP_PATIENCE:
                break

    trained.loss_trace = trace
    return trained


def swap_filter_pairs(net: NetworkWeights, groups) -> NetworkWeights:
    """Weights with (S_j, St_j) exchanged for the given group indices."""
    swap = set(int(j) for j in groups)
    fx = list(net.filters_x)
    fk = list(net.filters_knock)
    for j in swap:
        fx[j], fk[j] = fk[j], fx[j]
    return replace(net, filters_x=tuple(fx), filters_knock=tuple(fk))


def group_importance(net: NetworkWeights, partition: GroupPartition) -> GroupImportance:
    """Statistic W_j = Z_j^2 - Zt_j^2 from filter norms and MLP path weights.

    The MLP path weight is w = w0 * (w1 @ w2 @ w3); both sides of a pair share
    it, so Z_j = (||S_j||^2 / p_j) |w_j| and likewise for the knockoff side.
    Swapping a pair negates exactly that coordinate of the statistic.
    """
    if partition.m != net.m:
        raise DimensionMismatch(
            f"network has {net.m} groups, partition has {partition.m}"
        )
    path = np.abs(net.w0 * (net.w1 @ net.w2 @ net.w3))
    sizes = np.array(partition.sizes, dtype=float)
    norm_x = np.array([float(f @ f) for f in net.filters_x])
    norm_k = np.array([float(f @ f) for f in net.filters_knock])
    z = (norm_x / sizes) * path
    z_knock = (norm_k / sizes) * path
    return GroupImportance(z=z, z_knock=z_knock, w_stat=z**2 - z_knock**2)
