"""Synthetic data generators with group-structured covariance.

Features are drawn from N(0, Sigma) where Sigma has unit diagonal, correlation
rho within a group and gamma * rho between groups. Responses follow either a
linear model y = X beta + eps or a single-index model y = g(X beta) + eps with
the cubic-plus-quadratic link g(x) = (x/20)^3 + 4 (x/20)^2. Coefficients are
group sparse: k signal groups, every feature in a signal group gets a random
sign times the amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCovariance, DimensionMismatch, NotPositiveDefinite
from .knockoffs import GroupPartition
from .linalg import CovarianceMatrix, sample_mvn

LINEAR = "linear"
SINGLE_INDEX = "single_index"
MODELS = (LINEAR, SINGLE_INDEX)


@dataclass
class SimDesign:
    n: int
    p: int
    m: int
    group_size: int
    k: int
    amplitude: float = 1.5
    rho: float = 0.0
    gamma: float = 0.0
    model: str = LINEAR
    seed: int = 0

    def __post_init__(self) -> None:
        if self.p != self.m * self.group_size:
            raise ValueError(
                f"p={self.p} must equal m*group_size={self.m * self.group_size}"
            )
        if not (0 <= self.k <= self.m):
            raise ValueError(f"k={self.k} must lie in [0, m={self.m}]")
        if not (0.0 <= self.rho < 1.0):
            raise ValueError(f"rho={self.rho} must lie in [0, 1)")
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError(f"gamma={self.gamma} must lie in [0, 1]")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.n < 1:
            raise ValueError("n must be positive")

    def partition(self) -> GroupPartition:
        return GroupPartition.from_sizes([self.group_size] * self.m)


@dataclass
class SimDataset:
    x: np.ndarray
    y: np.ndarray
    beta: np.ndarray
    true_groups: frozenset[int]


def index_link(x):
    """The single-index link (x/20)^3 + 4 (x/20)^2."""
    u = np.asarray(x, dtype=float) / 20.0
    return u**3 + 4.0 * u**2


def make_covariance(design: SimDesign) -> CovarianceMatrix:
    """Unit-diagonal covariance: rho within groups, gamma*rho between."""
    between = design.gamma * design.rho
    sigma = np.full((design.p, design.p), between)
    for g in design.partition().groups:
        sigma[np.ix_(g, g)] = design.rho
    np.fill_diagonal(sigma, 1.0)
    try:
        return CovarianceMatrix(sigma)
    except NotPositiveDefinite as exc:
        raise DegenerateCovariance(
            f"covariance for rho={design.rho}, gamma={design.gamma} is not positive definite"
        ) from exc


def gen_coefficients(design: SimDesign, rng: np.random.Generator):
    """Signal groups drawn without replacement; signs independent per feature."""
    signal = rng.choice(design.m, size=design.k, replace=False)
    beta = np.zeros(design.p)
    partition = design.partition()
    for j in signal:
        g = partition.groups[int(j)]
        signs = rng.choice((-1.0, 1.0), size=g.size)
        beta[g] = signs * design.amplitude
    return beta, frozenset(int(j) for j in signal)


def gen_response(
    x: np.ndarray, beta: np.ndarray, model: str, rng: np.random.Generator
) -> np.ndarray:
    """Response with i.i.d. standard normal noise added to the signal."""
    x = np.asarray(x, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if x.ndim != 2 or x.shape[1] != beta.shape[0]:
        raise DimensionMismatch(f"x shape {x.shape} incompatible with beta {beta.shape}")
    index = x @ beta
    if model == LINEAR:
        signal = index
    elif model == SINGLE_INDEX:
        signal = index_link(index)
    else:
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")
    return signal + rng.standard_normal(x.shape[0])


def gen_dataset(design: SimDesign, sigma: CovarianceMatrix | None = None) -> SimDataset:
    """One full replication: features, coefficients, response.

    Features, coefficients and noise each use an independent stream spawned
    from the design seed, so the same X and beta can be combined with either
    response model without disturbing the streams.
    """
    if sigma is None:
        sigma = make_covariance(design)
    x_rng, coef_rng, noise_rng = _streams(design.seed, 3)
    x = sample_mvn(np.zeros(design.p), sigma, design.n, x_rng)
    beta, signal_groups = gen_coefficients(design, coef_rng)
    y = gen_response(x, beta, design.model, noise_rng)
    return SimDataset(x=x, y=y, beta=beta, true_groups=signal_groups)


def _streams(seed: int, count: int) -> list[np.random.Generator]:
    """Independent child generators derived from one seed."""
    seq = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in seq.spawn(count)]
