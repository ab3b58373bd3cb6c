"""Group knockoff construction for Gaussian features.

Builds the block-diagonal decoupling matrix S (equicorrelated per-feature and
group-block variants), then samples knockoff copies from the conditional
Gaussian so that the joint vector (X, X_knock) has covariance

    [[Sigma, Sigma - S], [Sigma - S, Sigma]].

Swapping any set of groups between the two halves leaves that joint covariance
unchanged, which is what makes the knockoffs usable as negative controls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateCovariance,
    DegenerateInput,
    DimensionMismatch,
    NotPositiveDefinite,
)
from .linalg import (
    CovarianceMatrix,
    cholesky_lower,
    inverse_sqrt,
    min_eigenvalue,
    solve_spd,
    symmetrize,
)

# lambda_min below this is too close to singular for a useful construction.
DEGENERATE_EIG_TOL = 1e-10

DEFAULT_SHRINK_MARGIN = 1e-3
DEFAULT_RIDGE = 1e-3

_MAX_SHRINK_ROUNDS = 5


@dataclass(frozen=True)
class GroupPartition:
    """Partition of feature indices 0..p-1 into disjoint covering groups."""

    p: int
    groups: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if self.p <= 0:
            raise ValueError("p must be positive")
        groups = tuple(np.asarray(g, dtype=int) for g in self.groups)
        if not groups:
            raise ValueError("partition needs at least one group")
        seen = np.zeros(self.p, dtype=bool)
        for j, g in enumerate(groups):
            if g.size == 0:
                raise ValueError(f"group {j} is empty")
            if np.any(g < 0) or np.any(g >= self.p):
                raise ValueError(f"group {j} has out-of-range indices")
            if np.any(seen[g]):
                raise ValueError(f"group {j} overlaps an earlier group")
            seen[g] = True
        if not np.all(seen):
            missing = int(np.flatnonzero(~seen)[0])
            raise ValueError(f"feature {missing} is not covered by any group")
        object.__setattr__(self, "groups", groups)

    @property
    def m(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(int(g.size) for g in self.groups)

    @classmethod
    def from_sizes(cls, sizes) -> "GroupPartition":
        """Contiguous groups of the given sizes, in order."""
        sizes = [int(s) for s in sizes]
        bounds = np.cumsum([0] + sizes)
        groups = tuple(np.arange(bounds[j], bounds[j + 1]) for j in range(len(sizes)))
        return cls(p=int(bounds[-1]), groups=groups)

    @classmethod
    def from_labels(cls, labels) -> "GroupPartition":
        """Groups from a per-feature label sequence, ordered by first appearance."""
        labels = list(labels)
        order: dict = {}
        for i, lab in enumerate(labels):
            order.setdefault(lab, []).append(i)
        groups = tuple(np.array(idx, dtype=int) for idx in order.values())
        return cls(p=len(labels), groups=groups)


@dataclass
class KnockoffSpec:
    """Covariance, decoupling matrix S and the scale eta they were built with.

    Invariants: S is zero outside the group diagonal blocks, S is positive
    definite, and 2*Sigma - S is positive definite (checked by factorization
    wherever a spec is produced).
    """

    sigma: CovarianceMatrix
    s_matrix: np.ndarray
    partition: GroupPartition
    eta: float

    @property
    def dim(self) -> int:
        return self.sigma.dim


@dataclass
class AugmentedDesign:
    """Original features side by side with their knockoff copies."""

    x: np.ndarray
    x_knock: np.ndarray
    partition: GroupPartition

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float)
        self.x_knock = np.asarray(self.x_knock, dtype=float)
        if self.x.shape != self.x_knock.shape:
            raise DimensionMismatch(
                f"x has shape {self.x.shape}, x_knock has shape {self.x_knock.shape}"
            )
        if self.x.ndim != 2 or self.x.shape[1] != self.partition.p:
            raise DimensionMismatch(
                f"design has {self.x.shape[1]} columns, partition expects {self.partition.p}"
            )

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def matrix(self) -> np.ndarray:
        """The n x 2p matrix [X, X_knock]."""
        return np.hstack([self.x, self.x_knock])


def equicorrelated_s(sigma: CovarianceMatrix) -> np.ndarray:
    """Per-feature decoupling vector min(2*lambda_min(Sigma), 1) * ones.

    Requires unit-diagonal (normalized) features; raises DegenerateCovariance
    when Sigma is too close to singular for the knockoffs to differ from the
    originals.
    """
    if np.max(np.abs(np.diag(sigma.entries) - 1.0)) > 1e-8:
        raise ValueError("equicorrelated construction expects unit-diagonal covariance")
    lam = min_eigenvalue(sigma)
    if lam <= DEGENERATE_EIG_TOL:
        raise DegenerateCovariance(
            f"lambda_min={lam:.3e} too small; add ridge regularization"
        )
    return np.full(sigma.dim, min(2.0 * lam, 1.0))


def _blocks_from_eta(sigma: CovarianceMatrix, partition: GroupPartition, eta: float) -> np.ndarray:
    s = np.zeros((sigma.dim, sigma.dim))
    for g in partition.groups:
        s[np.ix_(g, g)] = eta * sigma.entries[np.ix_(g, g)]
    return s


def group_block_s(sigma: CovarianceMatrix, partition: GroupPartition) -> KnockoffSpec:
    """Group-block-diagonal S with blocks eta * Sigma_{G_j,G_j}.

    eta = min(2 * lambda_min(D Sigma D), 1) where D is the block-diagonal
    matrix of inverse square roots of the within-group covariance blocks.
    The returned spec always satisfies the strict 2*Sigma - S > 0 requirement;
    if eta lands exactly on the boundary it is nudged down by the default
    shrink margin.
    """
    if partition.p != sigma.dim:
        raise DimensionMismatch(
            f"partition covers {partition.p} features, covariance has {sigma.dim}"
        )
    d = np.zeros((sigma.dim, sigma.dim))
    for g in partition.groups:
        d[np.ix_(g, g)] = inverse_sqrt(sigma.entries[np.ix_(g, g)])
    whitened = symmetrize(d @ sigma.entries @ d)
    lam = min_eigenvalue(whitened)
    if lam <= DEGENERATE_EIG_TOL:
        raise DegenerateCovariance(
            f"lambda_min(D Sigma D)={lam:.3e} too small; add ridge regularization"
        )
    eta = min(2.0 * lam, 1.0)
    spec = KnockoffSpec(
        sigma=sigma,
        s_matrix=_blocks_from_eta(sigma, partition, eta),
        partition=partition,
        eta=eta,
    )
    return strict_pd_shrink(spec)


def _is_strictly_decoupled(spec: KnockoffSpec) -> bool:
    try:
        cholesky_lower(2.0 * spec.sigma.entries - spec.s_matrix)
    except NotPositiveDefinite:
        return False
    return True


def strict_pd_shrink(spec: KnockoffSpec, margin: float = DEFAULT_SHRINK_MARGIN) -> KnockoffSpec:
    """Guard against eta sitting exactly on the 2*Sigma - S boundary.

    Returns the spec unchanged when 2*Sigma - S already factors; otherwise
    scales eta by (1 - margin) and recomputes the blocks, up to five rounds.
    """
    if _is_strictly_decoupled(spec):
        return spec
    eta = spec.eta
    for _ in range(_MAX_SHRINK_ROUNDS):
        eta *= 1.0 - margin
        candidate = KnockoffSpec(
            sigma=spec.sigma,
            s_matrix=_blocks_from_eta(spec.sigma, spec.partition, eta),
            partition=spec.partition,
            eta=eta,
        )
        if _is_strictly_decoupled(candidate):
            return candidate
    raise DegenerateCovariance(
        f"2*Sigma - S not positive definite after {_MAX_SHRINK_ROUNDS} shrink rounds"
    )


def conditional_mean_cov(spec: KnockoffSpec) -> tuple[np.ndarray, np.ndarray]:
    """Matrices (Sigma^{-1} S, 2S - S Sigma^{-1} S) defining the sampler.

    The first maps a row x to its conditional-mean shift x - x @ (Sigma^{-1} S);
    the second is the shared conditional covariance, factored once per spec.
    """
    z = solve_spd(spec.sigma.cholesky_lower, spec.s_matrix)
    cond_cov = symmetrize(2.0 * spec.s_matrix - spec.s_matrix @ z)
    return z, cond_cov


def sample_group_knockoffs(
    x: np.ndarray, spec: KnockoffSpec, rng: np.random.Generator
) -> AugmentedDesign:
    """Sample knockoff rows from N(x - S Sigma^{-1} x, 2S - S Sigma^{-1} S).

    The conditional covariance factor is computed once and reused for all n
    rows. Deterministic given the generator state.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != spec.dim:
        raise DimensionMismatch(
            f"x has shape {x.shape}, spec dimension is {spec.dim}"
        )
    z, cond_cov = conditional_mean_cov(spec)
    factor = cholesky_lower(cond_cov)
    mean = x - x @ z
    noise = rng.standard_normal(x.shape)
    return AugmentedDesign(x=x, x_knock=mean + noise @ factor.T, partition=spec.partition)


def joint_covariance(spec: KnockoffSpec) -> np.ndarray:
    """The 2p x 2p covariance of (X, X_knock) implied by the spec."""
    top = np.hstack([spec.sigma.entries, spec.sigma.entries - spec.s_matrix])
    bottom = np.hstack([spec.sigma.entries - spec.s_matrix, spec.sigma.entries])
    return np.vstack([top, bottom])


def estimate_covariance(x: np.ndarray, ridge: float = DEFAULT_RIDGE) -> CovarianceMatrix:
    """Sample covariance of column-standardized data plus a ridge.

    With ridge > 0 the result is positive definite regardless of rank.
    Raises DegenerateInput when a column is (numerically) constant.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DegenerateInput("need an n x p matrix with n >= 2")
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    std = x.std(axis=0)
    if np.any(std <= 1e-12):
        col = int(np.flatnonzero(std <= 1e-12)[0])
        raise DegenerateInput(f"column {col} has zero variance")
    xs = (x - x.mean(axis=0)) / std
    cov = (xs.T @ xs) / x.shape[0] + ridge * np.eye(x.shape[1])
    return CovarianceMatrix(symmetrize(cov))


def standardize_columns(x: np.ndarray) -> np.ndarray:
    """Columns rescaled to mean 0 and unit variance; errors on constant columns."""
    x = np.asarray(x, dtype=float)
    std = x.std(axis=0)
    if np.any(std <= 1e-12):
        col = int(np.flatnonzero(std <= 1e-12)[0])
        raise DegenerateInput(f"column {col} has zero variance")
    return (x - x.mean(axis=0)) / std
