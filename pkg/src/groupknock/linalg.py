"""Dense symmetric linear algebra and multivariate normal sampling.

Everything here is deliberately self-contained: Cholesky factorization with an
explicit pivot threshold, a cyclic Jacobi eigensolver, and triangular solves.
Matrices at the sizes used by this package (a few thousand at most) do not
need anything fancier, and owning the numerics keeps the positive-definiteness
tolerances in one place.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonConvergence, NotPositiveDefinite

# Pivots at or below this value are treated as a failed factorization.
PD_PIVOT_TOL = 1e-12

# Eigenvalues at or below this value make an inverse square root meaningless.
EIGENVALUE_TOL = 1e-12

_JACOBI_MAX_SWEEPS = 60


def _as_square_array(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def symmetrize(a) -> np.ndarray:
    """Return 0.5 * (A + A^T); cheap guard against round-off asymmetry."""
    a = _as_square_array(a)
    return 0.5 * (a + a.T)


@dataclass
class CovarianceMatrix:
    """Symmetric positive-definite matrix with validation at construction.

    The input is checked for near-symmetry, then the lower triangle is
    mirrored so the stored matrix is exactly symmetric. Positive definiteness
    is established by running the Cholesky factorization once; the factor is
    cached for reuse by samplers and solvers.
    """

    entries: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        a = _as_square_array(self.entries, "covariance")
        scale = np.max(np.abs(a)) if a.size else 0.0
        if scale == 0.0:
            raise NotPositiveDefinite("covariance is identically zero")
        if np.max(np.abs(a - a.T)) > 1e-8 * scale:
            raise ValueError("covariance is not symmetric")
        lower = np.tril(a)
        a = lower + np.tril(lower, -1).T
        if np.any(np.diag(a) <= 0.0):
            raise NotPositiveDefinite("covariance has a non-positive diagonal entry")
        self.entries = a
        self._chol = cholesky_lower(a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def cholesky_lower(self) -> np.ndarray:
        """Lower-triangular L with L L^T equal to the stored matrix."""
        return self._chol


@dataclass(frozen=True)
class LowerTriangularFactor:
    """Lower-triangular Cholesky factor L of a positive-definite matrix."""

    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def cholesky_lower(a, pivot_tol: float = PD_PIVOT_TOL) -> np.ndarray:
    """Cholesky factorization of a symmetric array, lower triangle.

    Raises NotPositiveDefinite as soon as a pivot falls at or below
    ``pivot_tol``; callers that can tolerate near-singularity must regularize
    before calling.
    """
    a = _as_square_array(a)
    n = a.shape[0]
    lower = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if pivot <= pivot_tol or not np.isfinite(pivot):
            raise NotPositiveDefinite(
                f"pivot {pivot:.3e} at column {j} is at or below {pivot_tol:.1e}"
            )
        ljj = np.sqrt(pivot)
        lower[j, j] = ljj
        if j + 1 < n:
            lower[j + 1 :, j] = (a[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / ljj
    return lower


def cholesky(sigma) -> LowerTriangularFactor:
    """Typed wrapper over :func:`cholesky_lower`.

    Accepts a CovarianceMatrix (reuses its cached factor) or a raw symmetric
    array.
    """
    if isinstance(sigma, CovarianceMatrix):
        return LowerTriangularFactor(sigma.cholesky_lower)
    return LowerTriangularFactor(cholesky_lower(sigma))


def solve_lower(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Forward substitution: solve L y = b for lower-triangular L."""
    n = lower.shape[0]
    b = np.asarray(b, dtype=float)
    if b.shape[0] != n:
        raise DimensionMismatch(f"rhs has {b.shape[0]} rows, expected {n}")
    y = np.zeros_like(b)
    for i in range(n):
        y[i] = (b[i] - lower[i, :i] @ y[:i]) / lower[i, i]
    return y


def solve_upper(upper: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Back substitution: solve U x = b for upper-triangular U."""
    n = upper.shape[0]
    b = np.asarray(b, dtype=float)
    if b.shape[0] != n:
        raise DimensionMismatch(f"rhs has {b.shape[0]} rows, expected {n}")
    x = np.zeros_like(b)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - upper[i, i + 1 :] @ x[i + 1 :]) / upper[i, i]
    return x


def solve_spd(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve (L L^T) x = b given the Cholesky factor L."""
    return solve_upper(lower.T, solve_lower(lower, b))


def jacobi_eigh(a, max_sweeps: int = _JACOBI_MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Returns (eigenvalues, eigenvectors) with A = V diag(w) V^T, eigenvalues in
    ascending order. Rotations are applied until the off-diagonal mass is
    negligible relative to the Frobenius norm.

    Raises NonConvergence if the sweep budget is exhausted, which signals a
    pathological input rather than a tunable tolerance problem.
    """
    a = symmetrize(_as_square_array(a))
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v

    frob = np.sqrt(np.sum(a * a))
    if frob == 0.0:
        return np.zeros(n), v
    # Eigenvalue error is bounded by the off-diagonal Frobenius norm, so the
    # target sits far below any tolerance used by callers. The looser bound
    # accepts a sweep that has stalled at the round-off floor.
    target = (1e-13 * frob) ** 2
    floor = (1e-10 * frob) ** 2
    skip = 1e-18 * frob

    off_mask = ~np.eye(n, dtype=bool)
    prev_off2 = np.inf
    for _ in range(max_sweeps):
        off2 = float(np.sum(a[off_mask] ** 2))
        if off2 <= target or (off2 <= floor and off2 > 0.25 * prev_off2):
            w = a.diagonal().copy()
            order = np.argsort(w)
            return w[order], v[:, order]
        prev_off2 = off2
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                # Rotation angle zeroing a[p, q].
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c

                app, aqq = a[p, p], a[q, q]
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq

    raise NonConvergence(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")


def min_eigenvalue(a) -> float:
    """Smallest eigenvalue of a symmetric matrix (or CovarianceMatrix)."""
    if isinstance(a, CovarianceMatrix):
        a = a.entries
    w, _ = jacobi_eigh(a)
    return float(w[0])


def inverse_sqrt(b) -> np.ndarray:
    """Symmetric M with M B M = I for symmetric positive-definite B.

    Computed from the full eigendecomposition; intended for small blocks
    (group sizes), where the cubic cost is irrelevant.
    """
    if isinstance(b, CovarianceMatrix):
        b = b.entries
    w, v = jacobi_eigh(b)
    if np.any(w <= EIGENVALUE_TOL):
        raise NotPositiveDefinite(
            f"eigenvalue {w[0]:.3e} at or below {EIGENVALUE_TOL:.1e}"
        )
    m = (v / np.sqrt(w)) @ v.T
    return symmetrize(m)


def sample_mvn(mean, sigma: CovarianceMatrix, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n i.i.d. rows from N(mean, sigma); deterministic given rng state."""
    mean = np.asarray(mean, dtype=float)
    if mean.ndim != 1 or mean.shape[0] != sigma.dim:
        raise DimensionMismatch(
            f"mean has shape {mean.shape}, covariance dimension is {sigma.dim}"
        )
    z = rng.standard_normal((n, sigma.dim))
    return mean + z @ sigma.cholesky_lower.T
