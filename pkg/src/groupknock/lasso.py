"""Cyclic coordinate-descent Lasso and the coefficient-difference statistic.

The solver minimizes

    0.5 * ||y - A b||^2 + penalty * ||b||_1

by cyclic coordinate descent with residual updates. A fit is flagged converged
only when both the per-sweep coefficient change is below tolerance and the KKT
conditions hold, so downstream statistics can trust the coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonConvergence
from .knockoffs import AugmentedDesign
from .linalg import cholesky_lower, solve_spd

COEF_TOL = 1e-7
KKT_TOL = 1e-6
MAX_SWEEPS = 10_000

# Ridge strength (relative to n) for the noise-scale pre-fit behind the
# default penalty level.
_PREFIT_RIDGE = 0.1


@dataclass
class LassoFit:
    coefficients: np.ndarray
    penalty: float
    iterations: int
    converged: bool
    objective_trace: list[float] = field(repr=False, default_factory=list)


def _soft_threshold(value: float, threshold: float) -> float:
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def kkt_violation(a: np.ndarray, y: np.ndarray, b: np.ndarray, penalty: float) -> float:
    """Worst-case violation of the Lasso stationarity conditions.

    Zero coefficients require |A_k^T r| <= penalty; active ones require
    A_k^T r = penalty * sign(b_k).
    """
    grad = a.T @ (y - a @ b)
    active = b != 0.0
    viol = 0.0
    if np.any(~active):
        viol = max(viol, float(np.max(np.abs(grad[~active])) - penalty))
    if np.any(active):
        viol = max(viol, float(np.max(np.abs(grad[active] - penalty * np.sign(b[active])))))
    return viol


def fit_lasso(
    a: np.ndarray,
    y: np.ndarray,
    penalty: float,
    max_sweeps: int = MAX_SWEEPS,
    coef_tol: float = COEF_TOL,
    kkt_tol: float = KKT_TOL,
) -> LassoFit:
    """Cyclic coordinate descent from a zero start.

    Never raises on non-convergence: the fit is returned with
    ``converged=False`` once the sweep budget is exhausted, and callers decide
    whether that is fatal.
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    if a.ndim != 2 or y.ndim != 1 or a.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"design {a.shape} incompatible with response {y.shape}")
    if penalty < 0:
        raise ValueError("penalty must be non-negative")

    n, d = a.shape
    col_norm2 = np.einsum("ij,ij->j", a, a)
    b = np.zeros(d)
    r = y.copy()
    trace: list[float] = []
    converged = False
    sweeps = 0
    for _ in range(max_sweeps):
        sweeps += 1
        max_change = 0.0
        for k in range(d):
            nk = col_norm2[k]
            if nk == 0.0:
                continue
            bk = b[k]
            rho = a[:, k] @ r + nk * bk
            bk_new = _soft_threshold(rho, penalty) / nk
            if bk_new != bk:
                r += a[:, k] * (bk - bk_new)
                b[k] = bk_new
                change = abs(bk_new - bk)
                if change > max_change:
                    max_change = change
        trace.append(0.5 * float(r @ r) + penalty * float(np.sum(np.abs(b))))
        if max_change < coef_tol and kkt_violation(a, y, b, penalty) <= kkt_tol:
            converged = True
            break
    return LassoFit(
        coefficients=b,
        penalty=penalty,
        iterations=sweeps,
        converged=converged,
        objective_trace=trace,
    )


def default_penalty(a: np.ndarray, y: np.ndarray) -> float:
    """Universal-threshold penalty 0.5 * sigma_hat * sqrt(2 log d / n), in the
    scale of the unnormalized least-squares objective (hence the factor n).

    The noise scale sigma_hat comes from the residuals of a ridge pre-fit.
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = a.shape
    gram = a.T @ a + (_PREFIT_RIDGE * n) * np.eye(d)
    coef = solve_spd(cholesky_lower(gram), a.T @ y)
    resid = y - a @ coef
    sigma_hat = float(np.sqrt(np.mean(resid**2)))
    return 0.5 * sigma_hat * math.sqrt(2.0 * math.log(d) / n) * n


def _paired_coefficients(
    design: AugmentedDesign, y: np.ndarray, penalty: float | None
) -> tuple[np.ndarray, np.ndarray]:
    a = design.matrix()
    if penalty is None:
        penalty = default_penalty(a, y)
    fit = fit_lasso(a, y, penalty)
    if not fit.converged:
        raise NonConvergence(
            f"lasso did not converge within {fit.iterations} sweeps (penalty={penalty:.4g})"
        )
    p = design.p
    b_orig = fit.coefficients[:p].copy()
    b_knock = fit.coefficients[p:].copy()
    # An exactly duplicated pair makes the minimizer non-unique: cyclic
    # descent hands the whole weight to whichever column it visits first.
    # The pooled value is still well-defined, and the difference statistic
    # must vanish for identical columns, so split the pool evenly.
    duplicated = np.all(design.x == design.x_knock, axis=0)
    if np.any(duplicated):
        pooled = 0.5 * (b_orig[duplicated] + b_knock[duplicated])
        b_orig[duplicated] = pooled
        b_knock[duplicated] = pooled
    return b_orig, b_knock


def lcd_statistic(
    design: AugmentedDesign, y: np.ndarray, penalty: float | None = None
) -> np.ndarray:
    """Per-feature statistic |b_j| - |b_{j+p}| from a fit on [X, X_knock].

    Columns are expected to be standardized by the caller. Raises
    NonConvergence when the underlying fit did not converge.
    """
    b_orig, b_knock = _paired_coefficients(design, np.asarray(y, dtype=float), penalty)
    return np.abs(b_orig) - np.abs(b_knock)


def group_lcd_statistic(
    design: AugmentedDesign, y: np.ndarray, penalty: float | None = None
) -> np.ndarray:
    """Group-aggregated coefficient difference: within-group sums of |b|."""
    b_orig, b_knock = _paired_coefficients(design, np.asarray(y, dtype=float), penalty)
    groups = design.partition.groups
    w = np.empty(len(groups))
    for j, g in enumerate(groups):
        w[j] = np.sum(np.abs(b_orig[g])) - np.sum(np.abs(b_knock[g]))
    return w
