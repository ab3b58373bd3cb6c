"""Knockoff+ thresholding and final selection.

The data-dependent threshold is

    tau = min{ t > 0 : (1 + #{j : W_j <= -t}) / #{j : W_j >= t} <= q }

The ratio only changes at the nonzero |W_j| values, so scanning that grid is
exact. The "+1" in the numerator is what buys finite-sample FDR control and is
never dropped. Zero statistics never count on either side (t is strictly
positive).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidLevel


@dataclass
class SelectionResult:
    w: np.ndarray
    tau: float  # math.inf when no threshold satisfies the ratio condition
    selected: tuple[int, ...]
    q: float

    @property
    def n_selected(self) -> int:
        return len(self.selected)


def knockoff_threshold(w, q: float) -> SelectionResult:
    """Smallest threshold passing the knockoff+ ratio test, and the selection.

    Selected indices are {j : W_j >= tau}, empty (tau = inf) when no candidate
    threshold works.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 1:
        raise ValueError("statistic must be a vector")
    if not np.all(np.isfinite(w)):
        raise ValueError("statistic contains non-finite values")
    if not (0.0 <= q <= 1.0):
        raise InvalidLevel(f"q must lie in [0, 1], got {q}")

    candidates = np.unique(np.abs(w[w != 0.0]))
    tau = math.inf
    for t in candidates:  # ascending; first hit is the minimum
        n_selected = int(np.sum(w >= t))
        if n_selected == 0:
            continue
        n_negative = int(np.sum(w <= -t))
        if (1.0 + n_negative) / n_selected <= q:
            tau = float(t)
            break
    if math.isinf(tau):
        selected: tuple[int, ...] = ()
    else:
        selected = tuple(int(j) for j in np.flatnonzero(w >= tau))
    return SelectionResult(w=w, tau=tau, selected=selected, q=q)


def select_groups(stat, q: float) -> SelectionResult:
    """Apply the knockoff+ filter to a statistic vector or GroupImportance."""
    w = getattr(stat, "w_stat", stat)
    return knockoff_threshold(w, q)
