"""Selection quality metrics and the hypergeometric enrichment probability."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, InvalidCounts


@dataclass
class ReplicationOutcome:
    fdp: float
    tpr: float
    n_selected: int
    replicate_id: int
    seed: int


def fdp_tpr(selected, true_groups) -> tuple[float, float]:
    """False discovery proportion and true positive rate for one selection.

    fdp = |selected \\ true| / max(|selected|, 1). With no true groups the TPR
    is vacuously 1, so global-null runs are judged on fdp alone.
    """
    selected = set(int(j) for j in selected)
    true_groups = set(int(j) for j in true_groups)
    n_false = len(selected - true_groups)
    fdp = n_false / max(len(selected), 1)
    if not true_groups:
        tpr = 1.0
    else:
        tpr = len(selected & true_groups) / len(true_groups)
    return fdp, tpr


def aggregate(outcomes) -> dict[str, float]:
    """Sample means and standard errors of fdp and tpr across replications."""
    outcomes = list(outcomes)
    if not outcomes:
        raise EmptyInput("no replication outcomes to aggregate")
    fdps = np.array([o.fdp for o in outcomes])
    tprs = np.array([o.tpr for o in outcomes])
    r = len(outcomes)

    def stderr(values: np.ndarray) -> float:
        if r < 2:
            return 0.0
        return float(values.std(ddof=1) / math.sqrt(r))

    return {
        "gfdr": float(fdps.mean()),
        "power": float(tprs.mean()),
        "gfdr_stderr": stderr(fdps),
        "power_stderr": stderr(tprs),
        "replications": float(r),
    }


def _log_binom(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def hypergeom_tail(
    total_confirmed: int, total_unconfirmed: int, draw: int, threshold: int
) -> float:
    """P(Q >= threshold) where Q counts confirmed items in a uniform draw.

    Q follows a hypergeometric distribution over a population of
    total_confirmed + total_unconfirmed items. Terms are accumulated in
    log space; absolute error stays well under 1e-9 at the population sizes
    this is meant for.
    """
    k, u, s, q = (int(total_confirmed), int(total_unconfirmed), int(draw), int(threshold))
    if min(k, u, s, q) < 0:
        raise InvalidCounts("counts must be non-negative")
    if s > k + u:
        raise InvalidCounts(f"cannot draw {s} from a population of {k + u}")
    if q > min(s, k):
        raise InvalidCounts(f"threshold {q} exceeds the largest possible count {min(s, k)}")
    if q == 0:
        return 1.0
    log_total = _log_binom(k + u, s)
    prob = 0.0
    for i in range(q, min(s, k) + 1):
        if s - i > u:
            continue
        prob += math.exp(_log_binom(k, i) + _log_binom(u, s - i) - log_total)
    return min(prob, 1.0)
