"""Experiment orchestration, the real-data pipeline, and CSV I/O.

Per-replication randomness is derived from ``seed_base + replicate_id``; each
replication spawns independent sub-streams for features, coefficients, noise,
knockoff sampling and network initialization, so results do not depend on
worker scheduling. Floats are written with ``repr``, which round-trips exactly
and keeps output byte-stable across runs.
"""

from __future__ import annotations

import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .config import METHOD_GKNOCK, METHOD_GROUP_LCD, ExperimentConfig
from .errors import (
    DegenerateCovariance,
    DegenerateInput,
    DimensionMismatch,
    NonConvergence,
    NotPositiveDefinite,
    NumericalDivergence,
    ParseError,
)
from .filtering import SelectionResult, knockoff_threshold
from .knockoffs import (
    AugmentedDesign,
    GroupPartition,
    KnockoffSpec,
    estimate_covariance,
    group_block_s,
    sample_group_knockoffs,
    standardize_columns,
)
from .lasso import group_lcd_statistic
from .metrics import ReplicationOutcome, aggregate, fdp_tpr
from .network import TrainConfig, group_importance, init_network, train
from .simulate import gen_dataset, make_covariance

NUMERICAL_FAILURES = (
    NonConvergence,
    NumericalDivergence,
    NotPositiveDefinite,
    DegenerateCovariance,
)

RESULT_COLUMNS = ("replicate", "seed", "method", "n_selected", "fdp", "tpr", "tau")


@dataclass
class ReplicationRow:
    replicate_id: int
    seed: int
    method: str
    outcome: ReplicationOutcome | None
    tau: float | None
    error: str | None = None


def _derived_streams(rep_seed: int):
    """Sub-streams for one replication; the first three mirror gen_dataset."""
    children = np.random.SeedSequence(rep_seed).spawn(5)
    knock_rng = np.random.default_rng(children[3])
    init_seed, shuffle_seed = (int(s) for s in children[4].generate_state(2))
    return knock_rng, init_seed, shuffle_seed


def _standardized_augmented(aug: AugmentedDesign) -> AugmentedDesign:
    amat = standardize_columns(aug.matrix())
    p = aug.p
    return AugmentedDesign(x=amat[:, :p], x_knock=amat[:, p:], partition=aug.partition)


def compute_statistic(
    aug: AugmentedDesign,
    y: np.ndarray,
    method: str,
    train_cfg: TrainConfig,
    init_seed: int,
    lasso_penalty: float | None = None,
) -> np.ndarray:
    """Group statistic vector for a (standardized) augmented design.

    The response is standardized first: rescaling y rescales every W_j by the
    same positive factor, so the selection is unchanged, and unit scale keeps
    the training defaults meaningful across signal strengths.
    """
    y = np.asarray(y, dtype=float)
    scale = y.std()
    if scale <= 1e-12:
        raise DegenerateInput("response is constant")
    y_std = (y - y.mean()) / scale
    if method == METHOD_GROUP_LCD:
        return group_lcd_statistic(aug, y_std, lasso_penalty)
    if method == METHOD_GKNOCK:
        net = init_network(aug.partition, init_seed)
        trained = train(net, aug, y_std, train_cfg)
        return group_importance(trained, aug.partition).w_stat
    raise ValueError(f"unknown method {method!r}")


def run_replication(
    cfg: ExperimentConfig, sigma, spec: KnockoffSpec, rep_id: int
) -> ReplicationRow:
    """One replication end to end; numerical failures become error rows."""
    rep_seed = cfg.knockoff_seed_base + rep_id
    try:
        design = replace(cfg.sim, seed=rep_seed)
        data = gen_dataset(design, sigma=sigma)
        knock_rng, init_seed, shuffle_seed = _derived_streams(rep_seed)
        aug = _standardized_augmented(sample_group_knockoffs(data.x, spec, knock_rng))
        train_cfg = replace(cfg.train, seed=shuffle_seed)
        w = compute_statistic(
            aug, data.y, cfg.method, train_cfg, init_seed, cfg.lasso_penalty
        )
        sel = knockoff_threshold(w, cfg.q)
        fdp, tpr = fdp_tpr(sel.selected, data.true_groups)
        outcome = ReplicationOutcome(
            fdp=fdp, tpr=tpr, n_selected=sel.n_selected, replicate_id=rep_id, seed=rep_seed
        )
        return ReplicationRow(rep_id, rep_seed, cfg.method, outcome, sel.tau)
    except NUMERICAL_FAILURES as exc:
        return ReplicationRow(
            rep_id, rep_seed, cfg.method, None, None, error=type(exc).__name__
        )


def _pool_task(args):
    return run_replication(*args)


def run_experiment(cfg: ExperimentConfig):
    """All replications of one experiment; returns (rows, summary).

    The covariance and knockoff spec depend only on the design, so they are
    built once and shared by every replication. Failed replications are kept
    as error rows, excluded from the aggregate, and counted in the summary.
    """
    sigma = make_covariance(cfg.sim)
    spec = group_block_s(sigma, cfg.sim.partition())

    tasks = [(cfg, sigma, spec, rep_id) for rep_id in range(cfg.replications)]
    if cfg.parallelism > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
            rows = list(pool.map(_pool_task, tasks))
    else:
        rows = [run_replication(*t) for t in tasks]
    rows.sort(key=lambda row: row.replicate_id)

    outcomes = [row.outcome for row in rows if row.outcome is not None]
    failures = [row for row in rows if row.error is not None]
    summary = {"method": cfg.method, "q": cfg.q, "failed": len(failures)}
    if outcomes:
        summary.update(aggregate(outcomes))
    # the configured count, not the success count aggregate() reports
    summary["replications"] = cfg.replications
    if cfg.output_path:
        write_results_csv(cfg.output_path, rows, summary)
    return rows, summary


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results_csv(path: str, rows, summary) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            if row.outcome is None:
                writer.writerow(
                    [row.replicate_id, row.seed, row.method, f"error:{row.error}", "", "", ""]
                )
            else:
                writer.writerow(
                    [
                        row.replicate_id,
                        row.seed,
                        row.method,
                        row.outcome.n_selected,
                        _fmt(row.outcome.fdp),
                        _fmt(row.outcome.tpr),
                        _fmt(row.tau),
                    ]
                )
        writer.writerow(
            [
                "aggregate",
                "",
                summary["method"],
                "",
                _fmt(summary.get("gfdr")),
                _fmt(summary.get("power")),
                "",
            ]
        )


# ---------------------------------------------------------------------------
# CSV input for the real-data path
# ---------------------------------------------------------------------------


def _parse_float(raw: str, path: str, lineno: int, column: str) -> float:
    text = raw.strip()
    if not text:
        raise ParseError(f"{path}:{lineno}: missing value in column {column!r}")
    try:
        return float(text)
    except ValueError as exc:
        raise ParseError(
            f"{path}:{lineno}: cannot parse {raw!r} in column {column!r}"
        ) from exc


def _looks_numeric(cells) -> bool:
    try:
        for cell in cells:
            float(cell)
    except ValueError:
        return False
    return True


def read_matrix_csv(path: str) -> tuple[list[str], np.ndarray]:
    """Feature matrix with a mandatory header row of feature names."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}:1: file is empty") from None
        names = [h.strip() for h in header]
        if not names or any(not n for n in names):
            raise ParseError(f"{path}:1: header row has empty field names")
        if _looks_numeric(names):
            raise ParseError(f"{path}:1: first row looks numeric; a header row is required")
        if len(set(names)) != len(names):
            raise ParseError(f"{path}:1: duplicate feature names in header")
        data = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(names):
                raise ParseError(
                    f"{path}:{lineno}: expected {len(names)} fields, got {len(row)}"
                )
            data.append(
                [_parse_float(cell, path, lineno, names[i]) for i, cell in enumerate(row)]
            )
    if not data:
        raise ParseError(f"{path}: no data rows")
    return names, np.array(data, dtype=float)


def read_response_csv(path: str) -> np.ndarray:
    """Single-column response file with a header."""
    names, data = read_matrix_csv(path)
    if len(names) != 1:
        raise ParseError(f"{path}: expected a single response column, got {len(names)}")
    return data[:, 0]


def read_group_map(path: str, feature_names) -> tuple[GroupPartition, list[str]]:
    """Two-column (feature, group id) file covering every feature exactly once.

    Returns the partition over the feature order of the design matrix and the
    group labels in first-appearance order (which fixes group indices).
    """
    mapping: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}:1: file is empty") from None
        if len(header) != 2:
            raise ParseError(f"{path}:1: expected two columns (feature, group)")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected two fields, got {len(row)}")
            feature, group = row[0].strip(), row[1].strip()
            if not feature or not group:
                raise ParseError(f"{path}:{lineno}: empty feature or group field")
            if feature in mapping:
                raise ParseError(f"{path}:{lineno}: feature {feature!r} listed twice")
            mapping[feature] = group
    missing = [n for n in feature_names if n not in mapping]
    if missing:
        raise ParseError(f"{path}: no group for feature {missing[0]!r}")
    extra = [n for n in mapping if n not in set(feature_names)]
    if extra:
        raise ParseError(f"{path}: group map names unknown feature {extra[0]!r}")
    labels = [mapping[n] for n in feature_names]
    partition = GroupPartition.from_labels(labels)
    group_labels = list(dict.fromkeys(labels))
    return partition, group_labels


def write_matrix_csv(path: str, names, matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(names))
        for row in matrix:
            writer.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# Real-data selection pipeline
# ---------------------------------------------------------------------------


def build_knockoffs_from_data(
    x: np.ndarray, partition: GroupPartition, ridge: float, rng: np.random.Generator
) -> AugmentedDesign:
    """Standardize, estimate the covariance, and sample knockoff columns."""
    sigma = estimate_covariance(x, ridge)
    spec = group_block_s(sigma, partition)
    return sample_group_knockoffs(standardize_columns(x), spec, rng)


def select_from_arrays(
    x: np.ndarray,
    y: np.ndarray,
    partition: GroupPartition,
    q: float,
    method: str,
    seed: int,
    ridge: float,
    train_cfg: TrainConfig,
    lasso_penalty: float | None = None,
) -> SelectionResult:
    """In-memory selection pipeline shared by the CLI and tests."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] != np.asarray(x).shape[0]:
        raise DimensionMismatch(
            f"x has {np.asarray(x).shape[0]} rows but y has {y.shape[0]}"
        )
    children = np.random.SeedSequence(seed).spawn(2)
    knock_rng = np.random.default_rng(children[0])
    init_seed, shuffle_seed = (int(s) for s in children[1].generate_state(2))
    aug = _standardized_augmented(
        build_knockoffs_from_data(x, partition, ridge, knock_rng)
    )
    train_cfg = replace(train_cfg, seed=shuffle_seed)
    w = compute_statistic(aug, y, method, train_cfg, init_seed, lasso_penalty)
    return knockoff_threshold(w, q)


def run_selection(
    x_path: str,
    y_path: str,
    groups_path: str,
    q: float,
    method: str = METHOD_GKNOCK,
    seed: int = 1,
    ridge: float = 1e-3,
    train_cfg: TrainConfig | None = None,
    lasso_penalty: float | None = None,
    output_path: str | None = None,
):
    """File-based selection: parse, validate, select, report.

    Returns (SelectionResult, group labels). The report file lists every
    group with its statistic and selection flag.
    """
    names, x = read_matrix_csv(x_path)
    y = read_response_csv(y_path)
    if y.shape[0] != x.shape[0]:
        raise ParseError(
            f"{y_path}: response has {y.shape[0]} rows, design has {x.shape[0]}"
        )
    partition, group_labels = read_group_map(groups_path, names)
    if any(x[:, j].std() <= 1e-12 for j in range(x.shape[1])):
        bad = next(j for j in range(x.shape[1]) if x[:, j].std() <= 1e-12)
        raise DegenerateInput(f"column {names[bad]!r} is constant")
    sel = select_from_arrays(
        x,
        y,
        partition,
        q,
        method,
        seed,
        ridge,
        train_cfg or TrainConfig(),
        lasso_penalty,
    )
    if output_path:
        write_selection_csv(output_path, sel, group_labels)
    return sel, group_labels


def write_selection_csv(path: str, sel: SelectionResult, group_labels) -> None:
    selected = set(sel.selected)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["group", "w_stat", "selected"])
        for j, label in enumerate(group_labels):
            writer.writerow([label, repr(float(sel.w[j])), int(j in selected)])


def emit_knockoffs(
    x_path: str,
    groups_path: str,
    seed: int,
    ridge: float,
    output_path: str,
) -> None:
    """Write the sampled knockoff matrix (of standardized features) to CSV."""
    names, x = read_matrix_csv(x_path)
    partition, _ = read_group_map(groups_path, names)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    aug = build_knockoffs_from_data(x, partition, ridge, rng)
    write_matrix_csv(output_path, [f"{n}_knockoff" for n in names], aug.x_knock)


def main_summary_lines(summary) -> list[str]:
    lines = [
        f"method={summary['method']} q={summary['q']} replications={summary['replications']}"
    ]
    if "gfdr" in summary:
        lines.append(
            "gFDR={:.4f} (se {:.4f})  power={:.4f} (se {:.4f})".format(
                summary["gfdr"],
                summary["gfdr_stderr"],
                summary["power"],
                summary["power_stderr"],
            )
        )
    if summary.get("failed"):
        lines.append(f"failed replications: {summary['failed']}")
    return lines


def log(message: str) -> None:
    print(message, file=sys.stderr)
