"""Experiment configuration: defaults, flat key=value files, CLI overrides.

Config files are plain text, one ``key = value`` per line, ``#`` starts a
comment. Unknown keys are rejected so typos fail loudly. Precedence is
CLI flag > file value > built-in default.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ParseError
from .network import TrainConfig
from .simulate import MODELS, SimDesign

METHOD_GKNOCK = "gknock"
METHOD_GROUP_LCD = "group_lcd"
METHODS = (METHOD_GKNOCK, METHOD_GROUP_LCD)

# Desk-scale default design: proportional shrink of the full-scale setting
# (p=1000, 100 groups, 20 signal groups, n=1000) that a laptop can run.
_DEFAULTS: dict[str, str] = {
    "n": "600",
    "groups": "20",
    "group_size": "10",
    "k": "4",
    "amplitude": "1.5",
    "rho": "0.0",
    "gamma": "0.0",
    "model": "linear",
    "method": METHOD_GKNOCK,
    "q": "0.2",
    "replications": "30",
    "seed": "1",
    "workers": "1",
    "out": "",
    "learning_rate": "0.001",
    "l1_strength": "0.001",
    "epochs": "200",
    "batch_size": "64",
    "ridge": "0.001",
    "lasso_lambda": "",
}

# "p" is accepted as an optional cross-check against groups * group_size.
_KNOWN_KEYS = frozenset(_DEFAULTS) | {"p"}


@dataclass
class ExperimentConfig:
    sim: SimDesign
    method: str = METHOD_GKNOCK
    q: float = 0.2
    replications: int = 30
    knockoff_seed_base: int = 1
    train: TrainConfig = field(default_factory=TrainConfig)
    parallelism: int = 1
    output_path: str | None = None
    ridge: float = 1e-3
    lasso_penalty: float | None = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not (0.0 < self.q < 1.0):
            raise ValueError(f"q must lie in (0, 1), got {self.q}")
        if self.parallelism < 1:
            raise ValueError("workers must be at least 1")


def parse_config_file(path: str) -> dict[str, str]:
    """Read a flat key=value file into a string dict."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in _KNOWN_KEYS:
                raise ParseError(f"{path}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ParseError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = value
    return values


def _coerce(values: dict[str, str], key: str, kind, path: str = "<config>"):
    raw = values[key]
    try:
        return kind(raw)
    except ValueError as exc:
        raise ParseError(f"{path}: key {key!r}: cannot parse {raw!r}") from exc


def build_experiment_config(
    file_values: dict[str, str] | None = None,
    overrides: dict[str, str] | None = None,
) -> ExperimentConfig:
    """Merge defaults, file values and CLI overrides into a validated config."""
    values = dict(_DEFAULTS)
    for source in (file_values or {}), (overrides or {}):
        for key, val in source.items():
            if key not in _KNOWN_KEYS:
                raise ParseError(f"unknown config key {key!r}")
            values[key] = str(val)

    m = _coerce(values, "groups", int)
    group_size = _coerce(values, "group_size", int)
    p = m * group_size
    if values.get("p", "").strip():
        stated = _coerce(values, "p", int)
        if stated != p:
            raise ParseError(f"p={stated} does not equal groups*group_size={p}")

    sim = SimDesign(
        n=_coerce(values, "n", int),
        p=p,
        m=m,
        group_size=group_size,
        k=_coerce(values, "k", int),
        amplitude=_coerce(values, "amplitude", float),
        rho=_coerce(values, "rho", float),
        gamma=_coerce(values, "gamma", float),
        model=values["model"],
        seed=_coerce(values, "seed", int),
    )
    if sim.model not in MODELS:
        raise ParseError(f"model must be one of {MODELS}, got {sim.model!r}")

    train = TrainConfig(
        learning_rate=_coerce(values, "learning_rate", float),
        l1_strength=_coerce(values, "l1_strength", float),
        epochs=_coerce(values, "epochs", int),
        batch_size=_coerce(values, "batch_size", int),
        seed=_coerce(values, "seed", int),
    )

    lasso_raw = values["lasso_lambda"].strip()
    out_raw = values["out"].strip()
    return ExperimentConfig(
        sim=sim,
        method=values["method"],
        q=_coerce(values, "q", float),
        replications=_coerce(values, "replications", int),
        knockoff_seed_base=_coerce(values, "seed", int),
        train=train,
        parallelism=_coerce(values, "workers", int),
        output_path=out_raw or None,
        ridge=_coerce(values, "ridge", float),
        lasso_penalty=float(lasso_raw) if lasso_raw else None,
    )
