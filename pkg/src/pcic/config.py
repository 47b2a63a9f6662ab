"""Declarative experiment configuration loaded from JSON."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Optional, Union

from .core import DomainError

__all__ = ["ExperimentConfig", "EXPERIMENTS", "ConfigError"]

EXPERIMENTS = ("estimate", "location", "dp_logistic", "outlier", "sensitivity", "check")


class ConfigError(DomainError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    model: str = "location"
    loss: str = "quadratic"
    losses: Optional[list] = None
    beta: float = 1.0
    beta_grid: Optional[list] = None
    tau: float = 10.0
    theta_star: Optional[list] = None
    a_matrix: Optional[list] = None
    errors: str = "gaussian"
    modified_score: bool = False
    R: float = 6.0
    r_grid: Optional[list] = None
    n: int = 100
    n_test: int = 100
    d: int = 1
    M: int = 4000
    replications: int = 50
    burn_in: int = 100
    thin: int = 5
    weights: Optional[Union[list, str]] = None
    exact_loocv: bool = False
    threads: int = 1
    output: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an explicit unsigned 64-bit integer")
        for name in ("n", "n_test", "d", "M", "replications", "thin", "threads"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.burn_in < 0:
            raise ConfigError("burn_in must be nonnegative")
        if self.beta <= 0 or self.tau <= 0:
            raise ConfigError("beta and tau must be positive")

    @classmethod
    def from_dict(cls, data: dict[str, Any], **overrides) -> "ExperimentConfig":
        merged = {**data, **{k: v for k, v in overrides.items() if v is not None}}
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(merged) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "seed" not in merged:
            raise ConfigError("config must set 'seed'")
        if "experiment" not in merged:
            raise ConfigError("config must set 'experiment'")
        defaults = DEFAULTS.get(merged["experiment"], {})
        return cls(**{**defaults, **merged})

    @classmethod
    def from_json(cls, path: Union[str, Path], **overrides) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data, **overrides)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def theta(self, default_dim: int) -> list:
        return list(self.theta_star) if self.theta_star is not None else [0.0] * default_dim


# per-experiment defaults, applied beneath user keys
DEFAULTS: dict[str, dict[str, Any]] = {
    "location": {"n": 100, "n_test": 100, "M": 4000, "replications": 2000, "tau": 10.0},
    "dp_logistic": {
        "n": 50, "n_test": 10, "M": 3980, "burn_in": 100, "thin": 5, "replications": 50,
        "beta_grid": [0.5, 1.0], "losses": ["brier", "misclass", "spherical"],
    },
    "outlier": {
        "n": 50, "n_test": 10, "M": 3980, "burn_in": 100, "thin": 5, "replications": 50,
        "r_grid": [1, 2, 3, 4, 5, 6], "losses": ["l2", "scaled_l1"],
    },
    "sensitivity": {
        "n": 50, "n_test": 10, "M": 3980, "burn_in": 100, "thin": 5, "replications": 50,
        "R": 6.0, "losses": ["l2", "scaled_l1"],
    },
    "estimate": {"M": 4000},
}
