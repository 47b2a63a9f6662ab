"""Shared domain types: datasets, posterior draws, evaluation matrices, reports."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

__all__ = [
    "PCICError",
    "DimensionError",
    "DomainError",
    "NonFiniteError",
    "SamplerError",
    "DegenerateWeightsError",
    "Dataset",
    "PosteriorDraws",
    "EvalMatrix",
    "ObservationWeights",
    "RiskReport",
    "Evaluator",
    "build_eval_matrix",
    "posterior_mean",
    "batch_standard_error",
]


class PCICError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(PCICError, ValueError):
    pass


class DomainError(PCICError, ValueError):
    pass


class NonFiniteError(PCICError, ValueError):
    pass


class SamplerError(PCICError, RuntimeError):
    pass


class DegenerateWeightsError(PCICError, ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    if isinstance(a, np.ndarray) and a.dtype == np.float64 and not a.flags.writeable:
        return a
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Observations stored row-wise.

    ``columns`` names each column; ``response`` names the response column for
    regression/classification data (``None`` for plain location data).
    """

    rows: np.ndarray
    columns: tuple[str, ...] = ()
    response: Optional[str] = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim == 1:
            rows = rows[:, None]
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise DimensionError(f"dataset needs at least one row, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            bad = np.argwhere(~np.isfinite(rows))[0]
            raise NonFiniteError(f"non-finite entry at row {bad[0]}, column {bad[1]}")
        columns = tuple(self.columns) or tuple(f"x{j}" for j in range(rows.shape[1]))
        if len(columns) != rows.shape[1]:
            raise DimensionError(f"{len(columns)} column names for {rows.shape[1]} columns")
        if self.response is not None and self.response not in columns:
            raise DimensionError(f"response column {self.response!r} not in {columns}")
        object.__setattr__(self, "rows", _frozen(rows))
        object.__setattr__(self, "columns", columns)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def subset(self, index) -> "Dataset":
        return Dataset(self.rows[index], self.columns, self.response)

    def drop(self, i: int) -> "Dataset":
        return self.subset(np.delete(np.arange(self.n), i))


@dataclass(frozen=True)
class PosteriorDraws:
    """M parameter vectors from a (quasi-)posterior sampler, with provenance."""

    draws: np.ndarray
    sampler: str = "unknown"
    seed: int = 0
    burn_in: int = 0
    thinning: int = 1
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=float)
        if draws.ndim == 1:
            draws = draws[:, None]
        if draws.ndim != 2 or draws.shape[0] < 2:
            raise DimensionError(f"need at least two draws, got shape {draws.shape}")
        if not np.all(np.isfinite(draws)):
            raise NonFiniteError("posterior draws contain non-finite values")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "draws", _frozen(draws))

    @property
    def M(self) -> int:
        return self.draws.shape[0]

    @property
    def p(self) -> int:
        return self.draws.shape[1]

    def provenance(self) -> dict:
        return {
            "sampler": self.sampler,
            "seed": int(self.seed),
            "burn_in": int(self.burn_in),
            "thinning": int(self.thinning),
            "M": self.M,
            **self.info,
        }


@dataclass(frozen=True)
class EvalMatrix:
    """Loss values ``nu[i, k]`` and score values ``s[i, k]`` on n observations x M draws."""

    nu: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        nu = _frozen(self.nu)
        s = _frozen(self.s)
        if nu.ndim != 2 or nu.shape != s.shape:
            raise DimensionError(f"nu {nu.shape} and s {s.shape} must be equal 2-d shapes")
        if nu.shape[0] < 1 or nu.shape[1] < 2:
            raise DimensionError(f"need n >= 1 and M >= 2, got {nu.shape}")
        for name, a in (("nu", nu), ("s", s)):
            if not np.all(np.isfinite(a)):
                i, k = np.argwhere(~np.isfinite(a))[0]
                raise NonFiniteError(f"{name}[{i}, {k}] is not finite")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "s", s)

    @property
    def n(self) -> int:
        return self.nu.shape[0]

    @property
    def M(self) -> int:
        return self.nu.shape[1]

    def columns(self, index) -> "EvalMatrix":
        """Restrict to a subset of draws (columns)."""
        return EvalMatrix(self.nu[:, index], self.s[:, index])


@dataclass(frozen=True)
class ObservationWeights:
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).ravel()
        if not np.all(np.isfinite(w)):
            raise NonFiniteError("observation weights must be finite")
        if np.any(w < 0):
            raise DomainError(f"observation weights must be nonnegative, got min {w.min()}")
        object.__setattr__(self, "w", _frozen(w))

    def __len__(self):
        return self.w.shape[0]


@dataclass(frozen=True)
class RiskReport:
    empirical_gibbs: float
    correction_v: float
    pcic_gibbs: float
    influence: np.ndarray
    kappa3: np.ndarray
    mc_se: float
    empirical_plugin: Optional[float] = None
    pcic_plugin: Optional[float] = None

    def to_dict(self) -> dict[str, Any]:
        def num(x):
            return None if x is None or not np.isfinite(x) else float(x)

        return {
            "empirical_gibbs": num(self.empirical_gibbs),
            "empirical_plugin": num(self.empirical_plugin),
            "correction_v": num(self.correction_v),
            "pcic_gibbs": num(self.pcic_gibbs),
            "pcic_plugin": num(self.pcic_plugin),
            "influence": [float(v) for v in self.influence],
            "kappa3": [float(v) for v in self.kappa3],
            "mc_se": num(self.mc_se),
        }


@dataclass(frozen=True)
class Evaluator:
    """A per-observation function ``f(row, theta) -> float``.

    ``batch``, when given, maps ``(rows[n, c], thetas[M, p])`` to an ``n x M``
    array and must agree with the pointwise form; it only exists for speed.
    """

    pointwise: Callable[[np.ndarray, np.ndarray], float]
    batch: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    name: str = ""

    def __call__(self, row, theta) -> float:
        return self.pointwise(row, theta)


def _evaluate(fn, rows: np.ndarray, thetas: np.ndarray, label: str) -> np.ndarray:
    batch = getattr(fn, "batch", None)
    if batch is not None:
        out = np.asarray(batch(rows, thetas), dtype=float)
        if out.shape != (rows.shape[0], thetas.shape[0]):
            raise DimensionError(
                f"{label} batch evaluator returned shape {out.shape}, "
                f"expected {(rows.shape[0], thetas.shape[0])}"
            )
    else:
        out = np.empty((rows.shape[0], thetas.shape[0]))
        for i, row in enumerate(rows):
            for k, theta in enumerate(thetas):
                out[i, k] = fn(row, theta)
    if not np.all(np.isfinite(out)):
        i, k = np.argwhere(~np.isfinite(out))[0]
        raise NonFiniteError(f"{label} returned a non-finite value at observation {i}, draw {k}")
    return out


def build_eval_matrix(dataset: Dataset, draws: PosteriorDraws, loss_fn, score_fn) -> EvalMatrix:
    """Evaluate the loss and score at every (observation, draw) pair."""
    if dataset.n < 1:
        raise DimensionError("empty dataset")
    if draws.M < 2:
        raise DimensionError("need at least two posterior draws")
    nu = _evaluate(loss_fn, dataset.rows, draws.draws, "loss_fn")
    s = _evaluate(score_fn, dataset.rows, draws.draws, "score_fn")
    return EvalMatrix(nu, s)


def posterior_mean(draws) -> np.ndarray:
    """Componentwise mean of the draws; accepts PosteriorDraws or an (M, p) array."""
    arr = draws.draws if isinstance(draws, PosteriorDraws) else np.atleast_2d(np.asarray(draws, dtype=float))
    if arr.shape[0] < 1:
        raise DimensionError("posterior_mean needs at least one draw")
    return arr.mean(axis=0)


def batch_standard_error(
    em: EvalMatrix, statistic: Callable[[EvalMatrix], float], n_batches: int = 10
) -> float:
    """Standard error of ``statistic`` from contiguous batches of draws.

    The draws are cut into ``n_batches`` contiguous column blocks, the statistic
    is recomputed on each block, and the standard error of the batch mean is
    returned. Returns nan when a batch would hold fewer than two draws.
    """
    if n_batches < 2 or em.M // n_batches < 2:
        return float("nan")
    size = em.M // n_batches
    values = np.array([statistic(em.columns(slice(b * size, (b + 1) * size))) for b in range(n_batches)])
    return float(values.std(ddof=1) / np.sqrt(n_batches))


def seed_sequence(seed: int, *keys: int) -> np.random.Generator:
    """Generator for a derived stream ``(seed, *keys)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 63-bit seed for the stream ``(seed, *keys)``."""
    state = np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))
