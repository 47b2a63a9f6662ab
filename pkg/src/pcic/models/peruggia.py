"""Simple linear regression with an influential design point, fit by Gibbs sampling.

Model: ``y_i = b0 + b1 x_i + sigma eps_i`` with priors ``b | Sigma ~ N(0, Sigma)``,
``sigma^2 ~ IG(1, 1)`` and ``Sigma ~ IW(4 I, 4)`` where the inverse-Wishart
density is proportional to ``|Sigma|^{-(df+3)/2} exp(-tr(Psi Sigma^{-1})/2)``.

Full conditionals:

* ``b | sigma^2, Sigma, y ~ N(P^{-1} X'y / sigma^2, P^{-1})`` with ``P = Sigma^{-1} + X'X / sigma^2``
* ``sigma^2 | b, y ~ IG(1 + n/2, 1 + RSS/2)``
* ``Sigma | b ~ IW(4 I + b b', 5)``
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import Dataset, DimensionError, DomainError, PosteriorDraws, SamplerError, seed_sequence

__all__ = [
    "RegressionData",
    "PeruggiaRegression",
    "peruggia_design",
    "peruggia_gibbs",
    "regression_generalization_error",
    "DRAW_COLUMNS",
]

DRAW_COLUMNS = ("beta0", "beta1", "sigma2", "Sigma11", "Sigma12", "Sigma22")
IW_SCALE = 4.0
IW_DF = 4
IG_SHAPE = 1.0
IG_RATE = 1.0
JITTER = 1e-10
MAX_RETRIES = 3


def peruggia_design(n: int, R: float) -> np.ndarray:
    """``x_i = 0.01 i`` for ``i < n`` and ``x_n = R`` (1-based i)."""
    if n < 1:
        return np.empty(0)
    x = 0.01 * np.arange(1, n + 1, dtype=float)
    x[-1] = R
    return x


@dataclass(frozen=True)
class RegressionData:
    """Paired covariate/response vectors with an arbitrary design."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise DimensionError("x and y must have equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DomainError("x and y must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size

    def to_dataset(self) -> Dataset:
        return Dataset(np.column_stack([self.x, self.y]), ("x", "y"), "y")


@dataclass(frozen=True)
class PeruggiaRegression(RegressionData):
    """Regression data on the design ``x_i = 0.01 i``, ``x_n = R``."""

    R: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if not np.array_equal(self.x, peruggia_design(self.x.size, self.R)):
            raise DomainError("x does not follow the 0.01 i / R design")

    @classmethod
    def from_dataset(cls, dataset: Dataset, R: float | None = None) -> "PeruggiaRegression":
        x = dataset.column("x")
        return cls(x, dataset.column("y"), float(x[-1]) if R is None else R)


def _chol_solve_draw(p11, p12, p22, r1, r2, z1, z2):
    """Draw from N(P^{-1} r, P^{-1}) for a 2x2 precision P."""
    for attempt in range(MAX_RETRIES + 1):
        jitter = 0.0 if attempt == 0 else JITTER * 10 ** (attempt - 1)
        a2 = p11 + jitter
        if a2 > 0:
            a = math.sqrt(a2)
            b = p12 / a
            c2 = p22 + jitter - b * b
            if c2 > 0:
                c = math.sqrt(c2)
                # forward solve L m0 = r, back solve L' mean = m0
                m1 = r1 / a
                m2 = (r2 - b * m1) / c
                mu2 = m2 / c
                mu1 = (m1 - b * mu2) / a
                u2 = z2 / c
                u1 = (z1 - b * u2) / a
                return mu1 + u1, mu2 + u2
    raise SamplerError("conditional precision of the coefficients is not positive definite")


def peruggia_gibbs(data: RegressionData, M: int, burn_in: int = 100, thin: int = 5, seed: int = 0) -> PosteriorDraws:
    """Gibbs sampler over ``(b0, b1, sigma2, Sigma)``.

    Returns M draws with columns :data:`DRAW_COLUMNS` (Sigma stored as its three
    distinct entries). ``data`` with zero observations samples the prior.
    """
    n = data.n
    if 0 < n < 3:
        raise DimensionError("need at least three observations (or none for a prior-only run)")
    if M < 2:
        raise DimensionError("need at least two draws")
    x, y = data.x, data.y
    sx, sxx = float(x.sum()), float(x @ x)
    sy, sxy, syy = float(y.sum()), float(x @ y), float(y @ y)

    steps = burn_in + M * thin
    rng = seed_sequence(seed)
    z_beta = rng.standard_normal((steps, 2))
    gam = rng.gamma(IG_SHAPE + 0.5 * n, 1.0, size=steps)
    df = IW_DF + 1
    chi_a = rng.chisquare(df, size=steps)
    chi_b = rng.chisquare(df - 1, size=steps)
    z_w = rng.standard_normal(steps)

    out = np.empty((M, 6))
    sigma2 = 1.0
    w11, w12, w22 = 1.0, 0.0, 1.0  # Sigma^{-1}
    kept = 0
    for t in range(steps):
        inv_s2 = 1.0 / sigma2
        b0, b1 = _chol_solve_draw(
            w11 + n * inv_s2, w12 + sx * inv_s2, w22 + sxx * inv_s2,
            sy * inv_s2, sxy * inv_s2, z_beta[t, 0], z_beta[t, 1],
        )

        rss = syy - 2.0 * b0 * sy - 2.0 * b1 * sxy + n * b0 * b0 + 2.0 * b0 * b1 * sx + b1 * b1 * sxx
        sigma2 = (IG_RATE + 0.5 * max(rss, 0.0)) / gam[t]

        # Sigma^{-1} ~ Wishart((4I + bb')^{-1}, 5) by the Bartlett decomposition
        q11, q12, q22 = IW_SCALE + b0 * b0, b0 * b1, IW_SCALE + b1 * b1
        det = q11 * q22 - q12 * q12
        v11, v12, v22 = q22 / det, -q12 / det, q11 / det
        l11 = math.sqrt(v11)
        l21 = v12 / l11
        l22 = math.sqrt(max(v22 - l21 * l21, 0.0))
        c1, c2 = math.sqrt(chi_a[t]), math.sqrt(chi_b[t])
        e11 = l11 * c1
        e21 = l21 * c1 + l22 * z_w[t]
        e22 = l22 * c2
        w11, w12, w22 = e11 * e11, e11 * e21, e21 * e21 + e22 * e22

        if t >= burn_in and (t - burn_in) % thin == 0 and kept < M:
            wdet = w11 * w22 - w12 * w12
            out[kept] = (b0, b1, sigma2, w22 / wdet, -w12 / wdet, w11 / wdet)
            kept += 1
    return PosteriorDraws(out, sampler="peruggia_gibbs", seed=seed, burn_in=burn_in, thinning=thin)


_erfc = np.frompyfunc(math.erfc, 1, 1)


def regression_generalization_error(kind: str, x, beta0: float, beta1: float, sigma: float, draws) -> float:
    """Exact Gibbs generalization error for fresh responses at the design points.

    The new point is ``(x_j, y)`` with ``x_j`` uniform over ``x`` and
    ``y ~ N(beta0 + beta1 x_j, sigma^2)``; the expectation over ``y`` is in
    closed form and the posterior expectation is the average over draws.
    """
    x = np.asarray(x, dtype=float).ravel()
    th = draws.draws if hasattr(draws, "draws") else np.asarray(draws, dtype=float)
    delta = (beta0 - th[None, :, 0]) + x[:, None] * (beta1 - th[None, :, 1])
    if kind == "l2":
        return float((sigma**2 + delta**2).mean())
    if kind == "scaled_l1":
        # E|delta + sigma Z| for the folded normal
        z = delta / sigma
        fold = sigma * (np.sqrt(2.0 / np.pi) * np.exp(-0.5 * z * z)
                        + z * (1.0 - _erfc(z / np.sqrt(2.0)).astype(float)))
        return float((fold / np.sqrt(th[None, :, 2])).mean())
    raise DomainError(f"unknown regression loss {kind!r}")
