"""Gaussian random-walk Metropolis."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from ..core import DomainError, PosteriorDraws, SamplerError, seed_sequence

__all__ = ["rw_metropolis", "default_steps", "ACCEPTANCE_BAND"]

ACCEPTANCE_BAND = (0.05, 0.8)
PILOT_STEPS = 500
PILOT_BLOCK = 50


def _safe(logdensity, theta) -> float:
    val = float(logdensity(theta))
    return val if not math.isnan(val) else -math.inf


def _run(logdensity, state, logp, scale, normals, uniforms):
    p = state.size
    chain = np.empty((normals.shape[0], p))
    accepted = 0
    log_u = np.log(uniforms)
    for t in range(normals.shape[0]):
        proposal = state + scale * normals[t]
        lp = _safe(logdensity, proposal)
        if log_u[t] < lp - logp:
            state, logp = proposal, lp
            accepted += 1
        chain[t] = state
    return chain, state, logp, accepted


def _pilot_scale(logdensity, init, logp, scale, rng):
    """Tune a diagonal proposal scale from a short adaptive run."""
    p = init.size
    state = init
    samples = []
    for _ in range(PILOT_STEPS // PILOT_BLOCK):
        chain, state, logp, acc = _run(
            logdensity, state, logp, scale, rng.standard_normal((PILOT_BLOCK, p)), rng.random(PILOT_BLOCK)
        )
        samples.append(chain)
        rate = acc / PILOT_BLOCK
        if rate < 0.15:
            scale = scale * 0.5
        elif rate > 0.5:
            scale = scale * 2.0
    pilot = np.vstack(samples)[PILOT_STEPS // 2 :]
    sd = pilot.std(axis=0)
    tuned = np.where(sd > 0, 2.38 / math.sqrt(p) * sd, scale)
    return tuned, state, logp


def rw_metropolis(
    logdensity: Callable[[np.ndarray], float],
    init,
    steps: int,
    proposal_scale=None,
    burn_in: int = 0,
    thin: int = 1,
    seed: int = 0,
    pilot_scale: float = 0.1,
) -> PosteriorDraws:
    """Run a random-walk Metropolis chain and return thinned post-burn-in draws.

    Without ``proposal_scale`` a 500-step adaptive pilot run sets a diagonal
    scale of ``2.38/sqrt(p)`` times the pilot standard deviations, and the main
    chain starts where the pilot ended. The chain keeps
    ``(steps - burn_in) // thin`` draws.
    """
    init = np.atleast_1d(np.asarray(init, dtype=float))
    if steps < burn_in + thin or thin < 1 or burn_in < 0:
        raise DomainError("need steps >= burn_in + thin and thin >= 1")
    rng = seed_sequence(seed)
    logp = _safe(logdensity, init)
    if not math.isfinite(logp):
        raise SamplerError("log density is not finite at the initial point")
    state = init
    info: dict = {}
    if proposal_scale is None:
        scale, state, logp = _pilot_scale(logdensity, init, logp, pilot_scale, rng)
        info["pilot_steps"] = PILOT_STEPS
    else:
        scale = np.broadcast_to(np.asarray(proposal_scale, dtype=float), init.shape).copy()
        if np.any(scale <= 0):
            raise DomainError("proposal_scale must be positive")
    chain, _, _, accepted = _run(
        logdensity, state, logp, scale, rng.standard_normal((steps, init.size)), rng.random(steps)
    )
    rate = accepted / steps
    info["acceptance_rate"] = rate
    info["proposal_scale"] = [float(v) for v in np.atleast_1d(scale)]
    lo, hi = ACCEPTANCE_BAND
    if not lo <= rate <= hi:
        info["warnings"] = [f"acceptance rate {rate:.3f} outside [{lo}, {hi}]"]
    draws = chain[burn_in::thin]
    if draws.shape[0] < 2:
        raise SamplerError("chain produced fewer than two draws after burn-in and thinning")
    return PosteriorDraws(draws, sampler="rw_metropolis", seed=seed, burn_in=burn_in, thinning=thin, info=info)


def default_steps(M: int, burn_in: int, thin: int) -> int:
    """Chain length that keeps exactly M draws."""
    return burn_in + M * thin
