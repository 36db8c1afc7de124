"""Shared filter state, resampling, and the run loop.

All step functions share one shape: ``step(state, model, obs, rng) ->
FilterState`` with any extra configuration bound via ``functools.partial``
or the convenience runners. Per-step estimates are recorded on the
returned state and collected by :func:`run_filter` into a
:class:`FilterOutput`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..core import (Observation, ParticleEnsemble, StateSpaceModel,
                    effective_sample_size, normalize_log_weights)
from ..errors import AllWeightsZero, NotNormalized
from ..rng import FilterRng, RngStream

__all__ = ["FilterState", "FilterOutput", "resample_multinomial", "init_filter",
           "run_filter"]

logger = logging.getLogger(__name__)

Array = np.ndarray


@dataclass
class FilterState:
    """Filter state after one assimilation step.

    ``ensemble`` holds the post-resampling particles (uniform weights).
    The ``last_*`` fields carry the per-step diagnostics computed from the
    weighted pre-resampling ensemble.
    """

    ensemble: ParticleEnsemble
    time: int = 0
    cumulative_log_evidence: float = 0.0
    last_nudge_count: int = 0
    last_posterior_mean: Optional[Array] = None
    last_log_evidence_increment: float = 0.0
    last_prenudge_increment: Optional[float] = None
    last_ess: Optional[float] = None
    last_degenerate: bool = False


@dataclass
class FilterOutput:
    """Per-step traces of one filter run."""

    means: Array                 # (T, d_x) posterior means, pre-resampling ensemble
    log_evidence_increments: Array   # (T,)
    ess: Array                   # (T,)
    nudge_counts: Array          # (T,) int
    degenerate: Array            # (T,) bool
    prenudge_increments: Optional[Array] = None

    @property
    def log_evidence(self) -> float:
        return float(np.sum(self.log_evidence_increments))


def resample_multinomial(ensemble: ParticleEnsemble, rng) -> ParticleEnsemble:
    """N i.i.d. draws from the weighted empirical measure; output weights
    are uniform."""
    if not ensemble.normalized:
        raise NotNormalized("resampling requires a normalized ensemble")
    n = ensemble.n
    cdf = np.cumsum(np.exp(ensemble.log_weights))
    cdf[-1] = 1.0  # guard against round-off at the top
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    return ParticleEnsemble.uniform(ensemble.states[idx])


def weight_ensemble(states: Array, log_g: Array) -> tuple[ParticleEnsemble, float, bool]:
    """Turn raw log-likelihoods into a normalized ensemble plus the
    evidence increment log[(1/N) sum g].

    Total degeneracy (every log-likelihood -inf) resets the weights to
    uniform, records a -inf increment and flags the step instead of
    aborting the run.
    """
    n = states.shape[0]
    try:
        normed, log_sum = normalize_log_weights(log_g)
        return (ParticleEnsemble(states, normed, normalized=True),
                float(log_sum - np.log(n)), False)
    except AllWeightsZero:
        logger.warning("all particle weights degenerate; resetting to uniform")
        return ParticleEnsemble.uniform(states), -np.inf, True


def init_filter(model: StateSpaceModel, n_particles: int, rng) -> FilterState:
    """Draw the initial particle system from the prior."""
    gen = rng.propagate if isinstance(rng, FilterRng) else rng
    states = model.prior_sampler(n_particles, gen)
    return FilterState(ensemble=ParticleEnsemble.uniform(states))


def run_filter(step: Callable[[FilterState, StateSpaceModel, Observation, FilterRng], FilterState],
               model: StateSpaceModel,
               observations: list[Observation],
               n_particles: int,
               stream: RngStream) -> FilterOutput:
    """Drive a step function over an observation sequence.

    One purpose-split :class:`FilterRng` serves the whole run, so a run is
    reproducible from its stream alone.
    """
    rng = FilterRng.from_stream(stream)
    state = init_filter(model, n_particles, rng)
    t_len = len(observations)
    means = np.empty((t_len, model.d_x))
    incs = np.empty(t_len)
    ess = np.empty(t_len)
    nudges = np.zeros(t_len, dtype=int)
    degen = np.zeros(t_len, dtype=bool)
    pre = np.full(t_len, np.nan)
    has_pre = False
    for i, obs in enumerate(observations):
        state = step(state, model, obs, rng)
        means[i] = state.last_posterior_mean
        incs[i] = state.last_log_evidence_increment
        ess[i] = state.last_ess
        nudges[i] = state.last_nudge_count
        degen[i] = state.last_degenerate
        if state.last_prenudge_increment is not None:
            pre[i] = state.last_prenudge_increment
            has_pre = True
    return FilterOutput(means=means, log_evidence_increments=incs, ess=ess,
                        nudge_counts=nudges, degenerate=degen,
                        prenudge_increments=pre if has_pre else None)


def weighted_mean(ensemble: ParticleEnsemble) -> Array:
    return np.exp(ensemble.log_weights) @ ensemble.states


def step_diagnostics(state: FilterState, weighted: ParticleEnsemble,
                     increment: float, degenerate: bool, rng: FilterRng,
                     nudge_count: int = 0,
                     prenudge_increment: Optional[float] = None) -> FilterState:
    """Finish a step: record estimates from the weighted ensemble, then
    resample."""
    return FilterState(
        ensemble=resample_multinomial(weighted, rng.resample),
        time=state.time + 1,
        cumulative_log_evidence=state.cumulative_log_evidence + increment,
        last_nudge_count=nudge_count,
        last_posterior_mean=weighted_mean(weighted),
        last_log_evidence_increment=increment,
        last_prenudge_increment=prenudge_increment,
        last_ess=effective_sample_size(weighted),
        last_degenerate=degenerate,
    )
