"""Concrete state-space models and ground-truth simulation."""

from __future__ import annotations

import numpy as np

from ..core import Observation, StateSpaceModel
from .linear_gaussian import (LinearGaussianSpec, build_linear_gaussian,
                              draw_binary_obs_matrices)
from .lorenz import (L63_X0, Lorenz63Spec, Lorenz96Spec, build_lorenz63,
                     build_lorenz96, euler_maruyama_l63, euler_maruyama_l96,
                     lorenz63_drift, lorenz96_drift)
from .stochvol import StochVolSpec, build_stochvol, simulate_price_series
from .tracking import TrackingSpec, build_tracking, student_t_logpdf

__all__ = [
    "LinearGaussianSpec", "build_linear_gaussian", "draw_binary_obs_matrices",
    "Lorenz63Spec", "Lorenz96Spec", "build_lorenz63", "build_lorenz96",
    "euler_maruyama_l63", "euler_maruyama_l96", "lorenz63_drift", "lorenz96_drift",
    "L63_X0",
    "StochVolSpec", "build_stochvol", "simulate_price_series",
    "TrackingSpec", "build_tracking", "student_t_logpdf",
    "simulate",
]


def simulate(model: StateSpaceModel, horizon: int, rng
             ) -> tuple[np.ndarray, list[Observation]]:
    """Draw one trajectory and its observation sequence.

    Returns ``(states, observations)`` where ``states`` has ``horizon + 1``
    rows (the initial state included) and ``observations`` has ``horizon``
    entries with time indices 1..horizon.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if model.observation_sampler is None:
        raise ValueError("model does not provide an observation sampler")
    states = np.empty((horizon + 1, model.d_x))
    x = model.prior_sampler(1, rng)
    states[0] = x[0]
    observations = []
    for t in range(1, horizon + 1):
        x = model.transition_sampler(x, t, rng)
        states[t] = x[0]
        y = model.observation_sampler(x, t, rng)
        observations.append(Observation(values=y[0], time_index=t))
    return states, observations
