"""Stochastic volatility model for log-return series.

    x_0 ~ N(mu, sigma_v^2 / (1 - phi^2))
    x_t | x_{t-1} ~ N(mu + phi (x_{t-1} - mu), sigma_v^2)
    y_t | x_t ~ N(0, exp(x_t))

States are log-volatilities, observations are (scaled) log-returns.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .._util import LOG_2PI
from ..core import Observation, StateSpaceModel
from ..errors import InvalidParam

__all__ = ["StochVolSpec", "build_stochvol", "simulate_price_series"]

Array = np.ndarray


@dataclass(frozen=True)
class StochVolSpec:
    mu: float
    sigma_v: float
    phi: float

    def __post_init__(self):
        if self.sigma_v <= 0:
            raise InvalidParam(f"sigma_v must be positive, got {self.sigma_v}")
        if not abs(self.phi) < 1:
            raise InvalidParam(f"|phi| must be < 1 for a stationary prior, got {self.phi}")

    @property
    def stationary_var(self) -> float:
        return self.sigma_v ** 2 / (1.0 - self.phi ** 2)


def build_stochvol(spec: StochVolSpec) -> StateSpaceModel:
    mu, sv, phi = spec.mu, spec.sigma_v, spec.phi
    prior_sd = np.sqrt(spec.stationary_var)

    def prior_sampler(n, rng):
        return mu + prior_sd * rng.standard_normal((n, 1))

    def transition_sampler(states, t, rng):
        x = states if states.ndim > 1 else states[None, :]
        return mu + phi * (x - mu) + sv * rng.standard_normal(x.shape)

    def log_likelihood(obs: Observation, states):
        x = states[:, 0] if states.ndim > 1 else states
        y = obs.values[0]
        return -0.5 * (x + y * y * np.exp(-x) + LOG_2PI)

    def loglik_gradient(obs: Observation, states):
        x = states if states.ndim > 1 else states[None, :]
        y = obs.values[0]
        return -0.5 + 0.5 * y * y * np.exp(-x)

    def observation_sampler(states, t, rng):
        x = np.atleast_2d(states)
        return np.exp(0.5 * x) * rng.standard_normal(x.shape)

    def transition_mean(states, t):
        x = np.atleast_2d(states)
        return mu + phi * (x - mu)

    return StateSpaceModel(
        d_x=1, d_y=1,
        prior_sampler=prior_sampler,
        transition_sampler=transition_sampler,
        log_likelihood=log_likelihood,
        loglik_gradient=loglik_gradient,
        observation_sampler=observation_sampler,
        transition_mean=transition_mean,
    )


def simulate_price_series(spec: StochVolSpec, horizon: int, rng,
                          s0: float = 1.1, start: date = date(2015, 1, 1),
                          ) -> tuple[list[str], Array]:
    """Generate a daily price path whose scaled log-returns follow the model.

    Returns ISO date strings and prices of length ``horizon + 1``; the
    returns y_t = 100 log(s_t / s_{t-1}) for t = 1..horizon are draws from
    the observation process.
    """
    x = spec.mu + np.sqrt(spec.stationary_var) * rng.standard_normal()
    prices = np.empty(horizon + 1)
    prices[0] = s0
    for t in range(1, horizon + 1):
        x = spec.mu + spec.phi * (x - spec.mu) + spec.sigma_v * rng.standard_normal()
        y = np.exp(0.5 * x) * rng.standard_normal()
        prices[t] = prices[t - 1] * np.exp(y / 100.0)
    dates = [(start + timedelta(days=t)).isoformat() for t in range(horizon + 1)]
    return dates, prices
