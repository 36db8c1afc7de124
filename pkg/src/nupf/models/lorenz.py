"""Stochastic Lorenz 63 and Lorenz 96 models.

Both systems are discretized with the Euler-Maruyama scheme (unit-variance
driving noise, so each discrete step adds sqrt(T) * N(0, I)). One model
"step" spans a full observation epoch of ``t_s`` integration steps; the
transition density over an epoch involves a composition of nonlinearities
and is deliberately not exposed, which rules out proposal corrections that
require evaluating it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._util import LOG_2PI
from ..core import Observation, StateSpaceModel

__all__ = [
    "Lorenz63Spec",
    "Lorenz96Spec",
    "lorenz63_drift",
    "lorenz96_drift",
    "euler_maruyama_l63",
    "euler_maruyama_l96",
    "build_lorenz63",
    "build_lorenz96",
]

Array = np.ndarray

# starting point on the attractor, from a noise-free run at the standard
# chaotic parameter set
L63_X0 = np.array([-5.91652, -5.52332, 24.5723])


@dataclass(frozen=True)
class Lorenz63Spec:
    a: float = 10.0
    r: float = 28.0
    b: float = 8.0 / 3.0
    t_step: float = 1e-3
    t_s: int = 40
    k_o: float = 0.8
    obs_noise_var: float = 1.0

    def __post_init__(self):
        if self.t_step <= 0 or self.t_s < 1 or self.obs_noise_var <= 0:
            raise ValueError("t_step, t_s and obs_noise_var must be positive")


@dataclass(frozen=True)
class Lorenz96Spec:
    d: int = 40
    f: float = 8.0
    t_step: float = 5e-3
    t_s: int = 10
    obs_noise_var: float = 1.0
    burn_in_steps: int = 1000

    def __post_init__(self):
        if self.d < 4:
            raise ValueError("Lorenz 96 needs dimension d >= 4")
        if self.t_step <= 0 or self.t_s < 1 or self.obs_noise_var <= 0:
            raise ValueError("t_step, t_s and obs_noise_var must be positive")

    @property
    def d_y(self) -> int:
        return self.d // 2

    @property
    def observed_coords(self) -> Array:
        # odd coordinates x_1, x_3, ... in 1-based indexing
        return np.arange(0, 2 * self.d_y, 2)


def lorenz63_drift(states: Array, spec: Lorenz63Spec) -> Array:
    x = np.atleast_2d(states)
    x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
    return np.stack([
        -spec.a * (x1 - x2),
        spec.r * x1 - x2 - x1 * x3,
        x1 * x2 - spec.b * x3,
    ], axis=1)


def lorenz96_drift(states: Array, spec: Lorenz96Spec) -> Array:
    """Circular drift (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F."""
    x = np.atleast_2d(states)
    return (np.roll(x, -1, axis=1) - np.roll(x, 2, axis=1)) * np.roll(x, 1, axis=1) \
        - x + spec.f


def euler_maruyama_l63(states: Array, spec: Lorenz63Spec, rng) -> Array:
    """One integration step; noise scale sqrt(t_step) per coordinate."""
    x = np.atleast_2d(states)
    return x + spec.t_step * lorenz63_drift(x, spec) \
        + np.sqrt(spec.t_step) * rng.standard_normal(x.shape)


def euler_maruyama_l96(states: Array, spec: Lorenz96Spec, rng) -> Array:
    x = np.atleast_2d(states)
    return x + spec.t_step * lorenz96_drift(x, spec) \
        + np.sqrt(spec.t_step) * rng.standard_normal(x.shape)


def _scalar_gaussian_loglik(resid_sq: Array, var: float) -> Array:
    return -0.5 * (resid_sq / var + LOG_2PI + np.log(var))


def _kill_nonfinite(log_g: Array, states: Array) -> Array:
    """Particles whose integration blew up carry zero likelihood.

    The Euler scheme can push an extreme particle past overflow in the
    quadratic drift; such a particle has left any plausible region, so it
    is weighted out instead of poisoning the ensemble with NaNs.
    """
    bad = ~np.isfinite(states).all(axis=1)
    if bad.any():
        log_g = np.where(bad, -np.inf, log_g)
    return log_g


def build_lorenz63(spec: Lorenz63Spec, x0: Array = L63_X0) -> StateSpaceModel:
    """Lorenz 63 observed in its first coordinate.

    The transition kernel composes ``t_s`` Euler-Maruyama steps (one
    observation epoch). Initial states are drawn from N(x0, I), so the
    simulated truth and the filter prior share one mechanism.
    """
    x0 = np.asarray(x0, dtype=float)
    var = spec.obs_noise_var

    def prior_sampler(n, rng):
        return x0 + rng.standard_normal((n, 3))

    def transition_sampler(states, t, rng):
        x = np.atleast_2d(states)
        for _ in range(spec.t_s):
            x = euler_maruyama_l63(x, spec, rng)
        return x

    def log_likelihood(obs: Observation, states):
        x = np.atleast_2d(states)
        resid = obs.values[0] - spec.k_o * x[:, 0]
        return _kill_nonfinite(_scalar_gaussian_loglik(resid * resid, var), x)

    def loglik_gradient(obs: Observation, states):
        x = np.atleast_2d(states)
        grad = np.zeros_like(x)
        grad[:, 0] = spec.k_o * (obs.values[0] - spec.k_o * x[:, 0]) / var
        return grad

    def observation_sampler(states, t, rng):
        x = np.atleast_2d(states)
        return spec.k_o * x[:, :1] + np.sqrt(var) * rng.standard_normal((x.shape[0], 1))

    return StateSpaceModel(
        d_x=3, d_y=1,
        prior_sampler=prior_sampler,
        transition_sampler=transition_sampler,
        log_likelihood=log_likelihood,
        loglik_gradient=loglik_gradient,
        observation_sampler=observation_sampler,
    )


def build_lorenz96(spec: Lorenz96Spec) -> StateSpaceModel:
    """Lorenz 96 with the odd coordinates observed in unit Gaussian noise.

    Initial states start uniform on (0, 1)^d and are burned onto the
    attractor with ``burn_in_steps`` stochastic integration steps; every
    particle burns in independently.
    """
    var = spec.obs_noise_var
    obs_idx = spec.observed_coords

    def prior_sampler(n, rng):
        x = rng.random((n, spec.d))
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(spec.burn_in_steps):
                x = euler_maruyama_l96(x, spec, rng)
        return x

    def transition_sampler(states, t, rng):
        x = np.atleast_2d(states)
        # overflow of a divergent particle is expected and handled by the
        # zero-likelihood guard, so the epoch loop runs without warnings
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(spec.t_s):
                x = euler_maruyama_l96(x, spec, rng)
        return x

    def log_likelihood(obs: Observation, states):
        x = np.atleast_2d(states)
        resid = obs.values - x[:, obs_idx]
        return _kill_nonfinite(np.sum(_scalar_gaussian_loglik(resid * resid, var), axis=1), x)

    def loglik_gradient(obs: Observation, states):
        x = np.atleast_2d(states)
        grad = np.zeros_like(x)
        grad[:, obs_idx] = (obs.values - x[:, obs_idx]) / var
        return grad

    def observation_sampler(states, t, rng):
        x = np.atleast_2d(states)
        return x[:, obs_idx] + np.sqrt(var) * rng.standard_normal((x.shape[0], spec.d_y))

    return StateSpaceModel(
        d_x=spec.d, d_y=spec.d_y,
        prior_sampler=prior_sampler,
        transition_sampler=transition_sampler,
        log_likelihood=log_likelihood,
        loglik_gradient=loglik_gradient,
        observation_sampler=observation_sampler,
    )
