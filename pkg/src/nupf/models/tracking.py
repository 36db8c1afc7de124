"""Maneuvering-target tracking from received-signal-strength readings.

The target follows near-constant-velocity kinematics plus a feedback term
that steers it toward a goal state. The filters assume the plain
kinematic model without the feedback term, so there is a deliberate
mismatch in the state equation. Ten sensors report RSS in decibels,
corrupted by heavy-tailed Student-t noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import lgamma, log, pi
from typing import Optional

import numpy as np

from ..core import Observation, StateSpaceModel
from ..errors import InvalidParam
from .._util import psd_factor

__all__ = ["TrackingSpec", "build_tracking", "student_t_logpdf"]

Array = np.ndarray

# feedback policy steering the target to its goal state (fixed gain,
# treated as a constant of the scenario)
POLICY_L = np.array([
    [-0.0134, 0.0, -0.0381, 0.0],
    [0.0, -0.0134, 0.0, -0.0381],
])

# ten sensors on a 2 x 5 grid spanning the maneuver region
DEFAULT_SENSORS = np.array([
    [x, y] for x in (40.0, 240.0) for y in (-160.0, -80.0, 0.0, 80.0, 160.0)
])


@dataclass
class TrackingSpec:
    """Scenario constants. ``a``, ``b_input``, ``q`` are derived from the
    kinematic step ``kappa`` when left unset."""

    kappa: float = 0.04
    p0: float = 1.0
    eta: float = 1e-9
    nu: float = 1.01
    x0: Array = field(default_factory=lambda: np.array([140.0, 140.0, 50.0, 0.0]))
    x_target: Array = field(default_factory=lambda: np.array([140.0, -140.0, 0.0, 0.0]))
    sensors: Array = field(default_factory=lambda: DEFAULT_SENSORS.copy())
    policy: Array = field(default_factory=lambda: POLICY_L.copy())
    a: Optional[Array] = None
    b_input: Optional[Array] = None
    q: Optional[Array] = None

    def __post_init__(self):
        if self.nu <= 1.0:
            raise InvalidParam("t-distribution needs nu > 1")
        k = self.kappa
        i2 = np.eye(2)
        z2 = np.zeros((2, 2))
        if self.a is None:
            self.a = np.block([[i2, k * i2], [z2, 0.99 * i2]])
        if self.b_input is None:
            self.b_input = np.vstack([z2, i2])
        if self.q is None:
            self.q = np.block([[k ** 3 / 3 * i2, k ** 2 / 2 * i2],
                               [k ** 2 / 2 * i2, k * i2]])
        self.x0 = np.asarray(self.x0, dtype=float)
        self.x_target = np.asarray(self.x_target, dtype=float)
        self.sensors = np.atleast_2d(np.asarray(self.sensors, dtype=float))

    @property
    def n_sensors(self) -> int:
        return self.sensors.shape[0]


def student_t_logpdf(z: Array, nu: float) -> Array:
    """Log-density of the standard (location 0, scale 1) Student t."""
    const = lgamma((nu + 1.0) / 2.0) - lgamma(nu / 2.0) - 0.5 * log(nu * pi)
    return const - (nu + 1.0) / 2.0 * np.log1p(z * z / nu)


def _rss_mean(spec: TrackingSpec, positions: Array) -> Array:
    """Expected RSS in dB at each sensor, shape (n, n_sensors).

    The sensitivity floor eta keeps readings above ~10*log10(eta) dB even
    at infinite range."""
    diff = positions[:, None, :] - spec.sensors[None, :, :]
    dist_sq = np.sum(diff * diff, axis=2)
    return 10.0 * np.log10(spec.p0 / dist_sq + spec.eta)


def _rss_mean_position_jacobian(spec: TrackingSpec, positions: Array) -> Array:
    """d(RSS_i)/d(position), shape (n, n_sensors, 2)."""
    diff = positions[:, None, :] - spec.sensors[None, :, :]
    dist_sq = np.sum(diff * diff, axis=2)
    # d/dr 10*log10(p0/D + eta) with D = ||r - s||^2
    coeff = (10.0 / log(10.0)) / (spec.p0 / dist_sq + spec.eta) * (-spec.p0 / dist_sq ** 2)
    return coeff[:, :, None] * 2.0 * diff


def build_tracking(spec: TrackingSpec) -> tuple[StateSpaceModel, StateSpaceModel]:
    """Return ``(truth_model, filter_model)``.

    The truth model includes the goal-seeking feedback term and starts
    exactly at ``x0``; the filter model drops the feedback and draws its
    initial particles from N(x0, I). Both share the RSS likelihood.
    """
    sqrt_q = psd_factor(spec.q, 4)
    bl = spec.b_input @ spec.policy

    def log_likelihood(obs: Observation, states):
        x = np.atleast_2d(states)
        z = obs.values[None, :] - _rss_mean(spec, x[:, :2])
        log_g = np.sum(student_t_logpdf(z, spec.nu), axis=1)
        bad = ~np.isfinite(x[:, :2]).all(axis=1)
        if bad.any():
            log_g = np.where(bad, -np.inf, log_g)
        return log_g

    def loglik_gradient(obs: Observation, states):
        x = np.atleast_2d(states)
        z = obs.values[None, :] - _rss_mean(spec, x[:, :2])
        dll_dz = -(spec.nu + 1.0) * z / (spec.nu + z * z)
        jac = _rss_mean_position_jacobian(spec, x[:, :2])
        grad = np.zeros_like(x)
        # dz/dr = -d(mean)/dr, so the sign flips once more
        grad[:, :2] = -np.sum(dll_dz[:, :, None] * jac, axis=1)
        return grad

    def observation_sampler(states, t, rng):
        x = np.atleast_2d(states)
        mean = _rss_mean(spec, x[:, :2])
        return mean + rng.standard_t(spec.nu, size=mean.shape)

    def truth_prior(n, rng):
        return np.tile(spec.x0, (n, 1))

    def truth_transition(states, t, rng):
        x = np.atleast_2d(states)
        drift = x @ spec.a.T + (x - spec.x_target) @ bl.T
        return drift + rng.standard_normal(x.shape) @ sqrt_q.T

    def truth_transition_mean(states, t):
        x = np.atleast_2d(states)
        return x @ spec.a.T + (x - spec.x_target) @ bl.T

    def filter_prior(n, rng):
        return spec.x0 + rng.standard_normal((n, 4))

    def filter_transition(states, t, rng):
        x = np.atleast_2d(states)
        return x @ spec.a.T + rng.standard_normal(x.shape) @ sqrt_q.T

    def filter_transition_mean(states, t):
        return np.atleast_2d(states) @ spec.a.T

    common = dict(
        d_x=4, d_y=spec.n_sensors,
        log_likelihood=log_likelihood,
        loglik_gradient=loglik_gradient,
        observation_sampler=observation_sampler,
    )
    truth = StateSpaceModel(prior_sampler=truth_prior, transition_sampler=truth_transition,
                            transition_mean=truth_transition_mean, **common)
    filt = StateSpaceModel(prior_sampler=filter_prior, transition_sampler=filter_transition,
                           transition_mean=filter_transition_mean, **common)
    return truth, filt
