"""Linear-Gaussian state-space model with binary observation matrices.

    x_0 ~ N(0, I),   x_t | x_{t-1} ~ N(x_{t-1}, Q),   y_t | x_t ~ N(C_t x_t, R)

``Q`` may be a scalar scale (Q = q I) or a full covariance; ``C_t`` is a
fixed binary matrix or a time-varying sequence of them. This is the one
model family in the library with every conjugate computation available,
so it doubles as the reference for filter-consistency checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .._util import LOG_2PI, as_cov_matrix, psd_factor
from ..core import Observation, StateSpaceModel
from ..errors import DimensionMismatch

__all__ = ["LinearGaussianSpec", "build_linear_gaussian", "draw_binary_obs_matrices"]

Array = np.ndarray


def draw_binary_obs_matrices(n_steps: int, d_y: int, d_x: int, rng) -> Array:
    """Independent Bernoulli(1/2) binary observation matrices, one per step."""
    return (rng.random((n_steps, d_y, d_x)) < 0.5).astype(float)


@dataclass
class LinearGaussianSpec:
    """Model parameters. ``c`` is a single (d_y, d_x) matrix or a
    (T, d_y, d_x) stack for a time-varying observation model; when None,
    :func:`build_linear_gaussian` draws a time-varying binary sequence of
    length ``horizon``."""

    d_x: int
    d_y: int
    q: Union[float, Array] = 1.0
    c: Optional[Array] = None
    r: Union[float, Array] = 1.0
    horizon: Optional[int] = None
    time_varying: bool = field(init=False, default=False)

    def __post_init__(self):
        if self.d_x < 1 or self.d_y < 1:
            raise DimensionMismatch("d_x and d_y must be positive")
        if self.c is not None:
            self.c = np.asarray(self.c, dtype=float)
            if self.c.ndim not in (2, 3):
                raise DimensionMismatch("C must be a matrix or a stack of matrices")
            shape = self.c.shape[-2:]
            if shape != (self.d_y, self.d_x):
                raise DimensionMismatch(
                    f"C must be {self.d_y}x{self.d_x}, got {shape}")
            if not np.all((self.c == 0) | (self.c == 1)):
                raise ValueError("C entries must be binary")
            self.time_varying = self.c.ndim == 3
        self.q_matrix = as_cov_matrix(self.q, self.d_x)
        self.r_matrix = as_cov_matrix(self.r, self.d_y)
        if np.any(self.r_matrix != np.diag(np.diag(self.r_matrix))):
            raise ValueError("R must be diagonal")
        if np.any(np.diag(self.r_matrix) <= 0):
            raise ValueError("R must be positive definite")
        self.r_diag = np.diag(self.r_matrix).copy()

    def c_at(self, t: int) -> Array:
        """Observation matrix at 1-based time t."""
        if self.c is None:
            raise ValueError("observation matrices not set")
        if not self.time_varying:
            return self.c
        if not 1 <= t <= self.c.shape[0]:
            raise DimensionMismatch(f"no observation matrix for t={t}")
        return self.c[t - 1]


def build_linear_gaussian(spec: LinearGaussianSpec, rng=None) -> StateSpaceModel:
    """Assemble the model; draws the binary C_t sequence from ``rng`` when
    the spec leaves it unset."""
    if spec.c is None:
        if rng is None or spec.horizon is None:
            raise ValueError("drawing C_t requires an rng and spec.horizon")
        spec.c = draw_binary_obs_matrices(spec.horizon, spec.d_y, spec.d_x, rng)
        spec.time_varying = True

    sqrt_q = psd_factor(spec.q_matrix, spec.d_x)
    half_r_inv = 0.5 / spec.r_diag
    r_inv_diag = 1.0 / spec.r_diag
    sqrt_r_diag = np.sqrt(spec.r_diag)
    log_norm = -0.5 * (spec.d_y * LOG_2PI + float(np.sum(np.log(spec.r_diag))))

    def prior_sampler(n, rng):
        return rng.standard_normal((n, spec.d_x))

    def transition_sampler(states, t, rng):
        if states.ndim == 1:
            states = states[None, :]
        if sqrt_q is None:
            return states.copy()
        return states + rng.standard_normal(states.shape) @ sqrt_q.T

    def log_likelihood(obs: Observation, states):
        if states.ndim == 1:
            states = states[None, :]
        resid = obs.values - states @ spec.c_at(obs.time_index).T
        return log_norm - (resid * resid) @ half_r_inv

    # per-step gradient matrices, cached so the nudge costs one matmul:
    # grad log g = y (R^-1 C) - x (C^T R^-1 C)
    grad_cache: dict = {}

    def _grad_mats(t: int):
        mats = grad_cache.get(t)
        if mats is None:
            c_t = spec.c_at(t)
            m_t = r_inv_diag[:, None] * c_t
            mats = (m_t, c_t.T @ m_t)
            grad_cache[t] = mats
        return mats

    def loglik_gradient(obs: Observation, states):
        if states.ndim == 1:
            states = states[None, :]
        m_t, s_t = _grad_mats(obs.time_index)
        return obs.values @ m_t - states @ s_t

    def observation_sampler(states, t, rng):
        states = np.atleast_2d(states)
        mean = states @ spec.c_at(t).T
        return mean + sqrt_r_diag * rng.standard_normal((states.shape[0], spec.d_y))

    def transition_mean(states, t):
        return np.atleast_2d(states)

    return StateSpaceModel(
        d_x=spec.d_x,
        d_y=spec.d_y,
        prior_sampler=prior_sampler,
        transition_sampler=transition_sampler,
        log_likelihood=log_likelihood,
        loglik_gradient=loglik_gradient,
        observation_sampler=observation_sampler,
        transition_mean=transition_mean,
        linear_gaussian=spec,
    )
