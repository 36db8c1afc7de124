"""State-space-model abstraction and the ensemble/weight machinery.

Conventions used throughout the library:

- A state is a 1-D float array of length ``d_x``; batches of states are
  stacked row-wise into ``(n, d_x)`` arrays. Model callables are
  vectorized over the leading axis.
- Importance weights live in the log domain. Linear weights are
  materialized only for resampling and posterior-mean estimation.
- All randomness flows through :class:`~nupf.rng.RngStream` /
  numpy ``Generator`` objects passed explicitly; nothing touches global
  RNG state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import AllWeightsZero, NotNormalized

__all__ = [
    "Observation",
    "StateSpaceModel",
    "ParticleEnsemble",
    "normalize_log_weights",
    "effective_sample_size",
    "finite_difference_gradient",
]

Array = np.ndarray


@dataclass(frozen=True)
class Observation:
    """One observation vector together with its 1-based time index."""

    values: Array
    time_index: int

    def __post_init__(self):
        object.__setattr__(self, "values", np.atleast_1d(np.asarray(self.values, dtype=float)))
        if self.time_index < 1:
            raise ValueError(f"time_index must be >= 1, got {self.time_index}")


@dataclass(frozen=True)
class StateSpaceModel:
    """Bundle of samplers and densities defining one state-space model.

    Parameters
    ----------
    d_x, d_y : int
        State and observation dimensions.
    prior_sampler : callable ``(n, rng) -> (n, d_x)``
        Draws ``n`` initial states.
    transition_sampler : callable ``(states, t, rng) -> (n, d_x)``
        Advances a batch of states from time ``t-1`` to time ``t``.
    log_likelihood : callable ``(obs, states) -> (n,)``
        Log of the (possibly unnormalized) observation density, evaluated
        per particle. Returns ``-inf`` only for measure-zero degenerate
        inputs, never NaN.
    loglik_gradient : callable ``(obs, states) -> (n, d_x)``, optional
        Gradient of the *log*-likelihood. Kept separate from
        ``likelihood_gradient`` because the log form stays representable
        when the likelihood itself underflows.
    observation_sampler : callable ``(states, t, rng) -> (n, d_y)``, optional
        Draws observations given states; used for synthetic-data
        simulation.
    transition_mean : callable ``(states, t) -> (n, d_x)``, optional
        Mean of the transition kernel; required by the auxiliary filter.
    linear_gaussian : object, optional
        The :class:`~nupf.models.linear_gaussian.LinearGaussianSpec` this
        model was built from, when applicable. Filters that rely on
        conjugate computations check for it.
    """

    d_x: int
    d_y: int
    prior_sampler: Callable[[int, object], Array]
    transition_sampler: Callable[[Array, int, object], Array]
    log_likelihood: Callable[[Observation, Array], Array]
    loglik_gradient: Optional[Callable[[Observation, Array], Array]] = None
    observation_sampler: Optional[Callable[[Array, int, object], Array]] = None
    transition_mean: Optional[Callable[[Array, int], Array]] = None
    linear_gaussian: Optional[object] = None

    def likelihood_gradient(self, obs: Observation, states: Array) -> Array:
        """Gradient of the likelihood itself: ``g * grad(log g)``, shape (n, d_x)."""
        if self.loglik_gradient is None:
            raise NotImplementedError("model provides no closed-form gradient")
        states = np.atleast_2d(states)
        g = np.exp(self.log_likelihood(obs, states))
        return g[:, None] * self.loglik_gradient(obs, states)


@dataclass
class ParticleEnsemble:
    """N weighted particles. ``log_weights`` sum (in the linear domain) to 1
    when ``normalized`` is set."""

    states: Array
    log_weights: Array
    normalized: bool = False

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:  # N scalar particles
            states = states.reshape(-1, 1)
        self.states = states
        self.log_weights = np.asarray(self.log_weights, dtype=float)
        if states.shape[0] != self.log_weights.shape[0]:
            raise ValueError("states and log_weights disagree on N")
        if states.shape[0] < 1:
            raise ValueError("ensemble needs N >= 1 particles")

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def weights(self) -> Array:
        if not self.normalized:
            raise NotNormalized("materializing linear weights requires normalization")
        return np.exp(self.log_weights)

    @classmethod
    def uniform(cls, states: Array) -> "ParticleEnsemble":
        n = states.shape[0] if states.ndim > 1 else np.atleast_1d(states).shape[0]
        return cls(states, np.full(n, -np.log(n)), normalized=True)


def normalize_log_weights(raw: Array) -> tuple[Array, float]:
    """Normalize log-weights stably via max subtraction.

    Returns ``(normalized log-weights, log_sum)`` with
    ``log_sum = log sum_i exp(raw_i)``.

    Raises
    ------
    AllWeightsZero
        If every entry is ``-inf``. The caller decides the fallback
        (filters reset to uniform weights and flag the step).
    """
    raw = np.asarray(raw, dtype=float)
    if raw.size < 1:
        raise ValueError("need at least one weight")
    m = np.max(raw)
    if not np.isfinite(m):
        if m == -np.inf:
            raise AllWeightsZero("all log-weights are -inf")
        raise FloatingPointError("log-weights contain NaN or +inf")
    shifted = raw - m
    log_sum = m + np.log(np.sum(np.exp(shifted)))
    return raw - log_sum, log_sum


def effective_sample_size(ensemble: ParticleEnsemble) -> float:
    """1 / sum(w_i^2), between 1 and N; equals N iff weights are uniform."""
    if not ensemble.normalized:
        raise NotNormalized("effective_sample_size requires a normalized ensemble")
    return 1.0 / float(np.sum(np.exp(2.0 * ensemble.log_weights)))


def finite_difference_gradient(model: StateSpaceModel, obs: Observation,
                               x: Array, h: float = 1e-5) -> Array:
    """Central finite differences of the likelihood g (not log g).

    Serves as the gradient oracle for models with closed-form gradients
    and as the fallback when none is provided. The returned layout matches
    the per-coordinate column of partial derivatives of g.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float).reshape(-1)
    d = x.size
    eye = np.eye(d)
    points = np.concatenate([x + h * eye, x - h * eye], axis=0)
    g = np.exp(model.log_likelihood(obs, points))
    return (g[:d] - g[d:]) / (2.0 * h)
