"""Exact and approximate Gaussian filters: Kalman, extended Kalman, and
the stochastic ensemble Kalman filter."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .._util import LOG_2PI
from ..core import Observation
from ..errors import SingularInnovation
from ..models.linear_gaussian import LinearGaussianSpec
from ..models.tracking import TrackingSpec, _rss_mean, _rss_mean_position_jacobian

__all__ = ["GaussianBelief", "KalmanResult", "kalman_filter", "EKFModel",
           "ekf_step", "run_ekf", "build_tracking_ekf", "enkf_step", "run_enkf"]

Array = np.ndarray


@dataclass
class GaussianBelief:
    mean: Array
    cov: Array


@dataclass
class KalmanResult:
    means: Array          # (T, d_x) filtered means
    covariances: Array    # (T, d_x, d_x)
    log_evidence_increments: Array  # (T,)

    @property
    def log_evidence(self) -> float:
        return float(np.sum(self.log_evidence_increments))


def _innovation_update(mean, cov, h, r, y):
    s = h @ cov @ h.T + r
    try:
        s_chol = np.linalg.cholesky(s)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation("innovation covariance is singular") from exc
    resid = y - h @ mean
    z = np.linalg.solve(s_chol, resid)
    log_lik = -0.5 * (z @ z + y.size * LOG_2PI) - float(np.sum(np.log(np.diag(s_chol))))
    gain = cov @ h.T @ np.linalg.inv(s)
    new_mean = mean + gain @ resid
    new_cov = cov - gain @ s @ gain.T
    return new_mean, 0.5 * (new_cov + new_cov.T), float(log_lik)


def kalman_filter(spec: LinearGaussianSpec, observations: list[Observation],
                  prior_mean: Optional[Array] = None,
                  prior_cov: Optional[Array] = None) -> KalmanResult:
    """Exact recursions for the linear-Gaussian model (identity transition
    with covariance Q, observation matrices C_t, noise R). The prior
    defaults to N(0, I) to match the particle filters."""
    d = spec.d_x
    mean = np.zeros(d) if prior_mean is None else np.asarray(prior_mean, float)
    cov = np.eye(d) if prior_cov is None else np.asarray(prior_cov, float)
    t_len = len(observations)
    means = np.empty((t_len, d))
    covs = np.empty((t_len, d, d))
    incs = np.empty(t_len)
    for i, obs in enumerate(observations):
        cov = cov + spec.q_matrix
        c_t = spec.c_at(obs.time_index)
        mean, cov, incs[i] = _innovation_update(mean, cov, c_t, spec.r_matrix, obs.values)
        means[i] = mean
        covs[i] = cov
    return KalmanResult(means=means, covariances=covs, log_evidence_increments=incs)


@dataclass(frozen=True)
class EKFModel:
    """Hooks the extended Kalman filter needs: transition mean/Jacobian
    with additive noise Q, observation mean/Jacobian with additive noise R."""

    transition_mean: Callable[[Array], Array]
    transition_jacobian: Callable[[Array], Array]
    q: Array
    observation_mean: Callable[[Array], Array]
    observation_jacobian: Callable[[Array], Array]
    r: Array


def ekf_step(belief: GaussianBelief, model: EKFModel, obs: Observation) -> GaussianBelief:
    """One predict/update cycle with first-order linearization."""
    f_jac = model.transition_jacobian(belief.mean)
    mean_pred = model.transition_mean(belief.mean)
    cov_pred = f_jac @ belief.cov @ f_jac.T + model.q
    h_jac = model.observation_jacobian(mean_pred)
    s = h_jac @ cov_pred @ h_jac.T + model.r
    try:
        gain = cov_pred @ h_jac.T @ np.linalg.inv(s)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation("innovation covariance is singular") from exc
    resid = obs.values - model.observation_mean(mean_pred)
    mean = mean_pred + gain @ resid
    cov = cov_pred - gain @ s @ gain.T
    return GaussianBelief(mean=mean, cov=0.5 * (cov + cov.T))


def run_ekf(model: EKFModel, observations: list[Observation],
            prior_mean: Array, prior_cov: Array) -> Array:
    """Filtered means over an observation sequence, shape (T, d_x)."""
    belief = GaussianBelief(np.asarray(prior_mean, float), np.asarray(prior_cov, float))
    means = np.empty((len(observations), belief.mean.size))
    for i, obs in enumerate(observations):
        belief = ekf_step(belief, model, obs)
        means[i] = belief.mean
    return means


def build_tracking_ekf(spec: TrackingSpec, r_scale: float = 1.0) -> EKFModel:
    """EKF for the RSS tracking scenario under the mismatch-free kinematic
    model. The heavy-tailed sensor noise has no usable variance, so the
    filter assumes unit-scale Gaussian noise; that approximation is the
    point of the comparison."""

    def obs_mean(x):
        return _rss_mean(spec, x[None, :2])[0]

    def obs_jac(x):
        jac = np.zeros((spec.n_sensors, 4))
        jac[:, :2] = _rss_mean_position_jacobian(spec, x[None, :2])[0]
        return jac

    return EKFModel(
        transition_mean=lambda x: spec.a @ x,
        transition_jacobian=lambda x: spec.a,
        q=spec.q,
        observation_mean=obs_mean,
        observation_jacobian=obs_jac,
        r=r_scale * np.eye(spec.n_sensors),
    )


def enkf_step(ensemble: Array, transition_sampler, h: Array, r: Array,
              obs: Observation, rng) -> Array:
    """Stochastic (perturbed-observation) ensemble Kalman step.

    Works with ensemble anomalies, so the d x d state covariance is never
    formed and the update stays cheap in high dimension.
    """
    n = ensemble.shape[0]
    if n < 2:
        raise ValueError("ensemble Kalman filter needs at least 2 members")
    forecast = transition_sampler(ensemble, obs.time_index, rng)
    anom = (forecast - forecast.mean(axis=0)) / np.sqrt(n - 1)
    h_anom = anom @ h.T
    s = h_anom.T @ h_anom + r
    try:
        s_inv = np.linalg.inv(s)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation("innovation covariance is singular") from exc
    gain = anom.T @ h_anom @ s_inv
    r_chol = np.linalg.cholesky(r)
    perturbed = obs.values + rng.standard_normal((n, h.shape[0])) @ r_chol.T
    return forecast + (perturbed - forecast @ h.T) @ gain.T


def run_enkf(model_transition_sampler, h: Array, r: Array,
             observations: list[Observation], initial_ensemble: Array,
             rng) -> Array:
    """Posterior-mean trace of the stochastic EnKF, shape (T, d_x)."""
    ens = np.array(initial_ensemble, copy=True)
    means = np.empty((len(observations), ens.shape[1]))
    for i, obs in enumerate(observations):
        ens = enkf_step(ens, model_transition_sampler, h, r, obs, rng)
        means[i] = ens.mean(axis=0)
    return means
