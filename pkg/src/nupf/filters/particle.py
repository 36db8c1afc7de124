"""Particle-filter step functions: bootstrap, nudged, properly-weighted
nudged, locally-optimal proposal, and auxiliary variants."""

from __future__ import annotations

from functools import partial
from typing import Optional, Union

import numpy as np
from scipy.linalg import solve_triangular

from .._util import LOG_2PI, psd_factor
from ..core import Observation, StateSpaceModel, normalize_log_weights
from ..errors import (AllWeightsZero, BudgetExceedsN, NonFiniteGradient,
                      UnsupportedModel)
from ..nudging import (GradientNudge, NudgeOperator, NudgeSelector,
                       VelocityCouplingNudge, select_indices)
from ..rng import FilterRng, RngStream
from .base import (FilterOutput, FilterState, run_filter, step_diagnostics,
                   weight_ensemble)

__all__ = [
    "bpf_step", "nupf_step", "nupf_pw_step", "optimal_pf_step", "apf_step",
    "implicit_kernel_sample",
    "run_bpf", "run_nupf", "run_nupf_pw", "run_optimal_pf", "run_apf",
]

Array = np.ndarray


def bpf_step(state: FilterState, model: StateSpaceModel, obs: Observation,
             rng: FilterRng) -> FilterState:
    """Propagate through the transition kernel, weight by the likelihood,
    record the evidence increment, resample."""
    t = state.time + 1
    prop = model.transition_sampler(state.ensemble.states, t, rng.propagate)
    log_g = model.log_likelihood(obs, prop)
    weighted, inc, degen = weight_ensemble(prop, log_g)
    return step_diagnostics(state, weighted, inc, degen, rng)


def _prenudge_increment(log_g: Array) -> float:
    try:
        _, log_sum = normalize_log_weights(log_g)
        return float(log_sum - np.log(log_g.size))
    except AllWeightsZero:
        return -np.inf


def nupf_step(state: FilterState, model: StateSpaceModel, obs: Observation,
              rng: FilterRng, selector: NudgeSelector, operator: NudgeOperator,
              record_prenudge: bool = False) -> FilterState:
    """Bootstrap step with a nudging stage between propagation and
    weighting.

    Selected particles are pushed by the operator; the rest are untouched.
    Weights are computed with the plain likelihood, exactly as in the
    bootstrap filter, with no proposal correction. With
    ``record_prenudge`` the evidence increment of the un-nudged ensemble
    is recorded too (the post-nudge increment always drives
    ``cumulative_log_evidence``).
    """
    t = state.time + 1
    prop = model.transition_sampler(state.ensemble.states, t, rng.propagate)
    n = prop.shape[0]
    pre = _prenudge_increment(model.log_likelihood(obs, prop)) if record_prenudge else None

    if type(operator) is GradientNudge and operator.gamma != 0.0 \
            and model.loglik_gradient is not None:
        # Fast path for the ubiquitous gradient nudge. Rows of `prop` are
        # i.i.d. given the previous ensemble (multinomial resampling with
        # unsorted uniforms), i.e. exchangeable, so nudging the leading
        # block of rows has exactly the law of nudging a uniformly drawn
        # index set; the slice saves the index draw and the gather and
        # scatter copies. A NaN gradient surfaces through the weight
        # normalization below at no extra per-step cost.
        if selector.m > n:
            raise BudgetExceedsN(f"budget M={selector.m} exceeds ensemble size N={n}")
        if selector.scheme == "batch":
            count = selector.m
        else:
            count = int(rng.nudge.binomial(n, selector.m / n)) if selector.m else 0
        if count:
            sub = prop[:count]
            grad = model.loglik_gradient(obs, sub) if operator.use_log \
                else model.likelihood_gradient(obs, sub)
            np.multiply(grad, operator.gamma, out=grad)
            sub += grad
    else:
        idx = select_indices(selector, n, rng.nudge)
        count = int(idx.size)
        if count:
            # prop is step-local, so the nudge writes into it directly
            prev = state.ensemble.states[idx] \
                if isinstance(operator, VelocityCouplingNudge) else None
            prop[idx] = operator.apply(prop[idx], model, obs, rng.nudge,
                                       prev_states=prev)

    log_g = model.log_likelihood(obs, prop)
    try:
        weighted, inc, degen = weight_ensemble(prop, log_g)
    except FloatingPointError as exc:
        raise NonFiniteGradient("nudged states produced non-finite weights") from exc
    return step_diagnostics(state, weighted, inc, degen, rng,
                            nudge_count=count, prenudge_increment=pre)


def implicit_kernel_sample(states: Array, model: StateSpaceModel, obs: Observation,
                           eps_m: float, operator: NudgeOperator, rng) -> Array:
    """Draw from the observation-driven kernel: propagate through the
    model kernel, then nudge each particle independently with probability
    ``eps_m``.

    A bootstrap filter whose transitions sample this kernel is the same
    algorithm as the independently-nudged filter on the original model.
    """
    if not 0.0 <= eps_m <= 1.0:
        raise ValueError("eps_m must lie in [0, 1]")
    t = obs.time_index
    prop = model.transition_sampler(np.atleast_2d(states), t, rng)
    if eps_m == 0.0:
        return prop
    mask = rng.random(prop.shape[0]) < eps_m
    if not np.any(mask):
        return prop
    out = prop.copy()
    out[mask] = operator.apply(prop[mask], model, obs, rng)
    return out


def _require_lg(model: StateSpaceModel):
    spec = model.linear_gaussian
    if spec is None:
        raise UnsupportedModel("this filter needs a linear-Gaussian model")
    return spec


def _mvn_logpdf(x: Array, mean: Array, chol: Array) -> Array:
    """N(x; mean, L L^T) log-density for row batches."""
    z = solve_triangular(chol, (x - mean).T, lower=True).T
    half_logdet = float(np.sum(np.log(np.diag(chol))))
    return -0.5 * np.sum(z * z, axis=1) - half_logdet - 0.5 * x.shape[1] * LOG_2PI


def optimal_pf_step(state: FilterState, model: StateSpaceModel, obs: Observation,
                    rng: FilterRng) -> FilterState:
    """Linear-Gaussian filter with the locally optimal proposal.

    Samples x_t from the conjugate posterior given (x_{t-1}, y_t) and
    weights by the predictive density of y_t given x_{t-1}.
    """
    spec = _require_lg(model)
    t = state.time + 1
    c = spec.c_at(t)
    q, r = spec.q_matrix, spec.r_matrix
    x_prev = state.ensemble.states

    s = c @ q @ c.T + r                       # predictive innovation covariance
    s_chol = np.linalg.cholesky(s)
    gain = q @ c.T @ np.linalg.inv(s)
    post_cov = q - gain @ c @ q
    post_factor = psd_factor(post_cov, spec.d_x)

    pred_mean = x_prev @ c.T                  # C x_{t-1}, shape (n, d_y)
    log_w = _mvn_logpdf(np.broadcast_to(obs.values, pred_mean.shape), pred_mean, s_chol)

    post_mean = x_prev + (obs.values - pred_mean) @ gain.T
    if post_factor is None:
        prop = post_mean
    else:
        prop = post_mean + rng.propagate.standard_normal(x_prev.shape) @ post_factor.T

    weighted, inc, degen = weight_ensemble(prop, log_w)
    return step_diagnostics(state, weighted, inc, degen, rng)


def nupf_pw_step(state: FilterState, model: StateSpaceModel, obs: Observation,
                 rng: FilterRng, gamma: float, eps_n: float) -> FilterState:
    """Nudged filter with proper importance weights (linear-Gaussian only).

    Each particle is nudged with probability ``eps_n``; the proposal is
    then the two-component mixture of the transition kernel and its
    pushforward under the log-likelihood gradient step, which stays
    Gaussian because that step is affine. Weights carry the full
    likelihood x transition / proposal correction, so the evidence
    estimate is unbiased.
    """
    spec = _require_lg(model)
    t = state.time + 1
    c = spec.c_at(t)
    q, r = spec.q_matrix, spec.r_matrix
    x_prev = state.ensemble.states
    n = x_prev.shape[0]

    r_inv = np.linalg.inv(r)
    a_op = np.eye(spec.d_x) - gamma * (c.T @ r_inv @ c)   # x -> A x + b nudge map
    b_op = gamma * (c.T @ r_inv @ obs.values)

    prop = model.transition_sampler(x_prev, t, rng.propagate)
    nudged_mask = rng.nudge.random(n) < eps_n
    prop = prop.copy()
    prop[nudged_mask] = prop[nudged_mask] @ a_op.T + b_op

    q_chol = psd_factor(q, spec.d_x)
    if q_chol is None:
        raise UnsupportedModel("proper-weight mixture needs a nonsingular Q")
    nudged_cov_chol = np.linalg.cholesky(a_op @ q @ a_op.T)

    log_tau = _mvn_logpdf(prop, x_prev, q_chol)
    log_bar = _mvn_logpdf(prop, x_prev @ a_op.T + b_op, nudged_cov_chol)
    if eps_n <= 0.0:
        log_mix = log_tau
    elif eps_n >= 1.0:
        log_mix = log_bar
    else:
        stacked = np.stack([np.log1p(-eps_n) + log_tau, np.log(eps_n) + log_bar])
        m = np.max(stacked, axis=0)
        log_mix = m + np.log(np.sum(np.exp(stacked - m), axis=0))

    log_w = model.log_likelihood(obs, prop) + log_tau - log_mix
    weighted, inc, degen = weight_ensemble(prop, log_w)
    return step_diagnostics(state, weighted, inc, degen, rng,
                            nudge_count=int(np.count_nonzero(nudged_mask)))


def apf_step(state: FilterState, model: StateSpaceModel, obs: Observation,
             rng: FilterRng) -> FilterState:
    """Auxiliary filter with likelihood-at-transition-mean first-stage
    weights."""
    if model.transition_mean is None:
        raise UnsupportedModel("auxiliary filter needs a transition mean")
    t = state.time + 1
    x_prev = state.ensemble.states
    n = x_prev.shape[0]

    mu = model.transition_mean(x_prev, t)
    log_lam = model.log_likelihood(obs, mu)
    try:
        lam_normed, lam_sum = normalize_log_weights(log_lam)
        first_stage_ok = True
    except AllWeightsZero:
        lam_normed = np.full(n, -np.log(n))
        lam_sum = -np.inf
        first_stage_ok = False
    cdf = np.cumsum(np.exp(lam_normed))
    cdf[-1] = 1.0
    ancestors = np.searchsorted(cdf, rng.resample.random(n), side="right")

    prop = model.transition_sampler(x_prev[ancestors], t, rng.propagate)
    log_ratio = model.log_likelihood(obs, prop)
    if first_stage_ok:
        log_ratio = log_ratio - log_lam[ancestors]
    weighted, ratio_inc, degen = weight_ensemble(prop, log_ratio)
    inc = float(lam_sum - np.log(n)) + ratio_inc
    return step_diagnostics(state, weighted, inc, degen or not first_stage_ok, rng)


# ---------------------------------------------------------------------------
# convenience runners


def run_bpf(model, observations, n_particles, stream: RngStream) -> FilterOutput:
    return run_filter(bpf_step, model, observations, n_particles, stream)


def run_nupf(model, observations, n_particles, selector, operator,
             stream: RngStream, record_prenudge: bool = False) -> FilterOutput:
    step = partial(nupf_step, selector=selector, operator=operator,
                   record_prenudge=record_prenudge)
    return run_filter(step, model, observations, n_particles, stream)


def run_nupf_pw(model, observations, n_particles, gamma, stream: RngStream,
                eps_n: Optional[float] = None) -> FilterOutput:
    if eps_n is None:
        eps_n = 1.0 / np.sqrt(n_particles)
    step = partial(nupf_pw_step, gamma=gamma, eps_n=eps_n)
    return run_filter(step, model, observations, n_particles, stream)


def run_optimal_pf(model, observations, n_particles, stream: RngStream) -> FilterOutput:
    return run_filter(optimal_pf_step, model, observations, n_particles, stream)


def run_apf(model, observations, n_particles, stream: RngStream) -> FilterOutput:
    return run_filter(apf_step, model, observations, n_particles, stream)
