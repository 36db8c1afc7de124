"""Parameter inference for the stochastic-volatility model.

Two drivers, each parameterized by an inner filter (bootstrap or nudged):

- particle Metropolis-Hastings: a pseudo-marginal random-walk chain whose
  acceptance ratio uses the filter's marginal-likelihood estimate, re-run
  from a fresh substream for every proposal;
- the nested particle filter: a particle system over the parameters where
  each parameter particle carries its own inner state filter, with
  jittering in the parameter space and multinomial resampling of the
  parameter layer.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.stats import beta as beta_dist
from scipy.stats import gamma as gamma_dist

from .core import Observation, StateSpaceModel
from .errors import InsufficientChain, InvalidParam, NonPositivePrice
from .filters.base import FilterState, init_filter, resample_multinomial
from .filters.particle import bpf_step, nupf_step
from .models.stochvol import StochVolSpec, build_stochvol
from .nudging import NudgeOperator, NudgeSelector
from .rng import FilterRng, RngStream

__all__ = [
    "SVParams", "ParamPrior", "JitterKernel", "PMHChain", "NPFState", "NPFOutput",
    "InnerFilterSpec", "ParticleEvidence",
    "log_return_preprocess", "load_price_csv", "bundled_price_series",
    "pmh_run", "write_chain_csv", "acceptance_rate", "autocorrelation",
    "npf_init", "npf_step", "run_npf", "npf_evidence", "sv_model_builder",
]

logger = logging.getLogger(__name__)

Array = np.ndarray

PARAM_NAMES = ("mu", "sigma_v", "phi")


@dataclass(frozen=True)
class SVParams:
    """Unknown parameters of the stochastic-volatility model."""

    mu: float
    sigma_v: float
    phi: float

    def as_array(self) -> Array:
        return np.array([self.mu, self.sigma_v, self.phi])

    @classmethod
    def from_array(cls, theta: Array) -> "SVParams":
        return cls(float(theta[0]), float(theta[1]), float(theta[2]))

    @property
    def in_support(self) -> bool:
        return self.sigma_v > 0 and abs(self.phi) < 1


def sv_model_builder(theta: Array) -> StateSpaceModel:
    p = SVParams.from_array(np.asarray(theta, float))
    return build_stochvol(StochVolSpec(p.mu, p.sigma_v, p.phi))


class ParamPrior:
    """Prior over (mu, sigma_v, phi):
    mu ~ N(0, 1), sigma_v ~ Gamma(shape 2, scale 0.1), phi ~ Beta(120, 2).

    The Beta prior lives on [0, 1] and concentrates most of its mass on
    [0.9, 1], which encodes the usual near-unit-root persistence of
    volatility series.
    """

    def __init__(self, gamma_shape: float = 2.0, gamma_scale: float = 0.1,
                 beta_a: float = 120.0, beta_b: float = 2.0):
        self._gamma = gamma_dist(a=gamma_shape, scale=gamma_scale)
        self._beta = beta_dist(beta_a, beta_b)
        self._gamma_params = (gamma_shape, gamma_scale)
        self._beta_params = (beta_a, beta_b)

    def log_density(self, theta: Array) -> float:
        mu, sigma_v, phi = np.asarray(theta, float)
        if sigma_v <= 0 or not 0.0 < phi < 1.0:
            return -np.inf
        lp = -0.5 * (mu * mu + np.log(2.0 * np.pi))
        lp += self._gamma.logpdf(sigma_v)
        lp += self._beta.logpdf(phi)
        return float(lp)

    def sample(self, rng) -> Array:
        shape, scale = self._gamma_params
        a, b = self._beta_params
        return np.array([rng.standard_normal(),
                         rng.gamma(shape, scale),
                         rng.beta(a, b)])

    @property
    def mean(self) -> Array:
        shape, scale = self._gamma_params
        a, b = self._beta_params
        return np.array([0.0, shape * scale, a / (a + b)])


@dataclass(frozen=True)
class JitterKernel:
    """Independent Gaussian jitter per parameter, truncated to the
    parameter supports. Truncation is exact: out-of-support draws are
    rejected and redrawn."""

    var_mu: float = 1e-3
    var_sigma_v: float = 1e-4
    var_phi: float = 1e-4

    def apply(self, thetas: Array, rng) -> Array:
        out = np.array(thetas, copy=True)
        scales = np.sqrt([self.var_mu, self.var_sigma_v, self.var_phi])
        bounds = ((-np.inf, np.inf), (0.0, np.inf), (-1.0, 1.0))
        for j, (scale, (lo, hi)) in enumerate(zip(scales, bounds)):
            if scale == 0.0:
                continue
            col = out[:, j] + scale * rng.standard_normal(out.shape[0])
            bad = (col <= lo) | (col >= hi)
            while np.any(bad):
                col[bad] = out[bad, j] + scale * rng.standard_normal(int(bad.sum()))
                bad = (col <= lo) | (col >= hi)
            out[:, j] = col
        return out


# ---------------------------------------------------------------------------
# data handling


def log_return_preprocess(prices: Sequence[float]) -> Array:
    """Scaled log-returns y_t = 100 log(s_t / s_{t-1})."""
    prices = np.asarray(prices, dtype=float)
    if prices.size < 2:
        raise ValueError("need at least two prices")
    if np.any(prices <= 0):
        raise NonPositivePrice("prices must be strictly positive")
    return 100.0 * np.diff(np.log(prices))


def load_price_csv(path: Union[str, Path]) -> tuple[list[str], Array]:
    """Read a ``date,price`` CSV (ISO dates, positive decimal prices)."""
    dates, prices = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["date", "price"]:
            raise ValueError(f"expected header 'date,price', got {header}")
        for row in reader:
            dates.append(row[0])
            prices.append(float(row[1]))
    prices = np.asarray(prices)
    if np.any(prices <= 0):
        raise NonPositivePrice("price series contains non-positive entries")
    return dates, prices


def bundled_price_series() -> tuple[list[str], Array]:
    """The synthetic exchange-rate series shipped with the package."""
    from importlib.resources import files

    path = files("nupf").joinpath("data/eurusd_synthetic.csv")
    return load_price_csv(str(path))


def observations_from_returns(returns: Array) -> list[Observation]:
    return [Observation(values=np.atleast_1d(y), time_index=t + 1)
            for t, y in enumerate(np.asarray(returns, float))]


# ---------------------------------------------------------------------------
# inner-filter evidence estimators


@dataclass(frozen=True)
class InnerFilterSpec:
    """Which filter powers the likelihood estimate.

    ``evidence_mode`` controls whether a nudged filter reports its
    marginal from the weights after the nudge (the filter's own estimate)
    or from the un-nudged particles.
    """

    kind: str  # "bpf" | "nupf"
    n_particles: int
    selector: Optional[NudgeSelector] = None
    operator: Optional[NudgeOperator] = None
    evidence_mode: str = "post"

    def __post_init__(self):
        if self.kind not in ("bpf", "nupf"):
            raise ValueError(f"unknown inner filter kind {self.kind!r}")
        if self.kind == "nupf" and (self.selector is None or self.operator is None):
            raise ValueError("nudged inner filter needs a selector and an operator")
        if self.evidence_mode not in ("post", "pre"):
            raise ValueError("evidence_mode must be 'post' or 'pre'")

    def make_step(self) -> Callable:
        if self.kind == "bpf":
            return bpf_step
        return partial(nupf_step, selector=self.selector, operator=self.operator,
                       record_prenudge=self.evidence_mode == "pre")


class ParticleEvidence:
    """Log-marginal-likelihood estimator backed by a particle filter.

    Parameters for which the model cannot be built (support violations)
    yield ``-inf`` so that a pseudo-marginal chain auto-rejects them.
    """

    def __init__(self, model_builder: Callable[[Array], StateSpaceModel],
                 inner: InnerFilterSpec):
        self.model_builder = model_builder
        self.inner = inner

    def estimate(self, theta: Array, observations: list[Observation],
                 stream: RngStream) -> float:
        try:
            model = self.model_builder(theta)
        except InvalidParam:
            return -np.inf
        step = self.inner.make_step()
        rng = FilterRng.from_stream(stream)
        state = init_filter(model, self.inner.n_particles, rng)
        total = 0.0
        use_pre = self.inner.kind == "nupf" and self.inner.evidence_mode == "pre"
        for obs in observations:
            state = step(state, model, obs, rng)
            total += state.last_prenudge_increment if use_pre \
                else state.last_log_evidence_increment
        return total


# ---------------------------------------------------------------------------
# particle Metropolis-Hastings


@dataclass
class PMHChain:
    """Random-walk pseudo-marginal chain output. ``samples`` includes the
    initial state, so it has one more row than ``accepted``."""

    samples: Array        # (iterations + 1, 3)
    log_marginals: Array  # (iterations + 1,)
    accepted: Array       # (iterations,) bool


def pmh_run(observations: list[Observation], prior, proposal_cov,
            inner, iterations: int, stream: RngStream,
            init: Optional[Array] = None) -> PMHChain:
    """Pseudo-marginal Metropolis-Hastings over the model parameters.

    ``inner`` must expose ``estimate(theta, observations, stream)``; the
    estimate is recomputed from a fresh substream for every proposed
    parameter and retained for the current state (no recycling).
    Proposals outside the prior support are rejected without running the
    filter. A degenerate inner run (estimate ``-inf``) also rejects.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    proposal_cov = np.atleast_1d(np.asarray(proposal_cov, dtype=float))
    chain_gen = stream.child(0).generator
    theta = np.asarray(init, float) if init is not None else prior.sample(chain_gen)
    p = theta.size
    scale = np.linalg.cholesky(np.diag(proposal_cov) if proposal_cov.ndim == 1
                               else proposal_cov)

    log_prior = prior.log_density(theta)
    if not np.isfinite(log_prior):
        raise ValueError("initial parameters have zero prior density")
    log_lik = inner.estimate(theta, observations, stream.child(1))

    samples = np.empty((iterations + 1, p))
    log_marginals = np.empty(iterations + 1)
    accepted = np.zeros(iterations, dtype=bool)
    samples[0] = theta
    log_marginals[0] = log_lik

    for it in range(1, iterations + 1):
        proposal = theta + scale @ chain_gen.standard_normal(p)
        prop_log_prior = prior.log_density(proposal)
        if np.isfinite(prop_log_prior):
            prop_log_lik = inner.estimate(proposal, observations, stream.child(1 + it))
            if not np.isfinite(prop_log_lik):
                logger.warning("degenerate inner filter at iteration %d; rejecting", it)
            log_alpha = (prop_log_lik + prop_log_prior) - (log_lik + log_prior)
            if np.log(chain_gen.random()) < log_alpha:
                theta, log_lik, log_prior = proposal, prop_log_lik, prop_log_prior
                accepted[it - 1] = True
        samples[it] = theta
        log_marginals[it] = log_lik
    return PMHChain(samples=samples, log_marginals=log_marginals, accepted=accepted)


def write_chain_csv(chain: PMHChain, path: Union[str, Path]) -> None:
    """Chain CSV with columns ``iter,mu,sigma_v,phi,log_marginal,accepted``;
    row 0 is the initial state (flagged accepted)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "mu", "sigma_v", "phi", "log_marginal", "accepted"])
        for it in range(chain.samples.shape[0]):
            acc = 1 if it == 0 else int(chain.accepted[it - 1])
            writer.writerow([it, *(repr(v) for v in chain.samples[it]),
                             repr(float(chain.log_marginals[it])), acc])


def acceptance_rate(chain: PMHChain, window: Optional[int] = None) -> float:
    """Mean of the accepted flags, over the last ``window`` iterations or
    the whole chain."""
    flags = chain.accepted
    if flags.size == 0:
        raise InsufficientChain("chain has no iterations")
    if window is not None:
        if not 1 <= window <= flags.size:
            raise InsufficientChain(f"window {window} outside chain length {flags.size}")
        flags = flags[-window:]
    return float(np.mean(flags))


def autocorrelation(chain: PMHChain, parameter: Union[int, str], max_lag: int) -> Array:
    """Biased-normalization autocorrelation of one parameter coordinate,
    lags 0..max_lag."""
    j = PARAM_NAMES.index(parameter) if isinstance(parameter, str) else int(parameter)
    series = chain.samples[:, j]
    t_len = series.size
    if t_len <= max_lag:
        raise InsufficientChain(f"chain length {t_len} too short for max_lag {max_lag}")
    centered = series - series.mean()
    c0 = float(np.dot(centered, centered)) / t_len
    if c0 == 0.0:
        return np.concatenate([[1.0], np.zeros(max_lag)])
    acf = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        acf[k] = np.dot(centered[:t_len - k], centered[k:]) / t_len / c0
    return acf


# ---------------------------------------------------------------------------
# nested particle filter


@dataclass
class NPFState:
    """K parameter particles, each paired with an inner state filter."""

    thetas: Array                    # (K, 3)
    inner_states: list[FilterState]
    time: int = 0
    cumulative_log_evidence: float = 0.0
    last_increment: float = 0.0


@dataclass
class NPFOutput:
    evidence_increments: Array   # (T,)
    theta_means: Array           # (T, 3)

    @property
    def log_evidence(self) -> float:
        return float(np.sum(self.evidence_increments))


def npf_init(n_theta: int, prior, inner: InnerFilterSpec,
             model_builder: Callable[[Array], StateSpaceModel],
             rng: FilterRng) -> NPFState:
    thetas = np.stack([prior.sample(rng.propagate) for _ in range(n_theta)])
    inner_states = [init_filter(model_builder(thetas[i]), inner.n_particles, rng)
                    for i in range(n_theta)]
    return NPFState(thetas=thetas, inner_states=inner_states)


def npf_step(state: NPFState, obs: Observation, jitter: JitterKernel,
             inner: InnerFilterSpec, model_builder: Callable[[Array], StateSpaceModel],
             rng: FilterRng) -> NPFState:
    """One sweep of the nested filter.

    Jitter each parameter particle inside its support, advance its inner
    filter by one observation, weight the parameter layer by the inner
    marginal-likelihood increments, and resample it (multinomial),
    carrying the inner ensembles along.

    The evidence increment log[(1/(KN)) sum_ij g(x^{ij})] is accumulated
    from the pre-nudge particles when the inner filters nudge, so nudged
    and plain runs report comparable evidence.
    """
    k = state.thetas.shape[0]
    thetas = jitter.apply(state.thetas, rng.nudge)
    step = inner.make_step()
    post = np.empty(k)
    pre = np.empty(k)
    new_states: list[FilterState] = []
    for i in range(k):
        st = step(state.inner_states[i], model_builder(thetas[i]), obs, rng)
        new_states.append(st)
        post[i] = st.last_log_evidence_increment
        pre[i] = st.last_prenudge_increment if st.last_prenudge_increment is not None \
            else st.last_log_evidence_increment

    increment = _log_mean_exp(pre)
    finite = np.isfinite(post)
    if not np.any(finite):
        logger.warning("all parameter particles degenerate; uniform outer weights")
        weights = np.full(k, 1.0 / k)
    else:
        shifted = np.exp(post - np.max(post[finite]))
        shifted[~finite] = 0.0
        weights = shifted / shifted.sum()
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.resample.random(k), side="right")
    return NPFState(
        thetas=thetas[idx],
        inner_states=[new_states[i] for i in idx],
        time=state.time + 1,
        cumulative_log_evidence=state.cumulative_log_evidence + increment,
        last_increment=increment,
    )


def _log_mean_exp(values: Array) -> float:
    m = np.max(values)
    if not np.isfinite(m):
        return -np.inf
    return float(m + np.log(np.mean(np.exp(values - m))))


def run_npf(observations: list[Observation], n_theta: int, prior,
            jitter: JitterKernel, inner: InnerFilterSpec,
            model_builder: Callable[[Array], StateSpaceModel],
            stream: RngStream) -> NPFOutput:
    """Drive the nested filter over a full observation sequence."""
    state = npf_init(n_theta, prior, inner, model_builder,
                     FilterRng.from_stream(stream.child(0)))
    t_len = len(observations)
    incs = np.empty(t_len)
    theta_means = np.empty((t_len, state.thetas.shape[1]))
    for t, obs in enumerate(observations):
        rng = FilterRng.from_stream(stream.child(t + 1))
        state = npf_step(state, obs, jitter, inner, model_builder, rng)
        incs[t] = state.last_increment
        theta_means[t] = state.thetas.mean(axis=0)
    return NPFOutput(evidence_increments=incs, theta_means=theta_means)


def npf_evidence(evidence_increments: Array) -> float:
    """Total log-evidence: the log of the product over time of
    double-averaged likelihoods."""
    return float(np.sum(evidence_increments))
