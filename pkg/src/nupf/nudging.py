"""Nudging operators and particle-selection schemes.

A nudging operator is a map on the state space that does not decrease the
likelihood of the particle it is applied to. Operators here are vectorized
over a batch of selected particles. Selection schemes pick which particles
get nudged: ``batch`` draws exactly M distinct indices, ``independent``
includes each index with probability M/N (so E[|selection|] = M).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Union

import numpy as np

from ._util import psd_factor
from .core import Observation, StateSpaceModel, finite_difference_gradient
from .errors import BudgetExceedsN, NonFiniteGradient

__all__ = [
    "NudgeSelector",
    "GradientNudge",
    "RandomSearchNudge",
    "ThresholdedGradientNudge",
    "VelocityCouplingNudge",
    "NudgeOperator",
    "select_indices",
    "nudge_gradient",
    "nudge_random_search",
    "nudge_thresholded",
    "nudge_velocity_coupling",
    "RateGuard",
    "validate_rate_guard",
    "nudge_to_config",
    "nudge_from_config",
]

logger = logging.getLogger(__name__)

Array = np.ndarray


@dataclass(frozen=True)
class NudgeSelector:
    """Index-selection scheme with count budget M."""

    scheme: str  # "batch" | "independent"
    m: int

    def __post_init__(self):
        if self.scheme not in ("batch", "independent"):
            raise ValueError(f"unknown selection scheme {self.scheme!r}")
        if self.m < 0:
            raise BudgetExceedsN(f"budget M must be >= 0, got {self.m}")


def select_indices(selector: NudgeSelector, n: int, rng) -> Array:
    """Pick the indices to nudge out of ``[0, n)``.

    ``batch`` returns exactly M distinct indices; ``independent`` includes
    each index i.i.d. with probability M/n. M = 0 disables nudging.
    """
    m = selector.m
    if m > n:
        raise BudgetExceedsN(f"budget M={m} exceeds ensemble size N={n}")
    if m == 0:
        return np.empty(0, dtype=np.intp)
    if selector.scheme == "batch":
        return rng.permutation(n)[:m]
    return np.nonzero(rng.random(n) < m / n)[0]


def _gradient(model: StateSpaceModel, obs: Observation, states: Array,
              use_log: bool) -> Array:
    if use_log:
        if model.loglik_gradient is not None:
            return model.loglik_gradient(obs, states)
        g = np.exp(model.log_likelihood(obs, states))
        grad = np.stack([finite_difference_gradient(model, obs, x) for x in states])
        return grad / np.where(g > 0, g, np.inf)[:, None]
    if model.loglik_gradient is not None:
        return model.likelihood_gradient(obs, states)
    return np.stack([finite_difference_gradient(model, obs, x) for x in states])


def nudge_gradient(states: Array, model: StateSpaceModel, obs: Observation,
                   gamma: float, use_log: bool = False) -> Array:
    """One gradient step on g (or on log g when ``use_log``).

    Increases the likelihood only for sufficiently small step sizes; that
    property is tested, not enforced, for this operator.
    """
    states = np.atleast_2d(states)
    if gamma == 0.0:
        return states
    out = states + gamma * _gradient(model, obs, states, use_log)
    if not np.isfinite(out).all():
        raise NonFiniteGradient("likelihood gradient has NaN/Inf entries")
    return out


def nudge_random_search(states: Array, model: StateSpaceModel, obs: Observation,
                        cov: Union[float, Array], max_tries: int, rng) -> Array:
    """Accept the first Gaussian perturbation that strictly improves g.

    Particles for which no improving perturbation is found within
    ``max_tries`` are returned unchanged, so g never decreases. The
    unbounded retry loop of the plain scheme would never terminate at a
    strict maximum of g; the cap restores liveness.
    """
    if max_tries < 1:
        raise ValueError("max_tries must be >= 1")
    states = np.atleast_2d(states).copy()
    m, d = states.shape
    scale = psd_factor(cov, d)
    if scale is None:  # zero covariance: every perturbation is the identity
        return states
    cur_ll = model.log_likelihood(obs, states)
    active = np.arange(m)
    for _ in range(max_tries):
        if active.size == 0:
            break
        eta = rng.standard_normal((active.size, d)) @ scale.T
        cand = states[active] + eta
        cand_ll = model.log_likelihood(obs, cand)
        better = cand_ll > cur_ll[active]
        hit = active[better]
        states[hit] = cand[better]
        cur_ll[hit] = cand_ll[better]
        active = active[~better]
    return states


def nudge_thresholded(states: Array, model: StateSpaceModel, obs: Observation,
                      gamma: float, threshold: float) -> Array:
    """Log-gradient step taken only where the slope is steep enough.

    A particle moves to ``x + gamma * grad(log g)(x)`` when
    ``||grad(log g)(x)||_2 >= threshold`` and stays put otherwise. Moves
    that would decrease the likelihood are reverted, which keeps the
    operator a valid nudge for any step size; for
    ``gamma <= 1 / L`` (L the Lipschitz constant of grad log g) the
    reversion provably never triggers.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    states = np.atleast_2d(states)
    grad = _gradient(model, obs, states, use_log=True)
    if not np.isfinite(grad).all():
        raise NonFiniteGradient("likelihood gradient has NaN/Inf entries")
    norms = np.linalg.norm(grad, axis=1)
    move = norms >= threshold
    if not np.any(move):
        return states.copy()
    out = states.copy()
    stepped = states[move] + gamma * grad[move]
    before = model.log_likelihood(obs, states[move])
    after = model.log_likelihood(obs, stepped)
    ok = after >= before
    rows = np.nonzero(move)[0][ok]
    out[rows] = stepped[ok]
    return out


def nudge_velocity_coupling(positions_before: Array, positions_after: Array,
                            kappa: float) -> Array:
    """Velocities implied by a position change over one kinematic step."""
    before = np.atleast_2d(positions_before)
    after = np.atleast_2d(positions_after)
    return (after - before) / kappa


@dataclass(frozen=True)
class GradientNudge:
    gamma: float
    use_log: bool = False

    def apply(self, states, model, obs, rng, prev_states=None):
        return nudge_gradient(states, model, obs, self.gamma, self.use_log)


@dataclass(frozen=True)
class RandomSearchNudge:
    cov: Union[float, Array]
    max_tries: int = 50

    def apply(self, states, model, obs, rng, prev_states=None):
        return nudge_random_search(states, model, obs, self.cov, self.max_tries, rng)


@dataclass(frozen=True)
class ThresholdedGradientNudge:
    gamma: float
    threshold: float

    def apply(self, states, model, obs, rng, prev_states=None):
        return nudge_thresholded(states, model, obs, self.gamma, self.threshold)


@dataclass(frozen=True)
class VelocityCouplingNudge:
    """Wraps another operator for states laid out as (r1, r2, v1, v2).

    After the inner nudge moves the position block, the velocity block is
    overwritten with the finite difference of positions across the epoch,
    scaled by 1/kappa. Requires the pre-propagation states of the same
    particles.
    """

    inner: "NudgeOperator"
    kappa: float

    def apply(self, states, model, obs, rng, prev_states=None):
        if prev_states is None:
            raise ValueError("velocity coupling requires previous-epoch states")
        nudged = self.inner.apply(states, model, obs, rng, prev_states)
        out = np.array(nudged, copy=True)
        out[:, 2:4] = nudge_velocity_coupling(prev_states[:, :2], nudged[:, :2], self.kappa)
        return out


NudgeOperator = Union[GradientNudge, RandomSearchNudge, ThresholdedGradientNudge,
                      VelocityCouplingNudge]


@dataclass(frozen=True)
class RateGuard:
    """Error-rate guideline for the nudged filter: M <= sqrt(N), and
    gamma * M <= sqrt(N) when gradient nudging."""

    n: int
    m: int
    gamma: Optional[float] = None


def validate_rate_guard(guard: RateGuard) -> str:
    """Return "ok" when the convergence-rate conditions hold, else log and
    return "warning". Violations are deliberate in some experiments, so
    they never fail the run."""
    root = np.sqrt(guard.n)
    if guard.m > root:
        logger.warning("nudge budget M=%d exceeds sqrt(N)=%.2f", guard.m, root)
        return "warning"
    if guard.gamma is not None and guard.gamma * guard.m > root:
        logger.warning("gamma*M=%.3f exceeds sqrt(N)=%.2f", guard.gamma * guard.m, root)
        return "warning"
    return "ok"


def nudge_to_config(selector: NudgeSelector, operator: NudgeOperator) -> dict:
    """Flatten a selection scheme and operator to config keys."""
    cfg: dict = {"scheme": selector.scheme, "m": selector.m}
    op = operator.inner if isinstance(operator, VelocityCouplingNudge) else operator
    if isinstance(op, GradientNudge):
        cfg.update({"operator.kind": "gradient", "operator.gamma": op.gamma,
                    "operator.use_log": op.use_log})
    elif isinstance(op, RandomSearchNudge):
        if not np.isscalar(op.cov):
            raise ValueError("only scalar covariance scales are serializable")
        cfg.update({"operator.kind": "random_search", "operator.cov_scale": float(op.cov),
                    "operator.max_tries": op.max_tries})
    elif isinstance(op, ThresholdedGradientNudge):
        cfg.update({"operator.kind": "thresholded_gradient", "operator.gamma": op.gamma,
                    "operator.threshold": op.threshold})
    else:
        raise ValueError(f"cannot serialize operator {op!r}")
    return cfg


def nudge_from_config(cfg: Mapping[str, object]) -> tuple[NudgeSelector, NudgeOperator]:
    """Inverse of :func:`nudge_to_config`."""
    selector = NudgeSelector(str(cfg["scheme"]), int(cfg["m"]))
    kind = str(cfg["operator.kind"])
    if kind == "gradient":
        op: NudgeOperator = GradientNudge(float(cfg["operator.gamma"]),
                                          bool(cfg.get("operator.use_log", False)))
    elif kind == "random_search":
        op = RandomSearchNudge(float(cfg["operator.cov_scale"]),
                               int(cfg.get("operator.max_tries", 50)))
    elif kind == "thresholded_gradient":
        op = ThresholdedGradientNudge(float(cfg["operator.gamma"]),
                                      float(cfg["operator.threshold"]))
    else:
        raise ValueError(f"unknown operator kind {kind!r}")
    return selector, op
