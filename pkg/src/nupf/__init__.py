"""Sequential Monte Carlo with likelihood-nudged particle filters.

The package provides:

- ``nupf.core`` — state-space-model abstraction, log-domain weight
  machinery, gradient utilities;
- ``nupf.models`` — linear-Gaussian, stochastic Lorenz 63/96, RSS target
  tracking and stochastic-volatility models plus trajectory simulation;
- ``nupf.nudging`` — likelihood-increasing particle moves and selection
  schemes;
- ``nupf.filters`` — bootstrap/nudged/auxiliary/optimal-proposal particle
  filters and Kalman-family baselines;
- ``nupf.inference`` — particle Metropolis-Hastings and the nested
  particle filter for parameter estimation;
- ``nupf.harness`` — seeded batch experiments with CSV output and a CLI.
"""

from .core import (Observation, ParticleEnsemble, StateSpaceModel,
                   effective_sample_size, finite_difference_gradient,
                   normalize_log_weights)
from .rng import FilterRng, RngStream

__version__ = "0.1.0"

__all__ = [
    "Observation", "ParticleEnsemble", "StateSpaceModel",
    "normalize_log_weights", "effective_sample_size", "finite_difference_gradient",
    "RngStream", "FilterRng",
    "__version__",
]
