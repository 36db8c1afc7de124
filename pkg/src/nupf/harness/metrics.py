"""Error metrics for experiment summaries."""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..errors import ZeroDenominator

__all__ = ["nmse_vs_reference"]

Array = np.ndarray


def nmse_vs_reference(estimates: Array, reference: Array,
                      denominator_trajectory: Optional[Array] = None) -> float:
    """Normalized mean squared error of a trajectory of estimates.

    ``sum_t ||ref_t - est_t||^2 / sum_t ||den_t||^2`` where the
    denominator trajectory is the ground-truth signal; it defaults to
    ``reference`` (the common case where the reference *is* the ground
    truth). Passing exact posterior means as ``reference`` with the ground
    truth as the denominator gives the posterior-mean-referenced variant.
    """
    est = np.atleast_2d(np.asarray(estimates, dtype=float))
    ref = np.atleast_2d(np.asarray(reference, dtype=float))
    if est.shape != ref.shape:
        raise ValueError(f"estimates {est.shape} and reference {ref.shape} disagree")
    den = ref if denominator_trajectory is None \
        else np.atleast_2d(np.asarray(denominator_trajectory, dtype=float))
    denom = float(np.sum(den * den))
    if denom == 0.0:
        raise ZeroDenominator("denominator trajectory has zero norm")
    return float(np.sum((ref - est) ** 2)) / denom
