"""Small internal numerics helpers."""

from __future__ import annotations

from typing import Optional, Union

import numpy as np

Array = np.ndarray

LOG_2PI = float(np.log(2.0 * np.pi))


def psd_factor(cov: Union[float, Array], d: int) -> Optional[Array]:
    """Left factor S with S @ S.T = C for a PSD covariance; None when C = 0.

    Scalars are interpreted as C = cov * I_d. Falls back to an eigenvalue
    square root when the Cholesky factorization fails on a singular C.
    """
    if np.isscalar(cov):
        c = float(cov)
        if c < 0:
            raise ValueError("covariance scale must be >= 0")
        if c == 0:
            return None
        return np.sqrt(c) * np.eye(d)
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (d, d):
        raise ValueError(f"covariance must be {d}x{d}, got {cov.shape}")
    if not np.any(cov):
        return None
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(cov)
        if np.min(vals) < -1e-12 * max(1.0, float(np.max(vals))):
            raise ValueError("covariance must be positive semidefinite") from None
        return vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None)))


def as_cov_matrix(cov: Union[float, Array], d: int) -> Array:
    """Promote a scalar / diagonal vector / full matrix to a (d, d) covariance."""
    if np.isscalar(cov):
        return float(cov) * np.eye(d)
    cov = np.asarray(cov, dtype=float)
    if cov.ndim == 1:
        if cov.shape != (d,):
            raise ValueError(f"diagonal covariance must have length {d}")
        return np.diag(cov)
    if cov.shape != (d, d):
        raise ValueError(f"covariance must be {d}x{d}, got {cov.shape}")
    return cov
