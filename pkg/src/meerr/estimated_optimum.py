"""Estimators built on estimated optimum constants.

The optimum gradient ``-mu0 A^-1 b`` needs unknown population moments. Here
``phi = A^-1 b`` is replaced by a consistent sample estimate and plugged into
the difference-type form::

    g**(y, u, phi) = y - y * sum_i phi_i (u_i - 1)

which equals ``mu0`` at ``(mu0, e, phi)``, has unit y-derivative, u-gradient
``-mu0 phi`` and zero phi-gradient there, so it keeps the minimum first-order
MSE.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from meerr.errors import DegenerateSampleError, SingularMomentError
from meerr.estimators import ObservedSample

log = logging.getLogger(__name__)

MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class MomentEstimates:
    """Sample counterparts of A, b, mu0 and phi = A^-1 b."""

    A_hat: np.ndarray
    b_hat: np.ndarray
    mu0_hat: float
    phi_hat: np.ndarray


def estimate_moments(sample: ObservedSample, mu: Sequence[float]) -> MomentEstimates:
    """Estimate A and b from observed data (divisor n - 1).

    Observed auxiliary variances already include the error variances, so
    ``A_hat`` converges to A (not A*).
    """
    mu = np.asarray(mu, dtype=float)
    if sample.n < 3:
        raise DegenerateSampleError(f"moment estimation needs n >= 3, got {sample.n}")
    data = np.column_stack((sample.y, sample.x))
    cov = np.atleast_2d(np.cov(data, rowvar=False, ddof=1))
    variances = np.diag(cov)
    if np.any(variances <= 0.0):
        raise DegenerateSampleError("sample has a zero-variance column")
    y_bar = float(sample.y.mean())
    if y_bar == 0.0:
        raise DegenerateSampleError("sample mean of the study variate is zero")
    a_hat = cov[1:, 1:] / np.outer(mu, mu)
    b_hat = cov[0, 1:] / (y_bar * mu)
    if np.linalg.cond(a_hat) > MAX_CONDITION:
        raise SingularMomentError("A_hat is singular")
    try:
        phi_hat = scipy.linalg.solve(a_hat, b_hat, assume_a="sym")
    except np.linalg.LinAlgError as exc:
        raise SingularMomentError("A_hat is singular") from exc
    if not np.all(np.isfinite(phi_hat)):
        raise SingularMomentError("A_hat is singular")
    return MomentEstimates(A_hat=a_hat, b_hat=b_hat, mu0_hat=y_bar, phi_hat=phi_hat)


def estimated_optimum_form(y_bar: float, u: np.ndarray, phi: np.ndarray) -> float:
    """The difference-type realization ``y - y * phi'(u - e)``."""
    u = np.asarray(u, dtype=float)
    return float(y_bar - y_bar * np.asarray(phi, dtype=float) @ (u - 1.0))


def estimated_optimum_estimate(sample: ObservedSample, mu: Sequence[float]) -> float:
    """Estimate of mu0 using estimated optimum constants."""
    mu = np.asarray(mu, dtype=float)
    estimates = estimate_moments(sample, mu)
    summary = sample.summary()
    return estimated_optimum_form(summary.y_bar, summary.ratios(mu), estimates.phi_hat)
