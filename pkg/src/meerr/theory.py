"""First-order bias and MSE of family members, and the bounds they obey.

All formulas are to terms of order 1/n::

    MSE   = (mu0^2/n) [C0^2 + C_(0)^2 + 2 b'd + d'A d]
    bias  = (mu0/(2n)) [trace(H A) + 2 b'c]
    min   = (mu0^2/n) [C0^2 + C_(0)^2 - b'A^-1 b]          attained at d = -A^-1 b
    V(y)  = (mu0^2/n) (C0^2 + C_(0)^2)

and, without measurement errors, ``A`` becomes ``A*`` and ``C_(0) = 0``.
Every value is also available as its n-free coefficient (``n * value``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from meerr.errors import InvalidSpecError
from meerr.estimators import DerivativeProfile, EstimatorConfig, Member, derivative_profile
from meerr.population import MomentMatrices, PopulationSpec, build_moments

log = logging.getLogger(__name__)


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError(f"sample size must be at least 1, got {n}")


@dataclass(frozen=True)
class MSEDecomposition:
    """The three parts of ``n * MSE / mu0^2``."""

    base: float
    cross: float
    quadratic: float

    @property
    def total(self) -> float:
        return self.base + self.cross + self.quadratic


@dataclass(frozen=True)
class TheoryResult:
    """First-order MSE and bias of one estimator at sample size ``n``."""

    label: str
    member: Member
    n: int
    mse: float
    bias: float
    decomposition: MSEDecomposition = field(compare=False)

    @property
    def mse_coefficient(self) -> float:
        return self.n * self.mse

    @property
    def bias_coefficient(self) -> float:
        return self.n * self.bias


def _base(spec: PopulationSpec, with_errors: bool = True) -> float:
    return spec.c0**2 + (spec.c0_err**2 if with_errors else 0.0)


def mse_first_order(profile: DerivativeProfile, moments: MomentMatrices, spec: PopulationSpec, n: int) -> float:
    """First-order MSE under measurement errors."""
    _check_n(n)
    value = spec.mu0**2 / n * (_base(spec) + moments.quadratic(profile.d))
    return max(value, 0.0)


def mse_no_error(profile: DerivativeProfile, moments: MomentMatrices, spec: PopulationSpec, n: int) -> float:
    """First-order MSE of the same estimator computed on error-free data."""
    _check_n(n)
    d = profile.d
    value = spec.mu0**2 / n * (_base(spec, with_errors=False) + 2.0 * moments.b @ d + d @ moments.A_star @ d)
    return max(float(value), 0.0)


def decompose(profile: DerivativeProfile, moments: MomentMatrices, spec: PopulationSpec) -> MSEDecomposition:
    d = profile.d
    return MSEDecomposition(
        base=_base(spec),
        cross=float(2.0 * moments.b @ d),
        quadratic=float(d @ moments.A @ d),
    )


def bias_first_order(profile: DerivativeProfile, moments: MomentMatrices, spec: PopulationSpec, n: int) -> float:
    """First-order bias; ``E(u-e)' H (u-e) = trace(H A)/n`` since Cov(u) = A/n."""
    _check_n(n)
    return float(spec.mu0 / (2.0 * n) * (np.trace(profile.H @ moments.A) + 2.0 * moments.b @ profile.c))


def min_mse(moments: MomentMatrices, spec: PopulationSpec, n: int) -> float:
    """Smallest first-order MSE any family member can reach."""
    _check_n(n)
    return spec.mu0**2 / n * (_base(spec) - float(moments.b @ moments.phi))


def optimum_gradient_no_error(moments: MomentMatrices) -> np.ndarray:
    """Gradient ``-A*^-1 b`` that is optimal when data carry no errors."""
    return -moments.phi_star


def min_mse_no_error(moments: MomentMatrices, spec: PopulationSpec, n: int) -> float:
    """Error-free minimum MSE, ``(sigma0^2/n)(1 - R^2)``."""
    _check_n(n)
    explained = float(moments.b @ moments.phi_star)
    value = spec.mu0**2 / n * (spec.c0**2 - explained)
    if spec.c0 > 0.0:
        r2 = explained / spec.c0**2
        via_r2 = spec.sigma0**2 / n * (1.0 - r2)
        if not math.isclose(value, via_r2, rel_tol=1e-9, abs_tol=1e-15):
            raise InvalidSpecError([f"minimum MSE {value!r} disagrees with (sigma0^2/n)(1-R^2) = {via_r2!r}"])
    return value


def variance_plain_mean(spec: PopulationSpec, n: int) -> float:
    """Variance of the observed sample mean of the study variate."""
    _check_n(n)
    return spec.mu0**2 / n * _base(spec)


def error_penalty(moments: MomentMatrices, spec: PopulationSpec, n: int) -> float:
    """Increase of the minimum MSE caused by measurement errors (never negative)."""
    _check_n(n)
    gap = spec.c0_err**2 + float(moments.b @ moments.phi_star) - float(moments.b @ moments.phi)
    return spec.mu0**2 / n * max(gap, 0.0)


def relative_efficiency(result: TheoryResult, spec: PopulationSpec) -> float:
    """Percent relative efficiency of an estimator over the plain mean."""
    if result.mse <= 0.0:
        return math.inf
    return 100.0 * variance_plain_mean(spec, result.n) / result.mse


def theory_for(
    config: EstimatorConfig,
    spec: PopulationSpec,
    n: int,
    moments: MomentMatrices | None = None,
) -> TheoryResult:
    """Bias, MSE and decomposition of ``config`` at sample size ``n``.

    The estimated-optimum member reaches the minimum MSE to first order; its
    first-order bias is not given by the expansion and is reported as NaN.
    """
    moments = moments if moments is not None else build_moments(spec)
    if config.member is Member.EST:
        profile = DerivativeProfile(d=-moments.phi, H=np.zeros((spec.p, spec.p)), c=np.zeros(spec.p))
        return TheoryResult(
            label=config.name,
            member=config.member,
            n=n,
            mse=min_mse(moments, spec, n),
            bias=math.nan,
            decomposition=decompose(profile, moments, spec),
        )
    profile = derivative_profile(config, spec.mu0, spec.mu)
    return TheoryResult(
        label=config.name,
        member=config.member,
        n=n,
        mse=mse_first_order(profile, moments, spec, n),
        bias=bias_first_order(profile, moments, spec, n),
        decomposition=decompose(profile, moments, spec),
    )
