"""The eighteen members of the estimator family, plus the plain sample mean.

Every member is a function ``g(y_bar, u)`` of the observed study mean and the
auxiliary ratios ``u_i = x_bar_i / mu_i`` with ``g(mu0, e) = mu0``. For each
one this module provides

* the closed-form point estimate (:func:`evaluate`, vectorized as
  :func:`evaluate_many` for Monte Carlo use),
* the derivative profile at the expansion point (:func:`derivative_profile`),
  in the normalized form ``d = g_u / mu0``, ``H = g_uu / mu0`` and
  ``c = g_{y u}`` (a true cross partial, so ``c = 0`` for the difference form
  M18),
* a finite-difference oracle for that profile (:func:`numeric_profile`),
* the parameters minimizing the first-order MSE (:func:`optimal_params`).

Canonical forms::

    M1   y sum w_i mu_i/x_i                M10  y [w_{p+1} + sum w_i u_i]
    M2   y sum w_i u_i                     M11  y [sum_{i<=q} w_i/u_i + sum_{i>q} w_i u_i]
    M3   y (sum w_i mu_i)/(sum w_i x_i)    M12  y prod u_i^a_i
    M4   y (sum w_i x_i)/(sum w_i mu_i)    M13  y prod (2 - u_i^a_i)
    M5   y prod (mu_i/x_i)^w_i             M14  y prod u_i / (1 + a_i (u_i - 1))
    M6   y / sum w_i u_i                   M15  y exp(sum t_i log u_i)
    M7   y prod u_i^w_i                    M16  y exp(sum t_i (u_i - 1))
    M8   y / sum w_i mu_i/x_i              M17  y sum w_i u_i^(t_i/w_i)
    M9   y [w_{p+1} + sum w_i mu_i/x_i]    M18  y + sum a_i (x_i - mu_i)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from statsmodels.tools.numdiff import approx_fprime, approx_hess3

from meerr.errors import (
    DegenerateSampleError,
    EvaluationDomainError,
    InvalidEstimatorConfigError,
)
from meerr.population import MomentMatrices, PopulationSpec, build_moments

log = logging.getLogger(__name__)

TINY = 1e-300
SUM_TOLERANCE = 1e-12


class Member(str, Enum):
    """Stable external names of the family members."""

    M1 = "M1"
    M2 = "M2"
    M3 = "M3"
    M4 = "M4"
    M5 = "M5"
    M6 = "M6"
    M7 = "M7"
    M8 = "M8"
    M9 = "M9"
    M10 = "M10"
    M11 = "M11"
    M12 = "M12"
    M13 = "M13"
    M14 = "M14"
    M15 = "M15"
    M16 = "M16"
    M17 = "M17"
    M18 = "M18"
    PLAIN = "PLAIN"
    EST = "EST"

    def __str__(self) -> str:
        return self.value


FAMILY = tuple(Member(f"M{i}") for i in range(1, 19))

# parameter name -> length rule ("p", "p+1") for each member; "sum1" marks
# weight vectors constrained to the simplex hyperplane.
_PARAMETERS: dict[Member, dict[str, str]] = {
    **{m: {"omega": "p"} for m in FAMILY[:8]},
    Member.M9: {"omega": "p+1"},
    Member.M10: {"omega": "p+1"},
    Member.M11: {"omega": "p", "q": "q"},
    Member.M12: {"alpha": "p"},
    Member.M13: {"alpha": "p"},
    Member.M14: {"alpha": "p"},
    Member.M15: {"theta": "p"},
    Member.M16: {"theta": "p"},
    Member.M17: {"omega": "p", "theta": "p"},
    Member.M18: {"alpha": "p"},
    Member.PLAIN: {},
    Member.EST: {},
}


def _tuple_or_none(values: Sequence[float] | None) -> tuple[float, ...] | None:
    if values is None:
        return None
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class EstimatorConfig:
    """One family member together with its weights, exponents or coefficients."""

    member: Member
    omega: tuple[float, ...] | None = None
    alpha: tuple[float, ...] | None = None
    theta: tuple[float, ...] | None = None
    q: int | None = None
    label: str | None = None
    optimal: bool = False

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "member", Member(self.member))
        except ValueError as exc:
            raise InvalidEstimatorConfigError(f"unknown estimator id {self.member!r}", "id") from exc
        for name in ("omega", "alpha", "theta"):
            object.__setattr__(self, name, _tuple_or_none(getattr(self, name)))

    @property
    def name(self) -> str:
        return self.label or self.member.value

    @cached_property
    def omega_array(self) -> np.ndarray:
        return np.array(self.omega if self.omega is not None else (), dtype=float)

    @cached_property
    def alpha_array(self) -> np.ndarray:
        return np.array(self.alpha if self.alpha is not None else (), dtype=float)

    @cached_property
    def theta_array(self) -> np.ndarray:
        return np.array(self.theta if self.theta is not None else (), dtype=float)


def check_config(config: EstimatorConfig, p: int) -> list[tuple[str, str]]:
    """Return ``(field, message)`` for every parameterization problem."""
    issues: list[tuple[str, str]] = []
    rules = _PARAMETERS[config.member]
    for name in ("omega", "alpha", "theta", "q"):
        value = getattr(config, name)
        if name not in rules:
            if value is not None:
                issues.append((name, f"{name} is not a parameter of {config.member}"))
            continue
        if value is None:
            issues.append((name, f"{config.member} requires {name}"))
            continue
        if name == "q":
            if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value < p:
                issues.append(("q", f"q must be an integer with 1 <= q < p (p={p})"))
            continue
        expected = p + 1 if rules[name] == "p+1" else p
        if len(value) != expected:
            issues.append((name, f"{name} has length {len(value)}, expected {expected}"))
        elif not all(math.isfinite(v) for v in value):
            issues.append((name, f"{name} must be finite"))
        elif name == "omega" and abs(math.fsum(value) - 1.0) > SUM_TOLERANCE:
            issues.append(("omega", f"omega must sum to 1 (sums to {math.fsum(value):.12g})"))
    if config.member is Member.M17 and config.omega is not None and any(w == 0.0 for w in config.omega):
        issues.append(("omega", "M17 needs every omega_i != 0"))
    return issues


def require_valid(config: EstimatorConfig, p: int) -> None:
    issues = check_config(config, p)
    if issues:
        field, message = issues[0]
        raise InvalidEstimatorConfigError(message, field)


@dataclass(frozen=True)
class SampleSummary:
    """Observed sample means ``y_bar`` and ``x_bar`` of a sample of size ``n``."""

    y_bar: float
    x_bar: tuple[float, ...]
    n: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "y_bar", float(self.y_bar))
        object.__setattr__(self, "x_bar", tuple(float(v) for v in self.x_bar))
        if self.n < 2:
            raise DegenerateSampleError(f"sample size must be at least 2, got {self.n}")
        if not all(math.isfinite(v) for v in (self.y_bar, *self.x_bar)):
            raise DegenerateSampleError("sample means must be finite")

    def ratios(self, mu: Sequence[float]) -> np.ndarray:
        """The ratios ``u_i = x_bar_i / mu_i``."""
        return np.asarray(self.x_bar) / np.asarray(mu, dtype=float)


@dataclass(frozen=True, eq=False)
class ObservedSample:
    """Fallible observations: ``y`` has shape (n,), ``x`` shape (n, p)."""

    y: np.ndarray
    x: np.ndarray

    def __post_init__(self) -> None:
        y = np.array(self.y, dtype=float).reshape(-1)
        x = np.array(self.x, dtype=float).reshape(y.size, -1)
        y.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def summary(self) -> SampleSummary:
        return SampleSummary(y_bar=float(self.y.mean()), x_bar=tuple(self.x.mean(axis=0)), n=self.n)


@dataclass(frozen=True, eq=False)
class DerivativeProfile:
    """First and second derivatives of ``g`` at ``(mu0, e)``, mu0-normalized."""

    d: np.ndarray
    H: np.ndarray
    c: np.ndarray

    def __post_init__(self) -> None:
        d = np.array(self.d, dtype=float)
        H = np.array(self.H, dtype=float).reshape(d.size, d.size)
        c = np.array(self.c, dtype=float)
        for array in (d, H, c):
            array.flags.writeable = False
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "c", c)

    @property
    def p(self) -> int:
        return self.d.size


class _Domain:
    """Collects per-row domain violations while a member is being evaluated."""

    def __init__(self, member: Member, rows: int):
        self.member = member
        self.failed = np.zeros(rows, dtype=bool)
        self.events: list[tuple[np.ndarray, int | None, str]] = []

    def _flag(self, mask: np.ndarray, variate: int | None, reason: str) -> None:
        if mask.any():
            self.failed |= mask
            self.events.append((mask, variate, reason))

    def nonzero(self, values: np.ndarray, variate: int | None, reason: str) -> np.ndarray:
        mask = ~(np.abs(values) >= TINY)
        self._flag(mask, variate, reason)
        return np.where(mask, np.nan, values)

    def positive(self, values: np.ndarray, variate: int | None, reason: str) -> np.ndarray:
        mask = ~(values > 0.0)
        self._flag(mask, variate, reason)
        return np.where(mask, np.nan, values)

    def finite(self, values: np.ndarray) -> np.ndarray:
        mask = ~np.isfinite(values) & ~self.failed
        self._flag(mask, None, "non-finite intermediate")
        return np.where(self.failed, np.nan, values)

    def error_for_row(self, row: int) -> EvaluationDomainError:
        for mask, variate, reason in self.events:
            if mask[row]:
                return EvaluationDomainError(self.member.value, reason, variate)
        return EvaluationDomainError(self.member.value, "unknown")


def _inverse_ratios(x_bar: np.ndarray, mu: np.ndarray, dom: _Domain, columns: range | None = None) -> np.ndarray:
    """``mu_i / x_bar_i`` with a guard on every divisor."""
    columns = columns if columns is not None else range(x_bar.shape[1])
    out = np.empty((x_bar.shape[0], len(columns)))
    for k, i in enumerate(columns):
        out[:, k] = mu[i] / dom.nonzero(x_bar[:, i], i, "auxiliary sample mean is zero")
    return out


def _powers(u: np.ndarray, exponents: np.ndarray, dom: _Domain) -> np.ndarray:
    """``u_i ** e_i``; non-integer exponents need ``u_i > 0``, negative ones ``u_i != 0``."""
    out = np.empty_like(u)
    for i, exponent in enumerate(exponents):
        column = u[:, i]
        if float(exponent).is_integer():
            if exponent < 0:
                column = dom.nonzero(column, i, "zero ratio under a negative power")
        else:
            column = dom.positive(column, i, "nonpositive ratio under a fractional power")
        out[:, i] = np.power(column, exponent)
    return out


def _logs(u: np.ndarray, dom: _Domain) -> np.ndarray:
    out = np.empty_like(u)
    for i in range(u.shape[1]):
        out[:, i] = np.log(dom.positive(u[:, i], i, "nonpositive ratio under a logarithm"))
    return out


_Form = Callable[[EstimatorConfig, np.ndarray, np.ndarray, np.ndarray, np.ndarray, _Domain], np.ndarray]
_FORMS: dict[Member, _Form] = {}


def _form(member: Member) -> Callable[[_Form], _Form]:
    def register(fn: _Form) -> _Form:
        _FORMS[member] = fn
        return fn

    return register


@_form(Member.PLAIN)
def _plain(cfg, y, x, u, mu, dom):
    return y.copy()


@_form(Member.M1)
def _weighted_ratio(cfg, y, x, u, mu, dom):
    return y * (_inverse_ratios(x, mu, dom) @ cfg.omega_array)


@_form(Member.M2)
def _weighted_product(cfg, y, x, u, mu, dom):
    return y * (u @ cfg.omega_array)


@_form(Member.M3)
def _ratio_of_weighted_means(cfg, y, x, u, mu, dom):
    w = cfg.omega_array
    denominator = dom.nonzero(x @ w, None, "weighted auxiliary mean is zero")
    return y * float(w @ mu) / denominator


@_form(Member.M4)
def _product_of_weighted_means(cfg, y, x, u, mu, dom):
    w = cfg.omega_array
    scale = dom.nonzero(np.full(y.shape, float(w @ mu)), None, "weighted population mean is zero")
    return y * (x @ w) / scale


@_form(Member.M5)
def _geometric_ratio(cfg, y, x, u, mu, dom):
    return y * np.prod(_powers(u, -cfg.omega_array, dom), axis=1)


@_form(Member.M6)
def _harmonic_product(cfg, y, x, u, mu, dom):
    return y / dom.nonzero(u @ cfg.omega_array, None, "weighted ratio sum is zero")


@_form(Member.M7)
def _geometric_product(cfg, y, x, u, mu, dom):
    return y * np.prod(_powers(u, cfg.omega_array, dom), axis=1)


@_form(Member.M8)
def _harmonic_ratio(cfg, y, x, u, mu, dom):
    total = _inverse_ratios(x, mu, dom) @ cfg.omega_array
    return y / dom.nonzero(total, None, "weighted inverse-ratio sum is zero")


@_form(Member.M9)
def _slack_ratio(cfg, y, x, u, mu, dom):
    w = cfg.omega_array
    return y * (w[-1] + _inverse_ratios(x, mu, dom) @ w[:-1])


@_form(Member.M10)
def _slack_product(cfg, y, x, u, mu, dom):
    w = cfg.omega_array
    return y * (w[-1] + u @ w[:-1])


@_form(Member.M11)
def _ratio_product_mix(cfg, y, x, u, mu, dom):
    w, q = cfg.omega_array, cfg.q
    ratio_part = _inverse_ratios(x, mu, dom, range(q)) @ w[:q]
    return y * (ratio_part + u[:, q:] @ w[q:])


@_form(Member.M12)
def _power_product(cfg, y, x, u, mu, dom):
    return y * np.prod(_powers(u, cfg.alpha_array, dom), axis=1)


@_form(Member.M13)
def _dual_power(cfg, y, x, u, mu, dom):
    return y * np.prod(2.0 - _powers(u, cfg.alpha_array, dom), axis=1)


@_form(Member.M14)
def _shrunk_ratio(cfg, y, x, u, mu, dom):
    factors = np.empty_like(u)
    for i, a in enumerate(cfg.alpha_array):
        denominator = dom.nonzero(1.0 + a * (u[:, i] - 1.0), i, "zero denominator")
        factors[:, i] = u[:, i] / denominator
    return y * np.prod(factors, axis=1)


@_form(Member.M15)
def _log_linear(cfg, y, x, u, mu, dom):
    return y * np.exp(_logs(u, dom) @ cfg.theta_array)


@_form(Member.M16)
def _exponential(cfg, y, x, u, mu, dom):
    return y * np.exp((u - 1.0) @ cfg.theta_array)


@_form(Member.M17)
def _weighted_power(cfg, y, x, u, mu, dom):
    w = cfg.omega_array
    return y * (_powers(u, cfg.theta_array / w, dom) @ w)


@_form(Member.M18)
def _difference(cfg, y, x, u, mu, dom):
    return y + (x - mu) @ cfg.alpha_array


@dataclass(frozen=True, eq=False)
class BatchEvaluation:
    """Estimates for many samples at once; failed rows hold NaN."""

    values: np.ndarray
    failed: np.ndarray
    _domain: _Domain

    def raise_for_row(self, row: int) -> None:
        if self.failed[row]:
            raise self._domain.error_for_row(row)


def evaluate_many(
    config: EstimatorConfig,
    y_bar: np.ndarray,
    x_bar: np.ndarray,
    mu: Sequence[float],
) -> BatchEvaluation:
    """Evaluate ``config`` on rows of sample means.

    ``y_bar`` has shape (R,), ``x_bar`` shape (R, p). Domain violations do not
    raise; they are marked in :attr:`BatchEvaluation.failed`.
    """
    mu = np.asarray(mu, dtype=float)
    y_bar = np.atleast_1d(np.asarray(y_bar, dtype=float))
    x_bar = np.asarray(x_bar, dtype=float).reshape(y_bar.shape[0], mu.size)
    if config.member is Member.EST:
        raise InvalidEstimatorConfigError(
            "EST needs the full sample; use estimated_optimum_estimate", "id"
        )
    require_valid(config, mu.size)
    dom = _Domain(config.member, y_bar.shape[0])
    with np.errstate(all="ignore"):
        values = _FORMS[config.member](config, y_bar, x_bar, x_bar / mu, mu, dom)
        values = dom.finite(values)
    return BatchEvaluation(values=values, failed=dom.failed.copy(), _domain=dom)


def evaluate(config: EstimatorConfig, summary: SampleSummary, mu: Sequence[float]) -> float:
    """Point estimate of ``mu0`` from one sample summary.

    Raises :class:`EvaluationDomainError` naming the member and variate when
    the closed form is undefined at the sample means.
    """
    batch = evaluate_many(config, np.array([summary.y_bar]), np.array([summary.x_bar]), mu)
    batch.raise_for_row(0)
    return float(batch.values[0])


def _ratio_scale(config: EstimatorConfig, mu: np.ndarray | None) -> tuple[np.ndarray, float]:
    if mu is None:
        raise InvalidEstimatorConfigError(f"{config.member} profile depends on the auxiliary means mu", "mu")
    weighted = config.omega_array * mu
    total = float(weighted.sum())
    if abs(total) < TINY:
        raise InvalidEstimatorConfigError(f"{config.member} needs sum(omega_i mu_i) != 0", "omega")
    return weighted, total


def derivative_profile(
    config: EstimatorConfig,
    mu0: float | None = None,
    mu: Sequence[float] | None = None,
) -> DerivativeProfile:
    """Closed-form derivative profile of ``config`` at the expansion point.

    M3 and M4 depend on ``mu``; M18 on ``mu0`` and ``mu``. Every other member
    is ratio-scale and needs neither.
    """
    member = config.member
    if member is Member.EST:
        raise InvalidEstimatorConfigError("EST has no fixed derivative profile", "id")
    mu_arr = None if mu is None else np.asarray(mu, dtype=float)
    if member is Member.M18:
        if mu0 is None or mu_arr is None:
            raise InvalidEstimatorConfigError("M18 profile depends on mu0 and mu", "mu")
        require_valid(config, mu_arr.size)
        d = config.alpha_array * mu_arr / mu0
        p = d.size
        return DerivativeProfile(d=d, H=np.zeros((p, p)), c=np.zeros(p))
    if member is Member.PLAIN:
        if mu_arr is None:
            raise InvalidEstimatorConfigError("PLAIN profile needs mu for its dimension", "mu")
        p = mu_arr.size
        return DerivativeProfile(d=np.zeros(p), H=np.zeros((p, p)), c=np.zeros(p))

    p = _profile_dimension(config)
    require_valid(config, p)
    w, a, t = config.omega_array, config.alpha_array, config.theta_array

    if member in (Member.M1, Member.M9):
        w = w[:p]
        d, H = -w, 2.0 * np.diag(w)
    elif member in (Member.M2, Member.M10):
        w = w[:p]
        d, H = w.copy(), np.zeros((p, p))
    elif member is Member.M3:
        weighted, total = _ratio_scale(config, mu_arr)
        d = -weighted / total
        H = 2.0 * np.outer(weighted, weighted) / total**2
    elif member is Member.M4:
        weighted, total = _ratio_scale(config, mu_arr)
        d, H = weighted / total, np.zeros((p, p))
    elif member is Member.M5:
        d, H = -w, np.outer(w, w) + np.diag(w)
    elif member is Member.M6:
        d, H = -w, 2.0 * np.outer(w, w)
    elif member is Member.M7:
        d, H = w.copy(), np.outer(w, w) - np.diag(w)
    elif member is Member.M8:
        d, H = w.copy(), 2.0 * (np.outer(w, w) - np.diag(w))
    elif member is Member.M11:
        signs = _mixed_signs(p, config.q)
        d = signs * w
        H = 2.0 * np.diag(np.where(signs < 0, w, 0.0))
    elif member in (Member.M12, Member.M15):
        exponents = a if member is Member.M12 else t
        d, H = exponents.copy(), np.outer(exponents, exponents) - np.diag(exponents)
    elif member is Member.M13:
        d, H = -a, np.outer(a, a) + np.diag(a - 2.0 * a**2)
    elif member is Member.M14:
        beta = 1.0 - a
        d = beta
        H = np.outer(beta, beta) + np.diag(-(beta**2) - 2.0 * a * beta)
    elif member is Member.M16:
        d, H = t.copy(), np.outer(t, t)
    elif member is Member.M17:
        d, H = t.copy(), np.diag(t * (t / w - 1.0))
    else:  # pragma: no cover - exhaustive over Member
        raise InvalidEstimatorConfigError(f"no profile for {member}", "id")
    # ratio-scale members are y_bar * h(u), so the cross partial equals d
    return DerivativeProfile(d=d, H=H, c=d)


def _profile_dimension(config: EstimatorConfig) -> int:
    member = config.member
    if member in (Member.M9, Member.M10):
        return len(config.omega or ()) - 1
    for name in ("omega", "alpha", "theta"):
        value = getattr(config, name)
        if value is not None:
            return len(value)
    raise InvalidEstimatorConfigError(f"{member} has no parameters to size the profile", "id")


def _mixed_signs(p: int, q: int) -> np.ndarray:
    """-1 on the q ratio-type coordinates, +1 on the product-type ones."""
    return np.where(np.arange(p) < q, -1.0, 1.0)


def numeric_profile(
    config: EstimatorConfig,
    mu0: float,
    mu: Sequence[float],
    h: float | None = None,
    h2: float | None = None,
) -> DerivativeProfile:
    """Central finite-difference estimate of :func:`derivative_profile`.

    Differentiates ``f(z0, u) = g(mu0 * z0, mu * u) / mu0`` at ``(1, e)``;
    ``h`` is the gradient step and ``h2`` the Hessian step (statsmodels
    defaults when omitted). Domain errors propagate.
    """
    mu_arr = np.asarray(mu, dtype=float)
    p = mu_arr.size

    def f(z: np.ndarray) -> float:
        summary = SampleSummary(y_bar=mu0 * z[0], x_bar=tuple(mu_arr * z[1:]), n=2)
        return evaluate(config, summary, mu_arr) / mu0

    z = np.ones(p + 1)
    grad = np.ravel(approx_fprime(z, f, epsilon=h, centered=True))
    hess = approx_hess3(z, f, epsilon=h2)
    return DerivativeProfile(d=grad[1:], H=hess[1:, 1:], c=hess[0, 1:])


def _simplex_weights(vector: np.ndarray, member: Member) -> np.ndarray:
    total = float(vector.sum())
    if abs(total) < TINY:
        raise InvalidEstimatorConfigError(f"optimum gradient is not reachable by {member}", "omega")
    return vector / total


def optimal_params(
    member: Member | str,
    spec: PopulationSpec,
    moments: MomentMatrices | None = None,
    q: int | None = None,
) -> EstimatorConfig:
    """Parameters minimizing the first-order MSE within ``member``'s family.

    Members free to reach ``d = -A^-1 b`` get exactly that gradient. Members
    whose weights must sum to one get the minimizer of the MSE quadratic on
    their constraint hyperplane (see :meth:`MomentMatrices.optimum_gradient`).
    """
    member = Member(member)
    moments = moments if moments is not None else build_moments(spec)
    p = spec.p
    e = np.ones(p)
    phi = moments.phi
    mu = spec.mu_array

    if member in (Member.PLAIN, Member.EST):
        raise InvalidEstimatorConfigError(f"{member} has no parameters to optimize", "id")
    if member in (Member.M1, Member.M5, Member.M6):
        omega = _simplex_weights(-moments.optimum_gradient(e, -1.0), member)
        config = EstimatorConfig(member, omega=omega)
    elif member in (Member.M2, Member.M7, Member.M8):
        omega = _simplex_weights(moments.optimum_gradient(e, 1.0), member)
        config = EstimatorConfig(member, omega=omega)
    elif member is Member.M3:
        d = moments.optimum_gradient(e, -1.0)
        config = EstimatorConfig(member, omega=_simplex_weights(-d / mu, member))
    elif member is Member.M4:
        d = moments.optimum_gradient(e, 1.0)
        config = EstimatorConfig(member, omega=_simplex_weights(d / mu, member))
    elif member in (Member.M9, Member.M10):
        tilde = phi if member is Member.M9 else -phi
        config = EstimatorConfig(member, omega=(*tilde, 1.0 - math.fsum(tilde)))
    elif member is Member.M11:
        if q is None:
            raise InvalidEstimatorConfigError("M11 needs the split index q", "q")
        signs = _mixed_signs(p, q)
        d = moments.optimum_gradient(signs, 1.0)
        config = EstimatorConfig(member, omega=_simplex_weights(signs * d, member), q=q)
    elif member is Member.M12:
        config = EstimatorConfig(member, alpha=-phi)
    elif member is Member.M13:
        config = EstimatorConfig(member, alpha=phi)
    elif member is Member.M14:
        config = EstimatorConfig(member, alpha=1.0 + phi)
    elif member in (Member.M15, Member.M16):
        config = EstimatorConfig(member, theta=-phi)
    elif member is Member.M17:
        config = EstimatorConfig(member, omega=np.full(p, 1.0 / p), theta=-phi)
    else:
        config = EstimatorConfig(member, alpha=-spec.mu0 * phi / mu)
    require_valid(config, p)
    log.debug(f"optimal parameters for {member}: {config}")
    return config
