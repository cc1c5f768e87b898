"""Population scenarios and the moment matrices every MSE formula is built on.

A :class:`PopulationSpec` holds true means, coefficients of variation,
measurement-error CVs and correlations. :func:`build_moments` turns it into
:class:`MomentMatrices`::

    A_ij  = rho_ij C_i C_j          (i != j)
    A_ii  = C_i^2 + C_(i)^2
    A*_ij = rho_ij C_i C_j          (A* = A without the error variances)
    b_i   = rho_0i C_0 C_i

Standard deviations are ``sigma = C * |mu|``. When a mean is negative the
relative deviations ``u_i - 1`` flip sign, so the off-diagonal and cross terms
pick up ``sign(mu_i mu_j)`` and ``sign(mu_0 mu_i)``; with positive means the
matrices are exactly the ones displayed above.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from meerr.errors import InvalidSpecError, NotPSDError, SingularMomentError

log = logging.getLogger(__name__)

PSD_TOLERANCE = 1e-10
SYMMETRY_TOLERANCE = 1e-12


def _vector(values: Iterable[float]) -> tuple[float, ...]:
    return tuple(float(v) for v in values)


def _matrix(rows: Iterable[Iterable[float]]) -> tuple[tuple[float, ...], ...]:
    return tuple(_vector(row) for row in rows)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class PopulationSpec:
    """True moments and measurement-error moments of one scenario.

    Vectors are stored as tuples so specs compare and hash by value; the
    ``*_array`` properties give read-only numpy views for computation.
    """

    mu0: float
    mu: tuple[float, ...]
    c0: float
    c: tuple[float, ...]
    c0_err: float
    c_err: tuple[float, ...]
    rho0: tuple[float, ...]
    rho: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu0", float(self.mu0))
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "c0_err", float(self.c0_err))
        for name in ("mu", "c", "c_err", "rho0"):
            object.__setattr__(self, name, _vector(getattr(self, name)))
        object.__setattr__(self, "rho", _matrix(self.rho))

    @property
    def p(self) -> int:
        """Number of auxiliary variates."""
        return len(self.mu)

    @cached_property
    def mu_array(self) -> np.ndarray:
        return _frozen(np.array(self.mu, dtype=float))

    @cached_property
    def c_array(self) -> np.ndarray:
        return _frozen(np.array(self.c, dtype=float))

    @cached_property
    def c_err_array(self) -> np.ndarray:
        return _frozen(np.array(self.c_err, dtype=float))

    @cached_property
    def rho0_array(self) -> np.ndarray:
        return _frozen(np.array(self.rho0, dtype=float))

    @cached_property
    def rho_array(self) -> np.ndarray:
        return _frozen(np.array(self.rho, dtype=float).reshape(self.p, self.p))

    @property
    def sigma0(self) -> float:
        """Standard deviation of the true study variate."""
        return self.c0 * abs(self.mu0)

    @property
    def sigma(self) -> np.ndarray:
        """Standard deviations of the true auxiliary variates."""
        return self.c_array * np.abs(self.mu_array)

    @property
    def sigma0_err(self) -> float:
        return self.c0_err * abs(self.mu0)

    @property
    def sigma_err(self) -> np.ndarray:
        return self.c_err_array * np.abs(self.mu_array)

    @property
    def has_errors(self) -> bool:
        return self.c0_err > 0 or any(v > 0 for v in self.c_err)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate_spec`; truthy when the spec passed."""

    violations: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.passed

    def raise_for_violations(self) -> None:
        if self.violations:
            if any("not PSD" in v for v in self.violations):
                raise NotPSDError("; ".join(self.violations))
            raise InvalidSpecError(self.violations)


@dataclass(frozen=True, eq=False)
class MomentMatrices:
    """The A, A*, b and C_diag quantities of the first-order MSE."""

    A: np.ndarray
    A_star: np.ndarray
    b: np.ndarray
    C_diag: np.ndarray
    _factors: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        for name in ("A", "A_star", "b", "C_diag"):
            object.__setattr__(self, name, _frozen(np.array(getattr(self, name), dtype=float)))

    @property
    def p(self) -> int:
        return self.b.shape[0]

    def _cho(self, which: str):
        if which not in self._factors:
            matrix = self.A if which == "A" else self.A_star
            try:
                self._factors[which] = scipy.linalg.cho_factor(matrix, lower=True)
            except np.linalg.LinAlgError as exc:
                label = "A" if which == "A" else "A_star"
                raise SingularMomentError(f"{label} is singular: degenerate auxiliary correlation") from exc
        return self._factors[which]

    def solve(self, v: np.ndarray) -> np.ndarray:
        """Return ``A^-1 v``."""
        return scipy.linalg.cho_solve(self._cho("A"), np.asarray(v, dtype=float))

    def solve_star(self, v: np.ndarray) -> np.ndarray:
        """Return ``A*^-1 v``."""
        return scipy.linalg.cho_solve(self._cho("A_star"), np.asarray(v, dtype=float))

    def quadratic(self, d: np.ndarray) -> float:
        """``2 b'd + d'Ad``, the gradient-dependent part of the n*MSE/mu0^2."""
        d = np.asarray(d, dtype=float)
        return float(2.0 * self.b @ d + d @ self.A @ d)

    @cached_property
    def phi(self) -> np.ndarray:
        """``A^-1 b``; the optimum gradient is ``-phi``."""
        return _frozen(self.solve(self.b))

    @cached_property
    def phi_star(self) -> np.ndarray:
        """``A*^-1 b``, the error-free counterpart of :attr:`phi`."""
        return _frozen(self.solve_star(self.b))

    def optimum_gradient(self, constraint: Sequence[float] | None = None, target: float = 0.0) -> np.ndarray:
        """Minimize ``2 b'd + d'Ad`` over d, optionally subject to ``s'd = target``.

        Without a constraint the minimizer is ``-A^-1 b``. With one linear
        constraint it is ``A^-1(-b + kappa s)`` where
        ``kappa = (target + s'A^-1 b) / (s'A^-1 s)``.
        """
        if constraint is None:
            return -self.phi
        s = np.asarray(constraint, dtype=float)
        a_inv_s = self.solve(s)
        denominator = float(s @ a_inv_s)
        if denominator <= 0.0:
            raise SingularMomentError("constraint direction is degenerate for A")
        kappa = (target + float(s @ self.phi)) / denominator
        return -self.phi + kappa * a_inv_s


def _min_pivot(matrix: np.ndarray) -> float:
    """Smallest eigenvalue of the block-diagonal D of an LDL' factorization.

    By Sylvester's law of inertia its sign matches the smallest eigenvalue of
    ``matrix``.
    """
    _, d, _ = scipy.linalg.ldl(matrix, lower=True)
    return float(np.min(np.linalg.eigvalsh(d)))


def _raw_covariance(spec: PopulationSpec) -> np.ndarray:
    sigma = np.concatenate(([spec.sigma0], spec.sigma))
    corr = np.empty((spec.p + 1, spec.p + 1))
    corr[0, 0] = 1.0
    corr[0, 1:] = spec.rho0_array
    corr[1:, 0] = spec.rho0_array
    corr[1:, 1:] = spec.rho_array
    return corr * np.outer(sigma, sigma)


def validate_spec(spec: PopulationSpec) -> ValidationReport:
    """Check every invariant of ``spec`` and report all violations found."""
    violations: list[str] = []
    p = spec.p
    if p < 1:
        return ValidationReport(("at least one auxiliary variate is required",))

    for name, length in (("c", len(spec.c)), ("c_err", len(spec.c_err)), ("rho0", len(spec.rho0))):
        if length != p:
            violations.append(f"{name} has length {length}, expected {p}")
    if len(spec.rho) != p or any(len(row) != p for row in spec.rho):
        violations.append(f"rho must be {p}x{p}")
    if violations:
        return ValidationReport(tuple(violations))

    scalars = [spec.mu0, spec.c0, spec.c0_err]
    vectors = [*spec.mu, *spec.c, *spec.c_err, *spec.rho0, *(v for row in spec.rho for v in row)]
    if not all(math.isfinite(v) for v in scalars + vectors):
        return ValidationReport(("all values must be finite",))

    if spec.mu0 == 0.0:
        violations.append("study mean zero")
    for i, m in enumerate(spec.mu, start=1):
        if m == 0.0:
            violations.append(f"auxiliary mean zero (variate {i})")
    if spec.c0 < 0 or spec.c0_err < 0 or any(v < 0 for v in spec.c + spec.c_err):
        violations.append("coefficients of variation must be nonnegative")
    if any(abs(r) > 1.0 for r in spec.rho0):
        violations.append("rho0 entries must lie in [-1, 1]")

    rho = spec.rho_array
    if np.any(np.abs(rho) > 1.0):
        violations.append("rho entries must lie in [-1, 1]")
    if not np.allclose(rho, rho.T, rtol=0.0, atol=SYMMETRY_TOLERANCE):
        violations.append("rho is not symmetric")
    if not np.allclose(np.diag(rho), 1.0, rtol=0.0, atol=SYMMETRY_TOLERANCE):
        violations.append("rho must have unit diagonal")

    if not violations:
        cov = _raw_covariance(spec)
        cov = 0.5 * (cov + cov.T)
        scale = float(np.max(np.diag(cov)))
        pivot = _min_pivot(cov)
        log.debug(f"smallest factorization pivot {pivot:.3e} (scale {scale:.3e})")
        if pivot < -PSD_TOLERANCE * scale:
            violations.append("augmented correlation matrix not PSD (spec not PSD)")

    return ValidationReport(tuple(violations))


def _require_valid(spec: PopulationSpec) -> None:
    validate_spec(spec).raise_for_violations()


def synthesize_covariance(spec: PopulationSpec) -> np.ndarray:
    """Covariance matrix of the true values (Y, X_1, ..., X_p)."""
    _require_valid(spec)
    cov = _raw_covariance(spec)
    return _frozen(0.5 * (cov + cov.T))


def build_moments(spec: PopulationSpec) -> MomentMatrices:
    """Build A, A*, b and C_diag for ``spec``."""
    _require_valid(spec)
    signs = np.sign(spec.mu_array)
    c = spec.c_array * signs
    a_star = spec.rho_array * np.outer(c, c)
    a_star = 0.5 * (a_star + a_star.T)
    np.fill_diagonal(a_star, spec.c_array**2)
    c_diag = spec.c_array**2 + spec.c_err_array**2
    a = a_star.copy()
    np.fill_diagonal(a, c_diag)
    b = spec.rho0_array * spec.c0 * c * math.copysign(1.0, spec.mu0)
    return MomentMatrices(A=a, A_star=a_star, b=b, C_diag=c_diag)


def multiple_correlation_sq(spec: PopulationSpec, moments: MomentMatrices | None = None) -> float:
    """Squared multiple correlation of Y on X_1..X_p, ``b'A*^-1 b / C0^2``.

    Values outside [0, 1] mean the population spec is numerically inconsistent; they are
    clamped and logged.
    """
    moments = moments if moments is not None else build_moments(spec)
    if spec.c0 <= 0.0:
        raise InvalidSpecError(["multiple correlation needs c0 > 0"])
    r2 = float(moments.b @ moments.phi_star) / spec.c0**2
    if not 0.0 <= r2 <= 1.0:
        log.warning(f"R^2 = {r2:.6g} outside [0, 1]; clamping (inconsistent spec)")
        r2 = min(max(r2, 0.0), 1.0)
    return r2
