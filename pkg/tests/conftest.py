"""Shared scenarios for the meerr test suite."""

import numpy as np
import pytest

from meerr.estimators import EstimatorConfig, FAMILY, Member
from meerr.population import PopulationSpec, build_moments


def scenario_w(**overrides) -> PopulationSpec:
    values = dict(
        mu0=20.0,
        mu=(10.0, 8.0),
        c0=0.3,
        c=(0.2, 0.25),
        c0_err=0.1,
        c_err=(0.1, 0.05),
        rho0=(0.6, 0.4),
        rho=((1.0, 0.5), (0.5, 1.0)),
    )
    values.update(overrides)
    return PopulationSpec(**values)


def random_spec(rng: np.random.Generator, p: int, with_errors: bool = True) -> PopulationSpec:
    """A valid spec with a random positive definite correlation structure."""
    g = rng.normal(size=(p + 1, p + 3))
    s = g @ g.T
    scale = 1.0 / np.sqrt(np.diag(s))
    corr = s * np.outer(scale, scale)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return PopulationSpec(
        mu0=rng.uniform(5.0, 50.0),
        mu=rng.uniform(5.0, 50.0, size=p),
        c0=rng.uniform(0.1, 0.5),
        c=rng.uniform(0.1, 0.5, size=p),
        c0_err=rng.uniform(0.01, 0.2) if with_errors else 0.0,
        c_err=rng.uniform(0.01, 0.2, size=p) if with_errors else np.zeros(p),
        rho0=corr[0, 1:],
        rho=corr[1:, 1:],
    )


def random_config(rng: np.random.Generator, member: Member, p: int) -> EstimatorConfig:
    """Random valid parameters for ``member`` with ``p`` auxiliaries."""
    if member in (Member.M9, Member.M10):
        return EstimatorConfig(member, omega=_weights(rng, p + 1))
    if member is Member.M11:
        return EstimatorConfig(member, omega=_weights(rng, p), q=int(rng.integers(1, p)))
    if member is Member.M17:
        omega = _weights(rng, p)
        # exponents theta_i / omega_i stay in (-2, 3)
        return EstimatorConfig(member, omega=omega, theta=omega * rng.uniform(-2.0, 3.0, size=p))
    if member in FAMILY[:8]:
        return EstimatorConfig(member, omega=_weights(rng, p))
    if member in (Member.M15, Member.M16):
        return EstimatorConfig(member, theta=rng.normal(size=p))
    return EstimatorConfig(member, alpha=rng.normal(size=p))


def _weights(rng: np.random.Generator, size: int) -> np.ndarray:
    w = rng.dirichlet(np.ones(size))
    w[-1] = 1.0 - w[:-1].sum()
    return w


@pytest.fixture
def spec_w():
    """Two auxiliaries with errors on every variate."""
    return scenario_w()


@pytest.fixture
def moments_w(spec_w):
    return build_moments(spec_w)


@pytest.fixture
def spec_one():
    """One auxiliary, the classical ratio setting."""
    return PopulationSpec(
        mu0=50.0,
        mu=(25.0,),
        c0=0.2,
        c=(0.15,),
        c0_err=0.05,
        c_err=(0.05,),
        rho0=(0.7,),
        rho=((1.0,),),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
