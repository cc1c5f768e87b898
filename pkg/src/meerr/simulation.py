"""Seeded Monte Carlo for the estimator family.

True values are drawn i.i.d. (the population is infinite) with the population spec's
means and covariance, contaminated with independent zero-mean gaussian
measurement errors, and every configured estimator is evaluated on each
replication.

Each replication gets its own random stream derived from
``(seed, replication_index)``, so a replication's sample never depends on
which worker drew it. Replications are grouped in blocks; blocks may run on a
process pool. Results are written back by replication index and reduced with
numpy's pairwise summation over the index-ordered arrays, which makes the
statistics bit-identical for any worker count.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from meerr.errors import (
    ComparisonMismatchError,
    DegenerateSampleError,
    InvalidScenarioError,
    LognormalMomentError,
    SingularMomentError,
)
from meerr.estimated_optimum import estimated_optimum_estimate
from meerr.estimators import EstimatorConfig, Member, ObservedSample, check_config, evaluate_many
from meerr.population import PSD_TOLERANCE, PopulationSpec, synthesize_covariance
from meerr.theory import TheoryResult

log = logging.getLogger(__name__)

DISTRIBUTIONS = ("gaussian", "lognormal")
ERROR_DISTRIBUTIONS = ("gaussian",)
MIN_REPLICATIONS = 100
UNSTABLE_FRACTION = 0.01
BLOCK_SIZE = 500


@dataclass(frozen=True)
class SimulationScenario:
    """Everything a Monte Carlo run needs; two equal scenarios give equal results."""

    spec: PopulationSpec
    estimators: tuple[EstimatorConfig, ...]
    n: int
    replications: int
    seed: int
    distribution: str = "gaussian"
    error_distribution: str = "gaussian"

    def __post_init__(self) -> None:
        object.__setattr__(self, "estimators", tuple(self.estimators))
        problems = scenario_issues(self)
        if problems:
            raise InvalidScenarioError("; ".join(message for _, message in problems))


def scenario_issues(scenario: SimulationScenario) -> list[tuple[str, str]]:
    """``(field, message)`` for every scenario-level invariant violated."""
    issues: list[tuple[str, str]] = []
    if not isinstance(scenario.n, int) or scenario.n < 2:
        issues.append(("n", f"n must be an integer >= 2, got {scenario.n!r}"))
    if not isinstance(scenario.replications, int) or scenario.replications < MIN_REPLICATIONS:
        issues.append(("replications", f"replications must be an integer >= {MIN_REPLICATIONS}"))
    if not isinstance(scenario.seed, int) or not 0 <= scenario.seed < 2**64:
        issues.append(("seed", "seed must be an integer in [0, 2^64)"))
    if scenario.distribution not in DISTRIBUTIONS:
        issues.append(("distribution", f"distribution must be one of {', '.join(DISTRIBUTIONS)}"))
    elif scenario.distribution == "lognormal" and (
        scenario.spec.mu0 <= 0 or any(m <= 0 for m in scenario.spec.mu)
    ):
        issues.append(("distribution", "lognormal requires all means positive"))
    if scenario.error_distribution not in ERROR_DISTRIBUTIONS:
        issues.append(("error_distribution", "error_distribution must be gaussian"))
    labels = [config.name for config in scenario.estimators]
    if len(set(labels)) != len(labels):
        issues.append(("estimators", "estimator labels must be unique"))
    for config in scenario.estimators:
        issues.extend(check_config(config, scenario.spec.p))
    return issues


def replication_rng(seed: int, replication_index: int) -> np.random.Generator:
    """Independent generator for one replication, a pure function of its inputs."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(replication_index,)))


def _symmetric_root(matrix: np.ndarray) -> np.ndarray:
    """F with F F' = matrix, tiny negative eigenvalues clamped to zero."""
    values, vectors = scipy.linalg.eigh(matrix)
    return vectors * np.sqrt(np.clip(values, 0.0, None))


class SampleGenerator:
    """Draws observed samples for one population under one scenario's design."""

    def __init__(self, spec: PopulationSpec, scenario: SimulationScenario):
        self.spec = spec
        self.n = scenario.n
        self.seed = scenario.seed
        self.distribution = scenario.distribution
        means = np.concatenate(([spec.mu0], spec.mu_array))
        cov = synthesize_covariance(spec)
        if self.distribution == "lognormal":
            self._location, self._root = self._lognormal_parameters(means, cov)
        else:
            self._location, self._root = means, _symmetric_root(cov)
        self._error_scale = np.concatenate(([spec.sigma0_err], spec.sigma_err))

    @staticmethod
    def _lognormal_parameters(means: np.ndarray, cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ratio = 1.0 + cov / np.outer(means, means)
        if np.any(ratio <= 0.0):
            raise LognormalMomentError("covariance too negative for a lognormal law with these means")
        log_cov = np.log(ratio)
        scale = max(float(np.max(np.diag(log_cov))), 0.0)
        if float(np.min(np.linalg.eigvalsh(log_cov))) < -PSD_TOLERANCE * scale:
            raise LognormalMomentError("implied log-covariance is not PSD")
        location = np.log(means) - 0.5 * np.diag(log_cov)
        return location, _symmetric_root(log_cov)

    def draw(self, replication_index: int) -> ObservedSample:
        rng = replication_rng(self.seed, replication_index)
        width = self._location.size
        # truth first, then errors: error-free twins share their true values
        truth = self._location + rng.standard_normal((self.n, width)) @ self._root.T
        if self.distribution == "lognormal":
            truth = np.exp(truth)
        errors = rng.standard_normal((self.n, width)) * self._error_scale
        observed = truth + errors
        return ObservedSample(y=observed[:, 0], x=observed[:, 1:])


def draw_sample(spec: PopulationSpec, scenario: SimulationScenario, replication_index: int) -> ObservedSample:
    """One observed sample of ``spec`` under ``scenario``'s size, seed and law."""
    return SampleGenerator(spec, scenario).draw(replication_index)


@dataclass(frozen=True)
class EstimatorStats:
    """Monte Carlo summary of one estimator."""

    label: str
    member: Member
    mean_estimate: float
    bias: float
    bias_se: float
    mse: float
    mse_se: float
    evaluated: int
    domain_errors: int
    unstable: bool


@dataclass(frozen=True)
class EmpiricalStats:
    n: int
    replications: int
    seed: int
    rows: tuple[EstimatorStats, ...]

    def row(self, label: str) -> EstimatorStats:
        for row in self.rows:
            if row.label == label:
                return row
        raise KeyError(label)


def _simulate_block(task: tuple[SimulationScenario, int, int]) -> tuple[int, np.ndarray, np.ndarray, np.ndarray]:
    """Draw replications ``start..stop-1``; module level so the pool can pickle it."""
    scenario, start, stop = task
    spec = scenario.spec
    generator = SampleGenerator(spec, scenario)
    plugin = [j for j, config in enumerate(scenario.estimators) if config.member is Member.EST]
    rows = stop - start
    y_bar = np.empty(rows)
    x_bar = np.empty((rows, spec.p))
    plugin_values = np.full((len(plugin), rows), np.nan)
    for k, index in enumerate(range(start, stop)):
        sample = generator.draw(index)
        y_bar[k] = sample.y.mean()
        x_bar[k] = sample.x.mean(axis=0)
        if plugin:
            try:
                plugin_values[:, k] = estimated_optimum_estimate(sample, spec.mu_array)
            except (SingularMomentError, DegenerateSampleError):
                pass
    return start, y_bar, x_bar, plugin_values


def _summarize(config: EstimatorConfig, values: np.ndarray, failed: np.ndarray, mu0: float) -> EstimatorStats:
    total = values.size
    good = values[~failed]
    evaluated = good.size
    domain_errors = total - evaluated
    if evaluated >= 2:
        errors = good - mu0
        squared = errors**2
        mean_estimate = float(np.mean(good))
        bias = float(np.mean(errors))
        mse = float(np.mean(squared))
        bias_se = float(np.std(errors, ddof=1) / math.sqrt(evaluated))
        mse_se = float(np.std(squared, ddof=1) / math.sqrt(evaluated))
    else:
        mean_estimate = bias = mse = bias_se = mse_se = math.nan
    unstable = domain_errors > UNSTABLE_FRACTION * total
    if unstable:
        log.warning(f"{config.name}: {domain_errors} of {total} replications hit domain errors (unstable scenario)")
    return EstimatorStats(
        label=config.name,
        member=config.member,
        mean_estimate=mean_estimate,
        bias=bias,
        bias_se=bias_se,
        mse=mse,
        mse_se=mse_se,
        evaluated=evaluated,
        domain_errors=domain_errors,
        unstable=unstable,
    )


def run_monte_carlo(scenario: SimulationScenario, workers: int = 1) -> EmpiricalStats:
    """Empirical bias and MSE of every estimator in ``scenario``.

    Replications that leave an estimator's domain are excluded from its
    moments and counted in ``domain_errors``.
    """
    spec = scenario.spec
    total = scenario.replications
    started = time.perf_counter()
    log.info(
        f"monte carlo: {len(scenario.estimators)} estimators, n={scenario.n}, {total} replications, "
        f"seed={scenario.seed}, {scenario.distribution}, workers={workers}"
    )
    tasks = [(scenario, start, min(start + BLOCK_SIZE, total)) for start in range(0, total, BLOCK_SIZE)]
    plugin = [j for j, config in enumerate(scenario.estimators) if config.member is Member.EST]
    y_bar = np.empty(total)
    x_bar = np.empty((total, spec.p))
    plugin_values = np.empty((len(plugin), total))

    def place(result: tuple[int, np.ndarray, np.ndarray, np.ndarray]) -> None:
        start, block_y, block_x, block_plugin = result
        stop = start + block_y.size
        y_bar[start:stop] = block_y
        x_bar[start:stop] = block_x
        plugin_values[:, start:stop] = block_plugin
        log.debug(f"replications {start}-{stop - 1} done")

    if workers <= 1:
        for task in tasks:
            place(_simulate_block(task))
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_simulate_block, task) for task in tasks]
            for future in as_completed(futures):
                place(future.result())

    rows = []
    for j, config in enumerate(scenario.estimators):
        if config.member is Member.EST:
            values = plugin_values[plugin.index(j)]
            failed = np.isnan(values)
        else:
            batch = evaluate_many(config, y_bar, x_bar, spec.mu_array)
            values, failed = batch.values, batch.failed
        rows.append(_summarize(config, values, failed, spec.mu0))
    log.info(f"monte carlo finished in {time.perf_counter() - started:.1f}s")
    return EmpiricalStats(n=scenario.n, replications=total, seed=scenario.seed, rows=tuple(rows))


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    member: Member
    n: int
    theory_mse: float
    empirical_mse: float
    mse_se: float
    z_mse: float
    theory_bias: float
    empirical_bias: float
    bias_se: float
    z_bias: float
    unstable: bool
    passed: bool


@dataclass(frozen=True)
class ComparisonReport:
    z_threshold: float
    rows: tuple[ComparisonRow, ...]

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)


def _z_score(empirical: float, theoretical: float, se: float) -> float:
    if math.isnan(theoretical) or math.isnan(empirical):
        return math.nan
    gap = empirical - theoretical
    if se > 0.0:
        return gap / se
    return 0.0 if gap == 0.0 else math.copysign(math.inf, gap)


def compare_theory(
    stats: EmpiricalStats,
    theory: Sequence[TheoryResult],
    z_threshold: float = 4.0,
) -> ComparisonReport:
    """z-scores of empirical against first-order MSE and bias, row by row.

    Rows whose theoretical bias is NaN are judged on MSE alone; unstable rows
    always fail.
    """
    if len(theory) != len(stats.rows):
        raise ComparisonMismatchError(f"{len(stats.rows)} empirical rows but {len(theory)} theoretical rows")
    rows = []
    for empirical, expected in zip(stats.rows, theory):
        if empirical.label != expected.label:
            raise ComparisonMismatchError(f"row {empirical.label!r} compared with {expected.label!r}")
        if expected.n != stats.n:
            raise ComparisonMismatchError(f"{expected.label}: theory at n={expected.n}, simulation at n={stats.n}")
        z_mse = _z_score(empirical.mse, expected.mse, empirical.mse_se)
        z_bias = _z_score(empirical.bias, expected.bias, empirical.bias_se)
        passed = (
            not empirical.unstable
            and abs(z_mse) <= z_threshold
            and (math.isnan(expected.bias) or abs(z_bias) <= z_threshold)
        )
        if not passed:
            log.warning(f"{expected.label} failed comparison: z_mse={z_mse:.2f} z_bias={z_bias:.2f}")
        rows.append(
            ComparisonRow(
                label=expected.label,
                member=expected.member,
                n=stats.n,
                theory_mse=expected.mse,
                empirical_mse=empirical.mse,
                mse_se=empirical.mse_se,
                z_mse=z_mse,
                theory_bias=expected.bias,
                empirical_bias=empirical.bias,
                bias_se=empirical.bias_se,
                z_bias=z_bias,
                unstable=empirical.unstable,
                passed=passed,
            )
        )
    return ComparisonReport(z_threshold=z_threshold, rows=tuple(rows))
