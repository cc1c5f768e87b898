"""Scenario documents: parsing, validation and emission.

A document is JSON of the form::

    {
      "population": {"mu0": 20, "mu": [10, 8], "c0": 0.3, "c": [0.2, 0.25],
                     "c0_err": 0.1, "c_err": [0.1, 0.05],
                     "rho0": [0.6, 0.4], "rho": [[1, 0.5], [0.5, 1]]},
      "estimators": [{"id": "M1", "omega": [0.5, 0.5]},
                     {"id": "M18", "optimal": true, "label": "diff-opt"}],
      "simulation": {"n": 400, "replications": 40000, "seed": 7,
                     "distribution": "gaussian"},
      "run": {"command": "compare", "format": "csv", "z": 4.0}
    }

Every problem found is reported at once as a :class:`ConfigError` whose
``issues`` carry JSON paths such as ``estimators[0].omega``.
"""

from __future__ import annotations

import json
import logging
import math
import os
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

from meerr.errors import ConfigError, InvalidScenarioError, MeerrError
from meerr.estimators import EstimatorConfig, Member, check_config, optimal_params
from meerr.population import PopulationSpec, build_moments, validate_spec
from meerr.simulation import DISTRIBUTIONS, ERROR_DISTRIBUTIONS, MIN_REPLICATIONS, SimulationScenario

log = logging.getLogger(__name__)

COMMANDS = ("theory", "simulate", "compare", "sweep")
FORMATS = ("csv", "json")
DEFAULT_REPLICATIONS = 10_000
DEFAULT_Z = 4.0

_AXIS = re.compile(r"^(n|c0_err|c_err:(\d+))$")


def default_workers() -> int:
    """Monte Carlo worker count from ``MEERR_WORKERS`` (default 1)."""
    raw = os.environ.get("MEERR_WORKERS", "1")
    try:
        return max(int(raw), 1)
    except ValueError:
        log.warning(f"ignoring MEERR_WORKERS={raw!r}: not an integer")
        return 1


@dataclass(frozen=True)
class RunConfig:
    """What to run and where to write it."""

    command: str | None = None
    config_path: Path | None = None
    out: str = "-"
    fmt: str = "csv"
    z: float = DEFAULT_Z
    axis: str | None = None
    grid: tuple[float, ...] = ()
    workers: int = 1
    simulate: bool = False
    stats_path: Path | None = None

    def override(self, **values: Any) -> RunConfig:
        """Copy with every non-None value replaced."""
        return replace(self, **{k: v for k, v in values.items() if v is not None})


def parse_axis(axis: str, p: int) -> tuple[str, int | None]:
    """Split ``n``, ``c0_err`` or ``c_err:<i>`` (1-based) into name and 0-based index."""
    match = _AXIS.match(axis)
    if not match:
        raise ValueError(f"axis must be n, c0_err or c_err:<i>, got {axis!r}")
    if match.group(2) is None:
        return match.group(1), None
    index = int(match.group(2))
    if not 1 <= index <= p:
        raise ValueError(f"c_err index must lie in 1..{p}, got {index}")
    return "c_err", index - 1


def run_issues(run: RunConfig, p: int) -> list[tuple[str, str]]:
    """``(path, message)`` for every RunConfig invariant violated."""
    issues: list[tuple[str, str]] = []
    if run.command is not None and run.command not in COMMANDS:
        issues.append(("run.command", f"command must be one of {', '.join(COMMANDS)}"))
    if run.fmt not in FORMATS:
        issues.append(("run.format", f"format must be csv or json, got {run.fmt!r}"))
    if not (isinstance(run.z, (int, float)) and math.isfinite(run.z) and run.z > 0):
        issues.append(("run.z", "z must be a positive number"))
    if not isinstance(run.workers, int) or run.workers < 1:
        issues.append(("run.workers", "workers must be a positive integer"))
    if run.command == "sweep":
        if run.axis is None:
            issues.append(("run.axis", "sweep needs an axis"))
        if not run.grid:
            issues.append(("run.grid", "sweep needs a nonempty grid"))
    if run.axis is not None:
        try:
            name, _ = parse_axis(run.axis, p)
        except ValueError as exc:
            issues.append(("run.axis", str(exc)))
            name = None
        if name == "n" and any(g != int(g) or g < 2 for g in run.grid):
            issues.append(("run.grid", "sample sizes must be integers >= 2"))
        if name in ("c0_err", "c_err") and any(g < 0 for g in run.grid):
            issues.append(("run.grid", "error CVs must be nonnegative"))
    if any(not math.isfinite(g) for g in run.grid):
        issues.append(("run.grid", "grid values must be finite"))
    elif any(b <= a for a, b in zip(run.grid, run.grid[1:])):
        issues.append(("run.grid", "grid must be strictly increasing"))
    return issues


def parse_grid(text: str) -> tuple[float, ...]:
    """``"0,0.05,0.1"`` to a tuple of floats."""
    return tuple(float(part) for part in text.split(",") if part.strip())


class _Reader:
    """Typed access to a JSON mapping that records issues instead of raising."""

    def __init__(self, issues: list[tuple[str, str]]):
        self.issues = issues

    def add(self, path: str, message: str) -> None:
        self.issues.append((path, message))

    def section(self, document: Mapping, key: str, required: bool = True) -> Mapping | None:
        value = document.get(key)
        if value is None:
            if required:
                self.add(key, "missing section")
            return None
        if not isinstance(value, Mapping):
            self.add(key, "must be an object")
            return None
        return value

    def number(self, data: Mapping, key: str, path: str, default: Any = ..., integer: bool = False) -> Any:
        if key not in data:
            if default is ...:
                self.add(path, "required")
                return None
            return default
        value = data[key]
        kind = "an integer" if integer else "a number"
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.add(path, f"must be {kind}")
            return None
        if integer and not isinstance(value, int):
            if float(value).is_integer():
                return int(value)
            self.add(path, f"must be {kind}")
            return None
        if not math.isfinite(value):
            self.add(path, "must be finite")
            return None
        return value

    def vector(self, data: Mapping, key: str, path: str, required: bool = True) -> tuple[float, ...] | None:
        if key not in data or data[key] is None:
            if required:
                self.add(path, "required")
            return None
        value = data[key]
        if not isinstance(value, list) or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            self.add(path, "must be a list of numbers")
            return None
        return tuple(float(v) for v in value)

    def matrix(self, data: Mapping, key: str, path: str) -> tuple[tuple[float, ...], ...] | None:
        value = data.get(key)
        if not isinstance(value, list) or not all(isinstance(row, list) for row in value):
            self.add(path, "must be a list of lists of numbers")
            return None
        rows = []
        for i, entry in enumerate(value):
            row = self._row(entry, f"{path}[{i}]")
            if row is None:
                return None
            rows.append(row)
        return tuple(rows)

    def _row(self, value: Any, path: str) -> tuple[float, ...] | None:
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            self.add(path, "must be a list of numbers")
            return None
        return tuple(float(v) for v in value)

    def choice(self, data: Mapping, key: str, path: str, options: tuple[str, ...], default: str) -> str | None:
        value = data.get(key, default)
        if value not in options:
            self.add(path, f"must be one of {', '.join(options)}")
            return None
        return value


_VIOLATION_PATHS = (
    (re.compile(r"^auxiliary mean zero \(variate (\d+)\)"), lambda m: f"population.mu[{int(m.group(1)) - 1}]"),
    (re.compile(r"^study mean zero"), lambda m: "population.mu0"),
    (re.compile(r"^(c|c_err|rho0) has length"), lambda m: f"population.{m.group(1)}"),
    (re.compile(r"^rho0 "), lambda m: "population.rho0"),
    (re.compile(r"^(rho |augmented correlation)"), lambda m: "population.rho"),
)


def _violation_path(message: str) -> str:
    for pattern, path in _VIOLATION_PATHS:
        match = pattern.match(message)
        if match:
            return path(match)
    return "population"


def _parse_population(reader: _Reader, data: Mapping) -> PopulationSpec | None:
    before = len(reader.issues)
    mu0 = reader.number(data, "mu0", "population.mu0")
    mu = reader.vector(data, "mu", "population.mu")
    c0 = reader.number(data, "c0", "population.c0")
    c = reader.vector(data, "c", "population.c")
    c0_err = reader.number(data, "c0_err", "population.c0_err", default=0.0)
    c_err = reader.vector(data, "c_err", "population.c_err", required=False)
    rho0 = reader.vector(data, "rho0", "population.rho0")
    if mu is not None and len(mu) == 1 and "rho" not in data:
        rho = ((1.0,),)
    else:
        rho = reader.matrix(data, "rho", "population.rho")
    if len(reader.issues) > before:
        return None
    if c_err is None:
        c_err = (0.0,) * len(mu)
    spec = PopulationSpec(mu0=mu0, mu=mu, c0=c0, c=c, c0_err=c0_err, c_err=c_err, rho0=rho0, rho=rho)
    report = validate_spec(spec)
    for violation in report.violations:
        reader.add(_violation_path(violation), violation)
    return spec if report.passed else None


def _unique_labels(entries: list[tuple[int, str | None, Member]]) -> dict[int, str]:
    explicit = {label for _, label, _ in entries if label}
    seen: dict[str, int] = {}
    labels = {}
    for index, label, member in entries:
        if label:
            labels[index] = label
            continue
        base = member.value
        count = seen.get(base, 0) + 1
        seen[base] = count
        candidate = base if count == 1 else f"{base}_{count}"
        while candidate in explicit:
            count += 1
            seen[base] = count
            candidate = f"{base}_{count}"
        labels[index] = candidate
    return labels


def _parse_estimators(reader: _Reader, entries: Any, spec: PopulationSpec | None) -> list[EstimatorConfig]:
    if not isinstance(entries, list) or not entries:
        reader.add("estimators", "must be a nonempty list")
        return []
    parsed: list[tuple[int, Mapping, Member]] = []
    for i, entry in enumerate(entries):
        path = f"estimators[{i}]"
        if not isinstance(entry, Mapping):
            reader.add(path, "must be an object")
            continue
        unknown = set(entry) - {"id", "omega", "alpha", "theta", "q", "label", "optimal"}
        for key in sorted(unknown):
            reader.add(f"{path}.{key}", "unknown key")
        try:
            member = Member(entry.get("id"))
        except ValueError:
            reader.add(f"{path}.id", f"unknown estimator id {entry.get('id')!r}")
            continue
        label = entry.get("label")
        if label is not None and (not isinstance(label, str) or not label):
            reader.add(f"{path}.label", "must be a nonempty string")
            continue
        parsed.append((i, entry, member))

    labels = _unique_labels([(i, entry.get("label"), member) for i, entry, member in parsed])
    if len(set(labels.values())) != len(labels):
        reader.add("estimators", "estimator labels must be unique")

    configs = []
    for i, entry, member in parsed:
        path = f"estimators[{i}]"
        q = reader.number(entry, "q", f"{path}.q", default=None, integer=True)
        if entry.get("optimal"):
            if any(key in entry for key in ("omega", "alpha", "theta")):
                reader.add(path, "optimal estimators take no explicit parameters")
                continue
            if q is not None and member is not Member.M11:
                reader.add(f"{path}.q", f"q is not a parameter of {member}")
                continue
            if spec is None:
                continue
            try:
                config = optimal_params(member, spec, q=q)
            except MeerrError as exc:
                field = getattr(exc, "field", None)
                reader.add(f"{path}.{field}" if field else path, str(exc))
                continue
            configs.append(replace(config, label=labels[i], optimal=True))
            continue
        vectors = {
            name: reader.vector(entry, name, f"{path}.{name}", required=False)
            for name in ("omega", "alpha", "theta")
        }
        config = EstimatorConfig(member, q=q, label=labels[i], **vectors)
        if spec is not None:
            for field, message in check_config(config, spec.p):
                reader.add(f"{path}.{field}", message)
        configs.append(config)
    return configs


def parse_config(document: Mapping | str, config_path: Path | None = None) -> tuple[RunConfig, SimulationScenario]:
    """Validate a scenario document and build the run and scenario objects.

    ``document`` is a parsed mapping or JSON text. Raises :class:`ConfigError`
    listing every issue found.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError([("$", f"malformed JSON: {exc}")]) from exc
    if not isinstance(document, Mapping):
        raise ConfigError([("$", "document must be a JSON object")])

    issues: list[tuple[str, str]] = []
    reader = _Reader(issues)
    for key in sorted(set(document) - {"population", "estimators", "simulation", "run"}):
        reader.add(key, "unknown section")

    population = reader.section(document, "population")
    spec = _parse_population(reader, population) if population is not None else None
    estimators = _parse_estimators(reader, document.get("estimators"), spec)

    simulation = reader.section(document, "simulation")
    n = replications = seed = distribution = error_distribution = None
    if simulation is not None:
        n = reader.number(simulation, "n", "simulation.n", integer=True)
        replications = reader.number(
            simulation, "replications", "simulation.replications", default=DEFAULT_REPLICATIONS, integer=True
        )
        seed = reader.number(simulation, "seed", "simulation.seed", default=0, integer=True)
        distribution = reader.choice(simulation, "distribution", "simulation.distribution", DISTRIBUTIONS, "gaussian")
        error_distribution = reader.choice(
            simulation, "error_distribution", "simulation.error_distribution", ERROR_DISTRIBUTIONS, "gaussian"
        )
        if n is not None and n < 2:
            reader.add("simulation.n", "n must be >= 2")
        if replications is not None and replications < MIN_REPLICATIONS:
            reader.add("simulation.replications", f"replications must be >= {MIN_REPLICATIONS}")
        if seed is not None and not 0 <= seed < 2**64:
            reader.add("simulation.seed", "seed must lie in [0, 2^64)")
        if (
            distribution == "lognormal"
            and spec is not None
            and (spec.mu0 <= 0 or any(m <= 0 for m in spec.mu))
        ):
            reader.add("simulation.distribution", "lognormal requires all means positive")

    run = _parse_run(reader, document, config_path, spec.p if spec is not None else 1)

    if issues:
        raise ConfigError(issues)
    try:
        scenario = SimulationScenario(
            spec=spec,
            estimators=tuple(estimators),
            n=n,
            replications=replications,
            seed=seed,
            distribution=distribution,
            error_distribution=error_distribution,
        )
    except InvalidScenarioError as exc:
        raise ConfigError([("simulation", str(exc))]) from exc
    log.debug(f"parsed scenario: p={spec.p}, {len(estimators)} estimators, n={n}")
    return run, scenario


def _parse_run(reader: _Reader, document: Mapping, config_path: Path | None, p: int) -> RunConfig:
    data = reader.section(document, "run", required=False) or {}
    grid = reader.vector(data, "grid", "run.grid", required=False) or ()
    command = data.get("command")
    fmt = data.get("format", "csv")
    stats = data.get("stats")
    run = RunConfig(
        command=command,
        config_path=config_path,
        out=data.get("out", "-"),
        fmt=fmt,
        z=reader.number(data, "z", "run.z", default=DEFAULT_Z),
        axis=data.get("axis"),
        grid=grid,
        workers=reader.number(data, "workers", "run.workers", default=default_workers(), integer=True),
        simulate=bool(data.get("simulate", False)),
        stats_path=Path(stats) if stats else None,
    )
    if run.z is None or run.workers is None:
        return run
    for issue in run_issues(run, p):
        reader.add(*issue)
    return run


def emit_document(run: RunConfig, scenario: SimulationScenario) -> dict[str, Any]:
    """The JSON document that :func:`parse_config` turns back into ``(run, scenario)``."""
    spec = scenario.spec
    estimators = []
    for config in scenario.estimators:
        entry: dict[str, Any] = {"id": config.member.value}
        if config.optimal:
            entry["optimal"] = True
        else:
            for name in ("omega", "alpha", "theta"):
                value = getattr(config, name)
                if value is not None:
                    entry[name] = list(value)
        if config.q is not None:
            entry["q"] = config.q
        entry["label"] = config.name
        estimators.append(entry)
    run_section: dict[str, Any] = {
        "format": run.fmt,
        "z": run.z,
        "grid": list(run.grid),
        "workers": run.workers,
        "simulate": run.simulate,
        "out": run.out,
    }
    if run.command is not None:
        run_section["command"] = run.command
    if run.axis is not None:
        run_section["axis"] = run.axis
    if run.stats_path is not None:
        run_section["stats"] = str(run.stats_path)
    return {
        "population": {
            "mu0": spec.mu0,
            "mu": list(spec.mu),
            "c0": spec.c0,
            "c": list(spec.c),
            "c0_err": spec.c0_err,
            "c_err": list(spec.c_err),
            "rho0": list(spec.rho0),
            "rho": [list(row) for row in spec.rho],
        },
        "estimators": estimators,
        "simulation": {
            "n": scenario.n,
            "replications": scenario.replications,
            "seed": scenario.seed,
            "distribution": scenario.distribution,
            "error_distribution": scenario.error_distribution,
        },
        "run": run_section,
    }


def load_document(path: Path) -> tuple[RunConfig, SimulationScenario]:
    """Read and parse a scenario file."""
    return parse_config(Path(path).read_text(encoding="utf-8"), config_path=Path(path))


def with_axis_value(scenario: SimulationScenario, axis: str, value: float) -> SimulationScenario:
    """The scenario with the sweep axis set to ``value``.

    Estimators flagged ``optimal`` are re-solved on the new population.
    """
    name, index = parse_axis(axis, scenario.spec.p)
    if name == "n":
        return replace(scenario, n=int(value))
    if name == "c0_err":
        spec = replace(scenario.spec, c0_err=value)
    else:
        c_err = list(scenario.spec.c_err)
        c_err[index] = value
        spec = replace(scenario.spec, c_err=tuple(c_err))
    return replace(scenario, spec=spec, estimators=reoptimize(scenario.estimators, spec))


def reoptimize(estimators: Sequence[EstimatorConfig], spec: PopulationSpec) -> tuple[EstimatorConfig, ...]:
    """Optimal estimators re-solved for ``spec``; the others unchanged."""
    moments = build_moments(spec)
    return tuple(
        replace(optimal_params(config.member, spec, moments, q=config.q), label=config.label, optimal=True)
        if config.optimal
        else config
        for config in estimators
    )
