"""Report tables and their CSV/JSON serialization.

Each command produces one pandas table, one row per estimator (or per grid
point for sweeps). Column names are the JSON keys. Numbers are written with
12 significant digits; NaN becomes an empty CSV cell or JSON ``null``.
Nothing time-dependent is written, so identical runs give identical files.
"""

from __future__ import annotations

import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import pandas as pd

from meerr.errors import ConfigError
from meerr.estimators import EstimatorConfig, Member
from meerr.population import MomentMatrices, PopulationSpec, build_moments
from meerr.simulation import ComparisonReport, EmpiricalStats, EstimatorStats
from meerr.theory import (
    error_penalty,
    min_mse,
    min_mse_no_error,
    relative_efficiency,
    theory_for,
    variance_plain_mean,
)

log = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"

THEORY_COLUMNS = [
    "kind", "label", "member", "n", "mse_coefficient", "mse", "bias_coefficient", "bias", "relative_efficiency",
]
SIMULATE_COLUMNS = [
    "label", "member", "n", "replications", "seed", "mean_estimate", "bias", "bias_se",
    "mse", "mse_se", "mse_coefficient", "evaluated", "domain_errors", "unstable",
]
COMPARE_COLUMNS = [
    "label", "member", "n", "theory_mse", "empirical_mse", "mse_se", "z_mse",
    "theory_bias", "empirical_bias", "bias_se", "z_bias", "unstable", "passed",
]


def theory_table(
    spec: PopulationSpec,
    estimators: Sequence[EstimatorConfig],
    n: int,
    moments: MomentMatrices | None = None,
) -> pd.DataFrame:
    """Per-estimator first-order results followed by the bound rows."""
    moments = moments if moments is not None else build_moments(spec)
    rows = []
    for config in estimators:
        result = theory_for(config, spec, n, moments)
        rows.append({
            "kind": "estimator",
            "label": result.label,
            "member": result.member.value,
            "n": n,
            "mse_coefficient": result.mse_coefficient,
            "mse": result.mse,
            "bias_coefficient": result.bias_coefficient,
            "bias": result.bias,
            "relative_efficiency": relative_efficiency(result, spec),
        })
    plain = variance_plain_mean(spec, n)
    bounds = {
        "variance_plain_mean": plain,
        "min_mse": min_mse(moments, spec, n),
        "min_mse_no_error": min_mse_no_error(moments, spec, n),
        "error_penalty": error_penalty(moments, spec, n),
    }
    for kind, value in bounds.items():
        efficiency = 100.0 * plain / value if kind != "error_penalty" and value > 0 else math.nan
        rows.append({
            "kind": kind,
            "label": kind,
            "member": "",
            "n": n,
            "mse_coefficient": n * value,
            "mse": value,
            "bias_coefficient": math.nan,
            "bias": math.nan,
            "relative_efficiency": efficiency,
        })
    return pd.DataFrame(rows, columns=THEORY_COLUMNS)


def _stats_record(stats: EmpiricalStats, row: EstimatorStats) -> dict[str, Any]:
    return {
        "label": row.label,
        "member": row.member.value,
        "n": stats.n,
        "replications": stats.replications,
        "seed": stats.seed,
        "mean_estimate": row.mean_estimate,
        "bias": row.bias,
        "bias_se": row.bias_se,
        "mse": row.mse,
        "mse_se": row.mse_se,
        "mse_coefficient": stats.n * row.mse,
        "evaluated": row.evaluated,
        "domain_errors": row.domain_errors,
        "unstable": row.unstable,
    }


def simulate_table(stats: EmpiricalStats) -> pd.DataFrame:
    return pd.DataFrame([_stats_record(stats, row) for row in stats.rows], columns=SIMULATE_COLUMNS)


def compare_table(report: ComparisonReport) -> pd.DataFrame:
    rows = [
        {
            "label": row.label,
            "member": row.member.value,
            "n": row.n,
            "theory_mse": row.theory_mse,
            "empirical_mse": row.empirical_mse,
            "mse_se": row.mse_se,
            "z_mse": row.z_mse,
            "theory_bias": row.theory_bias,
            "empirical_bias": row.empirical_bias,
            "bias_se": row.bias_se,
            "z_bias": row.z_bias,
            "unstable": row.unstable,
            "passed": row.passed,
        }
        for row in report.rows
    ]
    return pd.DataFrame(rows, columns=COMPARE_COLUMNS)


def sweep_row(
    axis: str,
    value: float,
    spec: PopulationSpec,
    estimators: Sequence[EstimatorConfig],
    n: int,
    stats: EmpiricalStats | None = None,
) -> dict[str, Any]:
    """Theory (and optionally Monte Carlo) results at one grid point."""
    moments = build_moments(spec)
    row: dict[str, Any] = {
        axis: value,
        "n": n,
        "variance_plain_mean": variance_plain_mean(spec, n),
        "min_mse": min_mse(moments, spec, n),
        "min_mse_coefficient": n * min_mse(moments, spec, n),
        "min_mse_no_error": min_mse_no_error(moments, spec, n),
        "error_penalty": error_penalty(moments, spec, n),
    }
    for config in estimators:
        row[f"mse:{config.name}"] = theory_for(config, spec, n, moments).mse
    if stats is not None:
        for entry in stats.rows:
            row[f"empirical_mse:{entry.label}"] = entry.mse
            row[f"empirical_mse_se:{entry.label}"] = entry.mse_se
            row[f"empirical_mse_coefficient:{entry.label}"] = n * entry.mse
    return row


def sweep_table(rows: Sequence[dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(list(rows))


def _json_value(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return float(FLOAT_FORMAT % value)
    return value


def render(table: pd.DataFrame, fmt: str, command: str) -> str:
    """The report text for ``table`` in ``fmt`` (csv or json)."""
    if fmt == "csv":
        buffer = io.StringIO()
        table.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return buffer.getvalue()
    records = [
        {column: _json_value(value) for column, value in zip(table.columns, row)}
        for row in table.itertuples(index=False, name=None)
    ]
    return json.dumps({"command": command, "rows": records}, indent=2, allow_nan=False) + "\n"


def write_report(table: pd.DataFrame, out: str, fmt: str, command: str) -> None:
    """Write the rendered report to ``out`` (``-`` for stdout)."""
    text = render(table, fmt, command)
    if out == "-":
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    log.info(f"wrote {len(table)} rows to {path}")


def _float(value: Any) -> float:
    if value is None or value == "":
        return math.nan
    return float(value)


def _bool(value: Any) -> bool:
    if isinstance(value, str):
        return value.strip().lower() == "true"
    return bool(value)


def _read_records(path: Path) -> list[dict[str, Any]]:
    try:
        if path.suffix.lower() == ".json":
            payload = json.loads(path.read_text(encoding="utf-8"))
            records = payload.get("rows", []) if isinstance(payload, dict) else []
        else:
            records = pd.read_csv(path, keep_default_na=True).to_dict(orient="records")
    except ValueError as exc:
        raise ConfigError([(str(path), f"unreadable simulate report: {exc}")]) from exc
    if not isinstance(records, list) or not all(isinstance(record, dict) for record in records):
        return []
    return records


def load_stats(path: Path) -> EmpiricalStats:
    """Read a saved simulate report (CSV or JSON, chosen by suffix).

    Anything that is not a simulate report raises :class:`ConfigError`.
    """
    path = Path(path)
    records = _read_records(path)
    missing = [c for c in SIMULATE_COLUMNS if records and c not in records[0]]
    if not records or missing:
        raise ConfigError([(str(path), f"not a simulate report (missing {', '.join(missing) or 'rows'})")])
    first = records[0]
    try:
        rows = tuple(
            EstimatorStats(
                label=str(record["label"]),
                member=Member(record["member"]),
                mean_estimate=_float(record["mean_estimate"]),
                bias=_float(record["bias"]),
                bias_se=_float(record["bias_se"]),
                mse=_float(record["mse"]),
                mse_se=_float(record["mse_se"]),
                evaluated=int(record["evaluated"]),
                domain_errors=int(record["domain_errors"]),
                unstable=_bool(record["unstable"]),
            )
            for record in records
        )
        return EmpiricalStats(
            n=int(first["n"]),
            replications=int(first["replications"]),
            seed=int(first["seed"]),
            rows=rows,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError([(str(path), f"malformed simulate report: {exc!r}")]) from exc
