"""Tests for scenario document parsing."""

import json
from pathlib import Path

import pytest

from meerr.config import (
    RunConfig,
    default_workers,
    emit_document,
    load_document,
    parse_axis,
    parse_config,
    parse_grid,
    run_issues,
    with_axis_value,
)
from meerr.errors import ConfigError
from meerr.estimators import Member, optimal_params


def minimal_document(**sections):
    document = {
        "population": {"mu0": 50.0, "mu": [25.0], "c0": 0.2, "c": [0.15], "rho0": [0.7]},
        "estimators": [{"id": "M1", "omega": [1.0]}],
        "simulation": {"n": 100},
    }
    document.update(sections)
    return document


def document_w(**sections):
    document = {
        "population": {
            "mu0": 20.0,
            "mu": [10.0, 8.0],
            "c0": 0.3,
            "c": [0.2, 0.25],
            "c0_err": 0.1,
            "c_err": [0.1, 0.05],
            "rho0": [0.6, 0.4],
            "rho": [[1.0, 0.5], [0.5, 1.0]],
        },
        "estimators": [
            {"id": "PLAIN"},
            {"id": "M1", "omega": [0.5, 0.5]},
            {"id": "M18", "optimal": True},
        ],
        "simulation": {"n": 100, "replications": 2000, "seed": 42},
    }
    document.update(sections)
    return document


def issue_paths(excinfo):
    return [path for path, _ in excinfo.value.issues]


class TestParseConfig:
    def test_minimal_single_auxiliary(self):
        run, scenario = parse_config(minimal_document())
        assert scenario.spec.p == 1
        assert scenario.spec.rho == ((1.0,),)
        assert scenario.spec.c_err == (0.0,)
        assert scenario.spec.c0_err == 0.0
        assert scenario.replications == 10_000
        assert scenario.seed == 0
        assert scenario.distribution == "gaussian"
        assert run.fmt == "csv"
        assert run.z == 4.0
        assert run.command is None

    def test_accepts_json_text(self):
        _, scenario = parse_config(json.dumps(document_w()))
        assert [c.name for c in scenario.estimators] == ["PLAIN", "M1", "M18"]

    def test_malformed_json(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config("{not json")
        assert issue_paths(excinfo) == ["$"]

    def test_omega_sum_reported_with_path(self):
        document = document_w(estimators=[{"id": "M1", "omega": [0.5, 0.4]}])
        with pytest.raises(ConfigError) as excinfo:
            parse_config(document)
        assert issue_paths(excinfo) == ["estimators[0].omega"]
        assert "sum to 1" in excinfo.value.issues[0][1]

    def test_asymmetric_rho_reported_with_path(self):
        document = document_w()
        document["population"]["rho"] = [[1.0, 0.5], [0.4, 1.0]]
        with pytest.raises(ConfigError) as excinfo:
            parse_config(document)
        assert "population.rho" in issue_paths(excinfo)

    def test_zero_auxiliary_mean_path(self):
        document = document_w()
        document["population"]["mu"] = [10.0, 0.0]
        with pytest.raises(ConfigError) as excinfo:
            parse_config(document)
        assert "population.mu[1]" in issue_paths(excinfo)

    def test_all_issues_reported_together(self):
        document = document_w(
            estimators=[{"id": "M99"}, {"id": "M2", "omega": [1.0]}, {"id": "M12", "alpha": [1, 2], "beta": 3}],
            simulation={"replications": 10},
            extra={},
        )
        with pytest.raises(ConfigError) as excinfo:
            parse_config(document)
        paths = issue_paths(excinfo)
        assert "extra" in paths
        assert "estimators[0].id" in paths
        assert "estimators[1].omega" in paths
        assert "estimators[2].beta" in paths
        assert "simulation.n" in paths
        assert "simulation.replications" in paths

    def test_missing_sections(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config({})
        assert {"population", "estimators", "simulation"} <= set(issue_paths(excinfo))

    def test_repeated_members_get_suffixed_labels(self):
        document = document_w(
            estimators=[
                {"id": "M1", "omega": [0.5, 0.5]},
                {"id": "M1", "omega": [0.2, 0.8]},
                {"id": "M1", "omega": [0.9, 0.1], "label": "heavy"},
            ]
        )
        _, scenario = parse_config(document)
        assert [c.name for c in scenario.estimators] == ["M1", "M1_2", "heavy"]

    def test_explicit_label_collision(self):
        document = document_w(
            estimators=[{"id": "M1", "omega": [0.5, 0.5], "label": "x"}, {"id": "M2", "omega": [0.5, 0.5], "label": "x"}]
        )
        with pytest.raises(ConfigError):
            parse_config(document)

    def test_optimal_resolves_parameters(self):
        _, scenario = parse_config(document_w())
        m18 = scenario.estimators[2]
        assert m18.member is Member.M18
        assert m18.alpha == pytest.approx((-20.0 * 0.6057142857 / 10.0, -20.0 * 0.2285714286 / 8.0), rel=1e-6)

    def test_optimal_with_parameters_rejected(self):
        document = document_w(estimators=[{"id": "M1", "optimal": True, "omega": [0.5, 0.5]}])
        with pytest.raises(ConfigError) as excinfo:
            parse_config(document)
        assert issue_paths(excinfo) == ["estimators[0]"]

    def test_optimal_with_foreign_q_rejected(self):
        document = document_w(estimators=[{"id": "M1", "optimal": True, "q": 1}])
        with pytest.raises(ConfigError) as excinfo:
            parse_config(document)
        assert issue_paths(excinfo) == ["estimators[0].q"]

    def test_optimal_flag_is_written_back(self):
        run, scenario = parse_config(document_w())
        entries = emit_document(run, scenario)["estimators"]
        assert entries[2] == {"id": "M18", "optimal": True, "label": "M18"}
        assert entries[1]["omega"] == [0.5, 0.5]

    def test_lognormal_needs_positive_means(self):
        document = document_w(simulation={"n": 100, "distribution": "lognormal"})
        document["population"]["mu"] = [-10.0, 8.0]
        with pytest.raises(ConfigError) as excinfo:
            parse_config(document)
        assert "simulation.distribution" in issue_paths(excinfo)

    def test_round_trip(self, tmp_path):
        run_section = {"command": "sweep", "axis": "c_err:2", "grid": [0.0, 0.05], "format": "json", "workers": 2}
        run, scenario = parse_config(document_w(run=run_section), config_path=tmp_path / "w.json")
        again = parse_config(json.loads(json.dumps(emit_document(run, scenario))), config_path=run.config_path)
        assert again == (run, scenario)

    def test_load_document(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(minimal_document()), encoding="utf-8")
        run, scenario = load_document(path)
        assert run.config_path == Path(path)
        assert scenario.n == 100


class TestRunSection:
    def test_grid_must_increase(self):
        run = {"command": "sweep", "axis": "c0_err", "grid": [0.1, 0.05]}
        with pytest.raises(ConfigError) as excinfo:
            parse_config(document_w(run=run))
        assert issue_paths(excinfo) == ["run.grid"]

    def test_sweep_needs_axis_and_grid(self):
        issues = run_issues(RunConfig(command="sweep"), 2)
        assert [path for path, _ in issues] == ["run.axis", "run.grid"]

    def test_sample_size_grid_must_be_integers(self):
        issues = run_issues(RunConfig(command="sweep", axis="n", grid=(50.0, 100.5)), 2)
        assert [path for path, _ in issues] == ["run.grid"]

    def test_bad_format(self):
        assert [path for path, _ in run_issues(RunConfig(fmt="xml"), 1)] == ["run.format"]

    def test_workers_from_environment(self, monkeypatch):
        monkeypatch.setenv("MEERR_WORKERS", "3")
        assert default_workers() == 3
        run, _ = parse_config(document_w())
        assert run.workers == 3

    def test_bad_workers_environment_ignored(self, monkeypatch):
        monkeypatch.setenv("MEERR_WORKERS", "many")
        assert default_workers() == 1

    def test_override_skips_none(self):
        run = RunConfig(fmt="json", workers=4).override(fmt=None, workers=2, out="x.csv")
        assert run == RunConfig(fmt="json", workers=2, out="x.csv")


class TestAxis:
    def test_parse_axis(self):
        assert parse_axis("n", 2) == ("n", None)
        assert parse_axis("c0_err", 2) == ("c0_err", None)
        assert parse_axis("c_err:2", 2) == ("c_err", 1)

    @pytest.mark.parametrize("axis", ["c_err:0", "c_err:3", "rho", "c_err"])
    def test_bad_axis(self, axis):
        with pytest.raises(ValueError):
            parse_axis(axis, 2)

    def test_parse_grid(self):
        assert parse_grid("0,0.05, 0.1") == (0.0, 0.05, 0.1)

    def test_with_axis_value(self):
        _, scenario = parse_config(document_w())
        assert with_axis_value(scenario, "c_err:2", 0.3).spec.c_err == (0.1, 0.3)
        assert with_axis_value(scenario, "c0_err", 0.0).spec.c0_err == 0.0
        assert with_axis_value(scenario, "n", 400.0).n == 400

    def test_optimal_estimators_resolved_per_point(self):
        _, scenario = parse_config(document_w())
        point = with_axis_value(scenario, "c_err:1", 0.4)
        resolved = optimal_params(Member.M18, point.spec)
        assert point.estimators[2].alpha == pytest.approx(resolved.alpha, rel=1e-12)
        assert point.estimators[2].alpha != pytest.approx(scenario.estimators[2].alpha, rel=1e-3)
        assert point.estimators[2].optimal
        assert point.estimators[1] == scenario.estimators[1]
