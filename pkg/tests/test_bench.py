import json
import math

import numpy as np
import pandas as pd
import pytest

from load_shaper import cli
from load_shaper.bench.experiments import ExperimentSpec, parse_method, pseudogap, run_matrix, summarize
from load_shaper.bench.profiles import PROFILE_COLUMNS, export_load_profile, profile_sparsity
from load_shaper.core.instance_io import read_instance, read_schedule_csv
from load_shaper.core.model import baseline_schedule, objective_value


# =========================================================
# Metrics
# =========================================================

@pytest.mark.parametrize(
    "method, oracle, expected",
    [(100.0, 100.0, 0.0), (101.0, 100.0, 0.01), (0.0, 0.0, 0.0), (1.0, 0.0, math.inf)],
)
def test_pseudogap(method, oracle, expected):
    assert pseudogap(method, oracle) == pytest.approx(expected)


def test_parse_method():
    assert parse_method("central@1e-4") == ("central", 1e-4)
    assert parse_method("dw@inf") == ("dw", math.inf)

    for bad in ("cplex@1e-4", "dw", "dw@five", "dw@0.5", "central@-1"):
        with pytest.raises(ValueError):
            parse_method(bad)


def test_summary_ignores_dnf_runs():
    runs = pd.DataFrame(
        {
            "N": [2, 2, 2],
            "method": ["dw@5"] * 3,
            "wall_s": [1.0, 3.0, 100.0],
            "pseudogap": [0.0, 0.02, 0.5],
            "dnf": [False, False, True],
        }
    )
    summary = summarize(runs).set_index("metric")

    assert summary.loc["wall_s", "n"] == 2
    assert summary.loc["wall_s", "dnf"] == 1
    assert summary.loc["wall_s", "mean"] == pytest.approx(2.0)
    assert summary.loc["pseudogap", "std"] == pytest.approx(np.std([0.0, 0.02], ddof=1))
    # t(0.975, 1) * std / sqrt(2)
    assert summary.loc["wall_s", "ci95"] == pytest.approx(12.7062 * math.sqrt(2.0) / math.sqrt(2.0), rel=1e-4)


def test_profile_export(wm_community, tmp_path):
    path = export_load_profile(wm_community, baseline_schedule(wm_community), tmp_path / "profile.csv")
    frame = pd.read_csv(path)

    assert list(frame.columns) == PROFILE_COLUMNS
    assert len(frame) == wm_community.grid.K
    np.testing.assert_allclose(frame["load_desirable"], frame["load_optimal"])

    stats = profile_sparsity(wm_community, baseline_schedule(wm_community))
    assert stats["abs_dev_optimal"] == pytest.approx(stats["abs_dev_desirable"])


# =========================================================
# Experiment matrix
# =========================================================

def _tiny_spec(tmp_path, **overrides) -> ExperimentSpec:
    fields = dict(
        homes=(2,),
        seeds=(0, 1, 2),
        methods=("central@1e-2", "dw@5"),
        time_budget_s=600.0,
        output_dir=str(tmp_path / "bench"),
        intervals=8,
        appliances=("wm",),
    )
    fields.update(overrides)
    return ExperimentSpec(**fields)


def test_run_matrix_writes_every_artifact(tmp_path):
    spec = _tiny_spec(tmp_path, export_profiles=True, export_traces=True)
    result = run_matrix(spec, verbose=False)

    assert len(result.runs) == 6
    assert len(result.summary) == 4
    assert not result.runs["dnf"].any()
    assert (result.runs["pseudogap"] >= -1e-9).all()

    for path in result.paths.values():
        assert path.exists()

    manifest = json.loads(result.paths["manifest"].read_text(encoding="utf-8"))
    assert manifest["oracle"] == "central@1e-4"
    assert "numpy" in manifest["versions"]

    assert len(list((tmp_path / "bench" / "profiles").glob("*.csv"))) == 6
    assert len(list((tmp_path / "bench" / "traces").glob("*.csv"))) == 3


def test_tiny_budget_flags_dnf(tmp_path):
    result = run_matrix(_tiny_spec(tmp_path, seeds=(0,), time_budget_s=1e-3), verbose=False)

    assert result.runs["dnf"].all()
    assert (result.summary["n"] == 0).all()


def test_spec_rejects_bad_methods(tmp_path):
    with pytest.raises(ValueError):
        _tiny_spec(tmp_path, methods=("greedy@1",))

    with pytest.raises(ValueError):
        _tiny_spec(tmp_path, seeds=())


# =========================================================
# Command line
# =========================================================

def test_cli_enumerate_wm():
    assert cli.main(["enumerate-wm"]) == 0


def test_cli_rejects_unknown_command():
    assert cli.main(["frobnicate"]) == 1
    assert cli.main([]) == 1


def test_cli_missing_instance(tmp_path):
    assert cli.main(["solve-central", str(tmp_path / "missing.json")]) == 1


def test_cli_flag_without_value():
    assert cli.main(["gen", "--homes"]) == 1


def test_cli_end_to_end(tmp_path):
    instance_path = tmp_path / "inst.json"
    args = ["gen", "--homes", "2", "--seed", "4", "--intervals", "8", "--appliances", "wm"]

    assert cli.main(args + ["--out", str(instance_path)]) == 0
    instance = read_instance(instance_path)

    central = tmp_path / "central.csv"
    assert cli.main(["solve-central", str(instance_path), "--gap", "0", "--out", str(central)]) == 0

    dw = tmp_path / "dw.csv"
    trace = tmp_path / "trace.csv"
    assert cli.main(["solve-dw", str(instance_path), "--kappa", "inf", "--out", str(dw), "--trace", str(trace)]) == 0
    assert trace.exists()

    exact = objective_value(instance, read_schedule_csv(instance, central))
    heuristic = objective_value(instance, read_schedule_csv(instance, dw))
    assert exact <= heuristic + 1e-6

    profile = tmp_path / "profile.csv"
    assert cli.main(["export-profile", str(instance_path), "--schedule", str(dw), "--out", str(profile)]) == 0
    assert len(pd.read_csv(profile)) == 8


def test_cli_bench(tmp_path):
    out = tmp_path / "bench"
    args = ["bench", "--homes", "1", "--seeds", "0", "--methods", "dw@inf", "--intervals", "8", "--appliances", "wm"]
    args += ["--out", str(out)]

    assert cli.main(args) == 0
    assert (out / "runs.csv").exists()
