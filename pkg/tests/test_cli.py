"""CLI pipeline: subcommands, exit codes, output schemas, and
byte-identical reproduction from manifests."""

import json
from pathlib import Path

import pytest

from urbanlos.cli import main
from urbanlos.outputs import read_csv_dicts

SIM_ARGS = [
    "simulate",
    "--env",
    "urban",
    "--seed",
    "5",
    "--n-cities",
    "2",
    "--n-gu",
    "10",
    "--n-trees",
    "30",
    "--n-lights",
    "40",
]


def _run_dir(root: Path) -> Path:
    dirs = [p for p in root.iterdir() if p.is_dir()]
    assert len(dirs) == 1
    return dirs[0]


@pytest.fixture(scope="module")
def sim_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("sim")
    assert main(SIM_ARGS + ["--densities", "0,20", "--out", str(root)]) == 0
    run = _run_dir(root)
    assert main(["fit", "--run", str(run)]) == 0
    assert main(["report", "--run", str(run)]) == 0
    return run


def test_generate_deterministic(tmp_path, capsys):
    args = ["generate", "--env", "urban", "--seed", "42", "--out", str(tmp_path / "a")]
    assert main(args) == 0
    assert main(["generate", "--env", "urban", "--seed", "42", "--out", str(tmp_path / "b")]) == 0
    a = _run_dir(tmp_path / "a") / "layout.json"
    b = _run_dir(tmp_path / "b") / "layout.json"
    assert a.read_bytes() == b.read_bytes()
    layout = json.loads(a.read_text())
    assert len(layout["buildings"]) == 500


def test_generate_validation_exit(tmp_path, capsys):
    code = main(["generate", "--env", "urban", "--alpha", "1.5", "--seed", "1", "--out", str(tmp_path)])
    assert code == 1
    assert "alpha" in capsys.readouterr().err


def test_generate_infeasible_exit(tmp_path, capsys):
    code = main(
        [
            "generate",
            "--alpha",
            "0.98",
            "--beta",
            "20",
            "--gamma",
            "15",
            "--seed",
            "1",
            "--n-trees",
            "0",
            "--n-lights",
            "0",
            "--n-gu",
            "0",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 2
    assert "infeasible" in capsys.readouterr().err


def test_simulate_requires_seed(tmp_path, capsys):
    code = main(["simulate", "--env", "urban", "--out", str(tmp_path)])
    assert code == 1
    assert "seed" in capsys.readouterr().err


def test_simulate_outputs(sim_run):
    names = {p.name for p in sim_run.iterdir()}
    for scenario in ("buildings-only", "trees", "full"):
        assert f"angles_{scenario}.csv" in names
        assert f"distance_{scenario}.csv" in names
    assert "delta_buildings-only_vs_trees.csv" in names
    assert "density_0.csv" in names and "density_20.csv" in names
    assert "manifest.json" in names


def test_angle_csv_partition(sim_run):
    rows = read_csv_dicts(sim_run / "angles_full.csv")
    assert len(rows) == 90
    for row in rows:
        total = sum(float(row[k]) for k in ("p_los", "p_nlos_b", "p_nlos_t", "p_nlos_s"))
        assert abs(total - 1.0) < 1e-12
        assert int(row["n"]) == 20


def test_manifest_records_sample_count(sim_run):
    manifest = json.loads((sim_run / "manifest.json").read_text())
    assert manifest["n_samples"] == 2 * 10 * 90
    assert manifest["config_hash"] == sim_run.name
    assert len(manifest["layout_hash"]) == 64


def test_fit_output(sim_run):
    rows = read_csv_dicts(sim_run / "fits.csv")
    assert [r["scenario"] for r in rows] == ["buildings-only", "trees"]
    for row in rows:
        assert row["environment"] == "urban"
        assert float(row["rmse_dB"]) >= 0.0
        assert int(row["n"]) > 2


def test_fit_missing_inputs(tmp_path, capsys):
    assert main(["fit", "--run", str(tmp_path / "nope")]) == 3


def test_report_outputs(sim_run):
    for name in (
        "report_plos_vs_distance.csv",
        "report_tree_nlos_vs_theta.csv",
        "report_density.csv",
        "report_pl_vs_theta.csv",
    ):
        assert (sim_run / name).exists(), name
    pl_rows = read_csv_dicts(sim_run / "report_pl_vs_theta.csv")
    assert all(float(r["theta_deg"]) > 0.0 for r in pl_rows)
    densities = {int(r["density"]) for r in read_csv_dicts(sim_run / "report_density.csv")}
    assert densities == {0, 20}


def test_report_missing_prerequisites(tmp_path, capsys):
    root = tmp_path / "r"
    assert main(SIM_ARGS + ["--out", str(root)]) == 0
    run = _run_dir(root)
    code = main(["report", "--run", str(run)])
    assert code == 3
    assert "fits.csv" in capsys.readouterr().err


def test_report_rerun_identical_bytes(sim_run):
    before = {
        p.name: p.read_bytes() for p in sim_run.glob("report_*.csv")
    }
    assert main(["report", "--run", str(sim_run)]) == 0
    after = {p.name: p.read_bytes() for p in sim_run.glob("report_*.csv")}
    assert before == after


def test_every_csv_parses_cleanly(sim_run):
    text_columns = {"scenario", "environment"}
    for path in sim_run.glob("*.csv"):
        rows = read_csv_dicts(path)
        assert rows, path.name
        for row in rows:
            for key, value in row.items():
                if key not in text_columns:
                    float(value)


def test_manifest_reproduces_run(sim_run, tmp_path):
    manifest = sim_run / "manifest.json"
    root = tmp_path / "repro"
    assert main(["simulate", "--config", str(manifest), "--out", str(root)]) == 0
    rerun = _run_dir(root)
    assert rerun.name == sim_run.name  # same resolved config, same hash
    for path in sim_run.glob("*.csv"):
        if path.name.startswith(("fits", "report")):
            continue
        assert (rerun / path.name).read_bytes() == path.read_bytes(), path.name


def test_oracle_check(tmp_path, capsys):
    dump = tmp_path / "hits.json"
    code = main(
        [
            "oracle-check",
            "--env",
            "urban",
            "--seed",
            "7",
            "--n-links",
            "25",
            "--dump-hits",
            str(dump),
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "0 disagreements" in out
    hits = json.loads(dump.read_text())
    assert len(hits) == 25
    assert {"abs_xy", "gu_xy", "h_abs", "analytic_hits", "bruteforce_crossed"} <= set(hits[0])
