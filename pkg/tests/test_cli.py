"""Command-line interface: outputs, determinism, exit codes."""

from __future__ import annotations

from pathlib import Path

import pytest
from click.testing import CliRunner

from cnspk import IntegratorConfig, dataio, dense_grid
from cnspk.cli import cli, main
from cnspk.errors import IntegrationFailureError


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def workdir(tmp_path: Path) -> Path:
    (tmp_path / "sample.csv").write_bytes(dataio.sample_csv())
    return tmp_path


def invoke(runner, workdir, *args):
    with runner.isolated_filesystem(temp_dir=workdir) as fs:
        result = runner.invoke(cli, [str(a) for a in args], catch_exceptions=False)
        files = {p.name: p.read_bytes() for p in Path(fs).rglob("*") if p.is_file()}
    return result, files


def test_sample_subcommand_regenerates_shipped_bytes(runner, tmp_path):
    with runner.isolated_filesystem(temp_dir=tmp_path) as fs:
        result = runner.invoke(cli, ["sample", "--out", "."])
        written = (Path(fs) / "sample.csv").read_bytes()
    assert result.exit_code == 0
    assert written == dataio.shipped_sample_bytes()


def test_simulate_writes_library_identical_tables(runner, workdir):
    sample = workdir / "sample.csv"
    result, files = invoke(
        runner, workdir, "simulate", "--input", sample, "--out", "out"
    )
    assert result.exit_code == 0
    assert "Cbb" in result.output and "wrote" in result.output

    ds = dataio.parse_input(sample.read_bytes())
    from cnspk import simulate

    ref = simulate(dataio.resolve_parameters(ds), ds.profile(), None, IntegratorConfig())
    assert files["trajectory.csv"] == dataio.export_table(ref.trajectory)
    assert files["pk.csv"] == dataio.export_table(ref.pk)


def test_simulate_honors_grid_and_tolerances(runner, workdir):
    sample = workdir / "sample.csv"
    _, a = invoke(runner, workdir, "simulate", "--input", sample, "--out", "o", "--grid", 31)
    _, b = invoke(runner, workdir, "simulate", "--input", sample, "--out", "o",
                  "--grid", 31, "--rtol", "1e-9", "--atol", "1e-12")
    assert a["trajectory.csv"] != b["trajectory.csv"]
    assert a["trajectory.csv"].decode().count("\n") == 32


def test_params_file_overrides_dataset_table(runner, workdir):
    sample = workdir / "sample.csv"
    override = workdir / "override.csv"
    override.write_text("name,value\nPSB,2.0\n")
    _, base = invoke(runner, workdir, "simulate", "--input", sample, "--out", "o")
    _, bumped = invoke(runner, workdir, "simulate", "--input", sample, "--out", "o",
                       "--params", override)
    assert base["trajectory.csv"] != bumped["trajectory.csv"]


def test_manifest_refs_ignores_dataset_table(runner, workdir):
    # a dataset with a wild embedded value: manifest-refs must not see it
    wild = workdir / "wild.csv"
    plain = workdir / "plain.csv"
    wild.write_text(
        "time,plasma,param_name,param_value\n0,0,PSB,1.9\n1,0.4,,\n2,0.3,,\n"
    )
    plain.write_text("time,plasma\n0,0\n1,0.4\n2,0.3\n")
    _, a = invoke(runner, workdir, "simulate", "--input", wild, "--out", "o",
                  "--params", "manifest-refs")
    _, b = invoke(runner, workdir, "simulate", "--input", plain, "--out", "o")
    _, c = invoke(runner, workdir, "simulate", "--input", wild, "--out", "o")
    assert a["trajectory.csv"] == b["trajectory.csv"]
    assert c["trajectory.csv"] != b["trajectory.csv"]


def test_sweep_outputs_match_library(runner, workdir):
    sample = workdir / "sample.csv"
    result, files = invoke(runner, workdir, "sweep", "PSB", "--input", sample, "--out", "o")
    assert result.exit_code == 0
    assert "Cbm" in result.output

    from cnspk import SweepSpec, run_sweep

    ds = dataio.parse_input(sample.read_bytes())
    profile = ds.profile()
    spec = SweepSpec(
        parameter="PSB",
        base=dataio.resolve_parameters(ds),
        profile=profile,
        output_times=dense_grid(profile.t_start, profile.t_end, 201),
    )
    assert files["sweep.csv"] == dataio.export_table(run_sweep(spec))


def test_sweep_multiplier_parsing_error(runner, workdir):
    sample = workdir / "sample.csv"
    result, _ = invoke(runner, workdir, "sweep", "PSB", "--input", sample,
                       "--out", "o", "--multipliers", "1.0,zebra")
    assert result.exit_code != 0


def test_estimate_seeded_runs_are_byte_identical(runner, workdir):
    sample = workdir / "sample.csv"
    bounds = workdir / "bounds.csv"
    ds = dataio.parse_input(sample.read_bytes())
    rows = ["name,min,max,fixed_value"]
    for name, value in ds.parameters.items():
        if name == "PSB":
            rows.append("PSB,0.01,2.0,")
        else:
            rows.append(f"{name},,,{value!r}")
    bounds.write_text("\n".join(rows) + "\n")

    args = ("estimate", "--input", sample, "--bounds", bounds, "--out", "o",
            "--np", 8, "--max-iter", 6, "--seed", 42)
    r1, f1 = invoke(runner, workdir, *args)
    r2, f2 = invoke(runner, workdir, *args)
    assert r1.exit_code == 0
    assert "best loss" in r1.output
    assert f1["parameters.csv"] == f2["parameters.csv"]
    assert f1["trace.csv"] == f2["trace.csv"]


def test_metrics_recomputes_pk_from_trajectory_table(runner, workdir):
    sample = workdir / "sample.csv"
    _, sim = invoke(runner, workdir, "simulate", "--input", sample, "--out", "o")
    traj_file = workdir / "trajectory.csv"
    traj_file.write_bytes(sim["trajectory.csv"])
    result, files = invoke(runner, workdir, "metrics", "--input", traj_file, "--out", "m")
    assert result.exit_code == 0
    lines = files["pk.csv"].decode().splitlines()
    assert lines[0] == "compartment,Cmax,Tmax,AUC"
    assert len(lines) == 5


def test_metrics_requires_all_compartments(runner, workdir):
    partial = workdir / "partial.csv"
    partial.write_text("time,plasma,Cbm\n0,0,0\n1,0.4,0.001\n")
    result = CliRunner().invoke(cli, ["metrics", "--input", str(partial), "--out", "m"],
                                catch_exceptions=True)
    assert result.exit_code != 0 or isinstance(result.exception, Exception)


# --- exit codes through main() -------------------------------------------------


def test_main_success_is_zero(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "sample.csv").write_bytes(dataio.sample_csv())
    assert main(["simulate", "--input", "sample.csv", "--out", "o"]) == 0


def test_main_validation_error_is_one(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "bad.csv").write_text("time,plasma\n0,1\n1,abc\n")
    assert main(["simulate", "--input", "bad.csv", "--out", "o"]) == 1
    assert "row 3" in capsys.readouterr().err


def test_main_empty_bounds_names_schema(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "sample.csv").write_bytes(dataio.sample_csv())
    (tmp_path / "bounds.csv").write_text("")
    code = main(["estimate", "--input", "sample.csv", "--bounds", "bounds.csv",
                 "--out", "o"])
    assert code == 1
    assert "name,min,max,fixed_value" in capsys.readouterr().err


def test_main_usage_error_is_one():
    assert main(["simulate"]) == 1  # missing required --input
    assert main(["not-a-command"]) == 1


def test_main_computation_failure_is_two(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "sample.csv").write_bytes(dataio.sample_csv())

    def exploding(*args, **kwargs):
        raise IntegrationFailureError("step budget of 9 exhausted", last_time=1.5)

    monkeypatch.setattr("cnspk.cli.run_simulate", exploding)
    code = main(["simulate", "--input", "sample.csv", "--out", "o"])
    assert code == 2
    assert "step budget" in capsys.readouterr().err


def test_serve_flags_reach_uvicorn(monkeypatch):
    captured = {}

    def fake_run(app, host, port, log_level):
        captured.update(host=host, port=port)

    import uvicorn

    monkeypatch.setattr(uvicorn, "run", fake_run)
    assert main(["serve", "--port", "9100", "--host", "0.0.0.0"]) == 0
    assert captured == {"host": "0.0.0.0", "port": 9100}


def test_serve_port_defaults_to_environment(monkeypatch):
    captured = {}

    def fake_run(app, host, port, log_level):
        captured.update(port=port)

    import uvicorn

    monkeypatch.setattr(uvicorn, "run", fake_run)
    monkeypatch.setenv("CNSPK_PORT", "7777")
    assert main(["serve"]) == 0
    assert captured["port"] == 7777
