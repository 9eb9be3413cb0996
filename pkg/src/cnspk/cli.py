"""Command-line front end.

Each subcommand is a thin shell around one library call: parse the input
files, run the computation, write the same CSV tables the HTTP service
serves, and print a short human-readable summary.  Exit codes: 0 on
success, 1 for validation problems (bad files, bad values, bad flags),
2 for computation failures (integration failure, infeasible fit).
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click
import numpy as np

from . import dataio
from .errors import (
    BoundViolationError,
    CancelledError,
    DataError,
    InfeasibleProblemError,
    IntegrationFailureError,
    InvalidBoundsError,
    InvalidProfileError,
    InvalidTrajectoryError,
    NumericBlowupError,
    NumericDomainError,
    UnknownParameterError,
)
from .estimate import DeConfig, estimate as run_estimate
from .integrate import IntegratorConfig, Trajectory, dense_grid
from .metrics import PkSummary, summarize
from .model import COMPARTMENT_COLUMNS
from .params import ParameterSet
from .sensitivity import DEFAULT_MULTIPLIERS, SweepSpec, run_sweep
from .workbench import DEFAULT_GRID_POINTS, simulate as run_simulate

_VALIDATION_ERRORS = (
    DataError,
    UnknownParameterError,
    NumericDomainError,
    InvalidProfileError,
    InvalidBoundsError,
    BoundViolationError,
    InvalidTrajectoryError,
)
_COMPUTE_ERRORS = (
    IntegrationFailureError,
    NumericBlowupError,
    InfeasibleProblemError,
    CancelledError,
)


def _read_dataset(path: Path) -> dataio.ObservedDataset:
    return dataio.parse_input(path.read_bytes())


def _resolve_params(ds: dataio.ObservedDataset, params_src: str | None) -> ParameterSet:
    """Apply the --params flag.

    Omitted: dataset parameter table over reference values.  The literal
    ``manifest-refs``: pure reference values, ignoring the dataset table.
    Anything else: a ``name,value`` CSV whose entries override both.
    """
    if params_src is None:
        return dataio.resolve_parameters(ds)
    if params_src == "manifest-refs":
        return ParameterSet.reference()
    overrides = dataio.parse_params(Path(params_src).read_bytes())
    return dataio.resolve_parameters(ds, overrides)


def _integrator_config(rtol: float | None, atol: float | None) -> IntegratorConfig:
    overrides = {}
    if rtol is not None:
        overrides["rtol"] = rtol
    if atol is not None:
        overrides["atol"] = atol
    return IntegratorConfig(**overrides)


def _write(out_dir: Path, name: str, payload: bytes) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / name
    target.write_bytes(payload)
    return target


def _echo_pk(pk: PkSummary) -> None:
    click.echo(f"{'compartment':<12} {'Cmax':>14} {'Tmax':>10} {'AUC':>14}")
    for name, cmax, tmax, auc in pk.rows():
        click.echo(f"{name:<12} {cmax:>14.6g} {tmax:>10.6g} {auc:>14.6g}")


_input_option = click.option(
    "--input",
    "input_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Input dataset CSV (time/plasma grid, optional observed columns and parameter pairs).",
)
_params_option = click.option(
    "--params",
    "params_src",
    default=None,
    help="Parameter values: a name,value CSV, or 'manifest-refs' for pure reference values. "
    "Omitted: dataset-embedded values over references.",
)
_out_option = click.option(
    "--out",
    "out_dir",
    default=Path("."),
    type=click.Path(file_okay=False, path_type=Path),
    show_default=True,
    help="Directory for output tables.",
)
_rtol_option = click.option("--rtol", type=float, default=None, help="Relative solver tolerance.")
_atol_option = click.option("--atol", type=float, default=None, help="Absolute solver tolerance.")


@click.group()
def cli() -> None:
    """CNS drug-distribution workbench: simulate, sweep, estimate, serve."""


@cli.command()
@_input_option
@_params_option
@_out_option
@_rtol_option
@_atol_option
@click.option(
    "--grid",
    type=int,
    default=DEFAULT_GRID_POINTS,
    show_default=True,
    help="Number of evenly spaced output times across the plasma span.",
)
def simulate(
    input_path: Path,
    params_src: str | None,
    out_dir: Path,
    rtol: float | None,
    atol: float | None,
    grid: int,
) -> None:
    """Simulate the four compartments and report PK metrics."""
    ds = _read_dataset(input_path)
    pset = _resolve_params(ds, params_src)
    cfg = _integrator_config(rtol, atol)
    result = run_simulate(pset, ds.profile(), None, cfg, grid_points=grid)
    traj_path = _write(out_dir, "trajectory.csv", dataio.export_table(result.trajectory))
    pk_path = _write(out_dir, "pk.csv", dataio.export_table(result.pk))
    _echo_pk(result.pk)
    click.echo(f"wrote {traj_path} and {pk_path}")


@cli.command()
@click.argument("parameter")
@click.option(
    "--multipliers",
    default=",".join(str(m) for m in DEFAULT_MULTIPLIERS),
    show_default=True,
    help="Comma-separated scale factors applied to the parameter.",
)
@_input_option
@_params_option
@_out_option
@_rtol_option
@_atol_option
@click.option(
    "--grid",
    type=int,
    default=DEFAULT_GRID_POINTS,
    show_default=True,
    help="Number of evenly spaced output times across the plasma span.",
)
def sweep(
    parameter: str,
    multipliers: str,
    input_path: Path,
    params_src: str | None,
    out_dir: Path,
    rtol: float | None,
    atol: float | None,
    grid: int,
) -> None:
    """One-at-a-time sensitivity sweep over PARAMETER."""
    ds = _read_dataset(input_path)
    base = _resolve_params(ds, params_src)
    try:
        mults = tuple(float(tok) for tok in multipliers.split(",") if tok.strip())
    except ValueError:
        raise click.UsageError(f"--multipliers must be comma-separated numbers, got {multipliers!r}")
    profile = ds.profile()
    spec = SweepSpec(
        parameter=parameter,
        base=base,
        profile=profile,
        multipliers=mults,
        output_times=dense_grid(profile.t_start, profile.t_end, grid),
        config=_integrator_config(rtol, atol),
    )
    result = run_sweep(spec)
    sweep_path = _write(out_dir, "sweep.csv", dataio.export_table(result))
    click.echo(f"{'compartment':<12} {'sensitivity':>14}")
    for name in COMPARTMENT_COLUMNS:
        click.echo(f"{name:<12} {result.coefficients[name]:>14.6g}")
    click.echo(f"wrote {sweep_path} ({result.n_integrations} integrations)")


@cli.command()
@_input_option
@click.option(
    "--bounds",
    "bounds_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Bounds CSV: name,min,max,fixed_value (one of min+max or fixed_value per row).",
)
@_out_option
@_rtol_option
@_atol_option
@click.option("--np", "np_", type=int, default=None, help="Population size (default 10x dimension).")
@click.option("--f", "f_", type=float, default=None, help="Differential weight F.")
@click.option("--cr", type=float, default=None, help="Crossover probability CR.")
@click.option("--max-iter", type=int, default=None, help="Iteration budget.")
@click.option("--vtr", type=float, default=None, help="Value-to-reach stopping threshold.")
@click.option("--seed", type=int, default=None, help="RNG seed (fixed seed gives identical runs).")
def estimate(
    input_path: Path,
    bounds_path: Path,
    out_dir: Path,
    rtol: float | None,
    atol: float | None,
    np_: int | None,
    f_: float | None,
    cr: float | None,
    max_iter: int | None,
    vtr: float | None,
    seed: int | None,
) -> None:
    """Fit parameters to the observed series by differential evolution."""
    ds = _read_dataset(input_path)
    bounds = dataio.parse_bounds(bounds_path.read_bytes())
    overrides = {
        k: v
        for k, v in {
            "np": np_,
            "f": f_,
            "cr": cr,
            "max_iter": max_iter,
            "vtr": vtr,
            "seed": seed,
        }.items()
        if v is not None
    }
    de = DeConfig(**overrides)
    report = run_estimate(ds, bounds, de, _integrator_config(rtol, atol))
    params_csv, trace_csv = dataio.export_estimation_tables(report)
    params_path = _write(out_dir, "parameters.csv", params_csv)
    trace_path = _write(out_dir, "trace.csv", trace_csv)
    click.echo(f"{'parameter':<12} {'value':>16}")
    for name in report.names:
        click.echo(f"{name:<12} {report.best[name]:>16.9g}")
    click.echo(
        f"best loss {report.best_loss:.6g} after {report.iterations} iterations "
        f"({report.evaluations} evaluations, {report.termination})"
    )
    click.echo(f"wrote {params_path} and {trace_path}")


@cli.command()
@_input_option
@_out_option
def metrics(input_path: Path, out_dir: Path) -> None:
    """PK metrics for an already-computed trajectory CSV."""
    ds = _read_dataset(input_path)
    missing = [c for c in COMPARTMENT_COLUMNS if c not in ds.observed]
    if missing:
        raise DataError(
            f"trajectory table needs all four compartment columns; missing {', '.join(missing)}",
            row=1,
            column=missing[0],
        )
    states = np.column_stack([ds.observed[c] for c in COMPARTMENT_COLUMNS])
    traj = Trajectory(times=ds.times, states=states, plasma=ds.plasma, stats=None)
    pk = summarize(traj)
    pk_path = _write(out_dir, "pk.csv", dataio.export_table(pk))
    _echo_pk(pk)
    click.echo(f"wrote {pk_path}")


@cli.command()
@click.option(
    "--port",
    type=int,
    default=lambda: int(os.environ.get("CNSPK_PORT", "8000")),
    help="Listen port [default: CNSPK_PORT or 8000].",
)
@click.option("--host", default="127.0.0.1", show_default=True, help="Bind address.")
def serve(port: int, host: str) -> None:
    """Run the HTTP job service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port, log_level="info")


@cli.command()
@_out_option
def sample(out_dir: Path) -> None:
    """Write the bundled demonstration dataset (regenerated, deterministic)."""
    path = _write(out_dir, "sample.csv", dataio.sample_csv())
    click.echo(f"wrote {path}")


def main(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except _VALIDATION_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except _COMPUTE_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
