"""CSV ingestion and export for every workbench table.

One fixed schema covers user input: canonical columns ``time``,
``plasma``, ``Cbb``, ``Cbm``, ``Cccsf``, ``Cscsf`` plus the optional
``param_name``/``param_value`` pair, recognized case-insensitively.
Unknown columns are rejected, numeric cells are parsed strictly, and
every rejection names the offending row and column.  Exports render
floats with 9 significant digits, which preserves values to better than
one part in 10^8 across a parse/export round trip.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from importlib import resources
from typing import Mapping

import numpy as np

from .errors import DataError
from .estimate import BoundsSpec, EstimationReport, ParamBounds
from .integrate import IntegratorConfig, Trajectory, integrate
from .metrics import PkSummary
from .model import COMPARTMENT_COLUMNS, PlasmaProfile
from .params import PARAM_INDEX, PARAM_NAMES, ParameterSet
from .sensitivity import SweepResult

__all__ = [
    "CANONICAL_COLUMNS",
    "ObservedDataset",
    "parse_input",
    "parse_params",
    "parse_bounds",
    "resolve_parameters",
    "export_table",
    "export_estimation_tables",
    "export_dataset",
    "sample_dataset",
    "sample_csv",
    "shipped_sample_bytes",
    "SAMPLE_RESOURCE",
]

CANONICAL_COLUMNS: tuple[str, ...] = (
    "time",
    "plasma",
    "Cbb",
    "Cbm",
    "Cccsf",
    "Cscsf",
    "param_name",
    "param_value",
)
_CANON_BY_LOWER = {c.lower(): c for c in CANONICAL_COLUMNS}

# Strict decimal syntax: plain or scientific notation only — no locale
# separators, no underscores, no inf/nan spellings.
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")

#: Package-relative location of the shipped sample dataset.
SAMPLE_RESOURCE = "data/sample.csv"


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


@dataclass(frozen=True, eq=False)
class ObservedDataset:
    """Validated contents of one input file.

    Attributes
    ----------
    times : ndarray
        Strictly increasing sample times, h.
    plasma : ndarray
        Non-negative plasma concentrations at ``times``, mg/L.
    observed : dict[str, ndarray]
        Observed compartment series keyed by canonical column name; any
        subset of the four compartments, each aligned with ``times``.
    parameters : dict[str, float]
        Optional parameter table (name -> value), file order preserved.
    """

    times: np.ndarray
    plasma: np.ndarray
    observed: dict[str, np.ndarray]
    parameters: dict[str, float]

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=np.float64)
        p = np.asarray(self.plasma, dtype=np.float64)
        if t.ndim != 1 or t.size < 2:
            raise DataError("need at least two data rows")
        if not np.all(np.isfinite(t)) or np.any(np.diff(t) <= 0.0):
            raise DataError("times must be finite and strictly increasing")
        if p.shape != t.shape or not np.all(np.isfinite(p)) or np.any(p < 0.0):
            raise DataError("plasma must align with times, finite, non-negative")
        obs = {}
        for name, series in self.observed.items():
            if name not in COMPARTMENT_COLUMNS:
                raise DataError(f"unknown observed series {name!r}")
            s = np.asarray(series, dtype=np.float64)
            if s.shape != t.shape or not np.all(np.isfinite(s)):
                raise DataError(f"observed series {name!r} must align with times")
            s = s.copy()
            s.setflags(write=False)
            obs[name] = s
        for name in self.parameters:
            if name not in PARAM_INDEX:
                raise DataError(f"unknown parameter {name!r}")
        t = t.copy()
        p = p.copy()
        t.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "plasma", p)
        object.__setattr__(self, "observed", obs)
        object.__setattr__(self, "parameters", dict(self.parameters))

    def __len__(self) -> int:
        return int(self.times.size)

    def profile(self) -> PlasmaProfile:
        """The plasma forcing profile this dataset defines."""
        return PlasmaProfile(self.times, self.plasma)


def _decode(data: bytes | str) -> str:
    if isinstance(data, str):
        return data
    raw = bytes(data)
    try:
        return raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        line = raw.count(b"\n", 0, exc.start) + 1
        col = exc.start - (raw.rfind(b"\n", 0, exc.start) + 1) + 1
        raise DataError(
            f"not valid UTF-8: {exc.reason} at byte {exc.start}",
            row=line,
            column=f"byte {col}",
        ) from None


def _cell_float(cell: str, row: int, column: str) -> float:
    text = cell.strip()
    if not _FLOAT_RE.match(text):
        raise DataError(
            f"non-numeric cell {cell!r}", row=row, column=column
        )
    value = float(text)
    if not math.isfinite(value):
        raise DataError(
            f"non-finite value {cell!r}", row=row, column=column
        )
    return value


def parse_input(data: bytes | str) -> ObservedDataset:
    """Parse a user input CSV into an :class:`ObservedDataset`.

    Parameters
    ----------
    data : bytes or str
        UTF-8 CSV with a header row.  Canonical column names are
        recognized case-insensitively; unknown columns are rejected.

    Returns
    -------
    ObservedDataset

    Raises
    ------
    DataError
        On any structural or numeric problem; the error names the
        offending row (1-based, header = row 1) and column.
    """
    text = _decode(data)
    reader = csv.reader(io.StringIO(text))

    try:
        try:
            raw_header = next(reader)
        except StopIteration:
            raise DataError("empty file: missing header row", row=1, column=1)

        header: list[str] = []
        seen: set[str] = set()
        for pos, cell in enumerate(raw_header, start=1):
            name = _CANON_BY_LOWER.get(cell.strip().lower())
            if name is None:
                raise DataError(
                    f"unknown column {cell.strip()!r}", row=1, column=cell.strip() or f"#{pos}"
                )
            if name in seen:
                raise DataError(f"duplicate column {name!r}", row=1, column=name)
            seen.add(name)
            header.append(name)

        missing = [c for c in ("time", "plasma") if c not in seen]
        if missing:
            raise DataError(
                f"missing required column(s): {', '.join(missing)}",
                row=1,
                column=missing[0],
            )
        if ("param_name" in seen) != ("param_value" in seen):
            have = "param_name" if "param_name" in seen else "param_value"
            other = "param_value" if have == "param_name" else "param_name"
            raise DataError(
                f"column {have!r} requires its partner {other!r}",
                row=1,
                column=have,
            )

        obs_cols = [c for c in COMPARTMENT_COLUMNS if c in seen]
        has_params = "param_name" in seen

        times: list[float] = []
        plasma: list[float] = []
        observed: dict[str, list[float]] = {c: [] for c in obs_cols}
        parameters: dict[str, float] = {}

        for cells in reader:
            row = reader.line_num
            if all(not c.strip() for c in cells):
                continue
            if len(cells) != len(header):
                at = header[len(cells)] if len(cells) < len(header) else f"#{len(header) + 1}"
                raise DataError(
                    f"expected {len(header)} cells, got {len(cells)}",
                    row=row,
                    column=at,
                )
            by_name = dict(zip(header, cells))
            pname = by_name.get("param_name", "").strip()
            pvalue = by_name.get("param_value", "").strip()

            grid_cells = {
                c: by_name[c] for c in header if c not in ("param_name", "param_value")
            }
            blank_grid = all(not v.strip() for v in grid_cells.values())

            if blank_grid:
                # a parameter-only row (or fully blank padding row)
                if not pname and not pvalue:
                    continue
            else:
                for col in ("time", "plasma"):
                    if not grid_cells[col].strip():
                        raise DataError("missing value", row=row, column=col)
                for col in obs_cols:
                    if not grid_cells[col].strip():
                        raise DataError(
                            f"gap in observed series {col!r}", row=row, column=col
                        )
                t = _cell_float(grid_cells["time"], row, "time")
                if times and t <= times[-1]:
                    raise DataError(
                        f"time must be strictly increasing "
                        f"({_fmt(t)} follows {_fmt(times[-1])})",
                        row=row,
                        column="time",
                    )
                p = _cell_float(grid_cells["plasma"], row, "plasma")
                if p < 0.0:
                    raise DataError(
                        f"plasma must be non-negative, got {_fmt(p)}",
                        row=row,
                        column="plasma",
                    )
                times.append(t)
                plasma.append(p)
                for col in obs_cols:
                    observed[col].append(_cell_float(grid_cells[col], row, col))

            if has_params and (pname or pvalue):
                if not pname:
                    raise DataError(
                        "param_value without a param_name",
                        row=row,
                        column="param_name",
                    )
                if not pvalue:
                    raise DataError(
                        f"parameter {pname!r} has no value",
                        row=row,
                        column="param_value",
                    )
                if pname not in PARAM_INDEX:
                    raise DataError(
                        f"unknown parameter {pname!r}", row=row, column="param_name"
                    )
                if pname in parameters:
                    raise DataError(
                        f"duplicate parameter {pname!r}", row=row, column="param_name"
                    )
                parameters[pname] = _cell_float(pvalue, row, "param_value")
    except csv.Error as exc:
        raise DataError(
            f"malformed CSV: {exc}", row=getattr(reader, "line_num", 1) or 1, column=1
        ) from None

    if len(times) < 2:
        raise DataError(
            f"need at least two data rows, got {len(times)}", row=2, column="time"
        )

    return ObservedDataset(
        times=np.array(times),
        plasma=np.array(plasma),
        observed={c: np.array(v) for c, v in observed.items()},
        parameters=parameters,
    )


def parse_params(data: bytes | str) -> dict[str, float]:
    """Parse a ``name,value`` CSV into a parameter override mapping.

    Raises
    ------
    DataError
        On unknown names, duplicates, or malformed cells (with row and
        column coordinates).
    """
    text = _decode(data)
    reader = csv.reader(io.StringIO(text))
    try:
        try:
            raw_header = next(reader)
        except StopIteration:
            raise DataError("empty file: missing header row", row=1, column=1)
        header = [c.strip().lower() for c in raw_header]
        if header != ["name", "value"]:
            raise DataError(
                "expected header 'name,value'", row=1, column=raw_header[0].strip() or 1
            )
        out: dict[str, float] = {}
        for cells in reader:
            row = reader.line_num
            if all(not c.strip() for c in cells):
                continue
            if len(cells) != 2:
                raise DataError(
                    f"expected 2 cells, got {len(cells)}", row=row, column="name"
                )
            name = cells[0].strip()
            if name not in PARAM_INDEX:
                raise DataError(f"unknown parameter {name!r}", row=row, column="name")
            if name in out:
                raise DataError(f"duplicate parameter {name!r}", row=row, column="name")
            out[name] = _cell_float(cells[1], row, "value")
    except csv.Error as exc:
        raise DataError(
            f"malformed CSV: {exc}", row=getattr(reader, "line_num", 1) or 1, column=1
        ) from None
    return out


def resolve_parameters(
    ds: ObservedDataset, overrides: Mapping[str, float] | None = None
) -> ParameterSet:
    """Build the parameter set a dataset-driven run should use.

    Precedence, highest first: explicit ``overrides``, the dataset's own
    embedded parameter table, then reference values for anything left.
    """
    values = dict(ds.parameters)
    if overrides:
        for name, value in overrides.items():
            values[str(name)] = float(value)
    return ParameterSet.from_mapping(values) if values else ParameterSet.reference()


def parse_bounds(data: bytes | str) -> BoundsSpec:
    """Parse a ``name,min,max,fixed_value`` CSV into a :class:`BoundsSpec`.

    Each row carries either a (min, max) pair with ``fixed_value`` blank,
    or a ``fixed_value`` with min and max blank.  Coverage of the whole
    roster is enforced by the returned spec.

    Raises
    ------
    DataError
        On malformed rows or cells (with coordinates).
    InvalidBoundsError
        On semantic problems (coverage, inverted intervals, ...).
    """
    text = _decode(data)
    reader = csv.reader(io.StringIO(text))
    estimated: list[ParamBounds] = []
    fixed: dict[str, float] = {}
    seen: set[str] = set()
    try:
        try:
            raw_header = next(reader)
        except StopIteration:
            raise DataError(
                "empty bounds file: expected header 'name,min,max,fixed_value'",
                row=1,
                column=1,
            )
        header = [c.strip().lower() for c in raw_header]
        if header != ["name", "min", "max", "fixed_value"]:
            raise DataError(
                "expected header 'name,min,max,fixed_value'",
                row=1,
                column=(raw_header[0].strip() if raw_header else "") or 1,
            )
        for cells in reader:
            row = reader.line_num
            if all(not c.strip() for c in cells):
                continue
            if len(cells) != 4:
                raise DataError(
                    f"expected 4 cells, got {len(cells)}", row=row, column="name"
                )
            name = cells[0].strip()
            if not name:
                raise DataError("missing parameter name", row=row, column="name")
            if name in seen:
                raise DataError(f"duplicate row for {name!r}", row=row, column="name")
            seen.add(name)
            lo_c, hi_c, fx_c = (c.strip() for c in cells[1:4])
            if fx_c:
                if lo_c or hi_c:
                    raise DataError(
                        f"{name!r} mixes bounds with a fixed value",
                        row=row,
                        column="fixed_value",
                    )
                fixed[name] = _cell_float(fx_c, row, "fixed_value")
            else:
                if not lo_c or not hi_c:
                    at = "min" if not lo_c else "max"
                    raise DataError(
                        f"{name!r} needs both min and max (or a fixed_value)",
                        row=row,
                        column=at,
                    )
                estimated.append(
                    ParamBounds(
                        name,
                        _cell_float(lo_c, row, "min"),
                        _cell_float(hi_c, row, "max"),
                    )
                )
    except csv.Error as exc:
        raise DataError(
            f"malformed CSV: {exc}", row=getattr(reader, "line_num", 1) or 1, column=1
        ) from None
    return BoundsSpec(estimated, fixed)


# ---------------------------------------------------------------------------
# exports


def _writer(buf: io.StringIO):
    return csv.writer(buf, lineterminator="\n")


def _trajectory_rows(w, traj: Trajectory) -> None:
    for i in range(len(traj)):
        w.writerow(
            [_fmt(traj.times[i]), _fmt(traj.plasma[i])]
            + [_fmt(traj.states[i, j]) for j in range(len(COMPARTMENT_COLUMNS))]
        )


def export_table(
    result: Trajectory | SweepResult | EstimationReport | PkSummary,
) -> bytes:
    """Render a result as UTF-8 CSV bytes with a stable column order.

    Trajectories export as ``time,plasma,Cbb,Cbm,Cccsf,Cscsf`` (the
    plasma column is included so an exported trajectory is itself a valid
    input file).  Sweeps export long-format
    ``parameter,multiplier,time,Cbb,Cbm,Cccsf,Cscsf``; metric summaries as
    ``compartment,Cmax,Tmax,AUC``.  For estimation reports this returns
    the parameter table; :func:`export_estimation_tables` also provides
    the iteration-trace table.
    """
    buf = io.StringIO()
    w = _writer(buf)
    if isinstance(result, Trajectory):
        w.writerow(["time", "plasma", *COMPARTMENT_COLUMNS])
        _trajectory_rows(w, result)
    elif isinstance(result, SweepResult):
        w.writerow(["parameter", "multiplier", "time", *COMPARTMENT_COLUMNS])
        for curve in result.curves:
            traj = curve.trajectory
            m = _fmt(curve.multiplier)
            for i in range(len(traj)):
                w.writerow(
                    [result.parameter, m, _fmt(traj.times[i])]
                    + [
                        _fmt(traj.states[i, j])
                        for j in range(len(COMPARTMENT_COLUMNS))
                    ]
                )
    elif isinstance(result, EstimationReport):
        w.writerow(["name", "value", "estimated"])
        estimated = set(result.names)
        best = result.best
        for name in PARAM_NAMES:
            w.writerow(
                [name, _fmt(best[name]), "true" if name in estimated else "false"]
            )
    elif isinstance(result, PkSummary):
        w.writerow(["compartment", "Cmax", "Tmax", "AUC"])
        for name, cmax, tmax, auc in result.rows():
            w.writerow([name, _fmt(cmax), _fmt(tmax), _fmt(auc)])
    else:
        raise TypeError(f"no table export for {type(result).__name__}")
    return buf.getvalue().encode()


def export_estimation_tables(report: EstimationReport) -> tuple[bytes, bytes]:
    """Both estimation tables: (parameter table, iteration trace table).

    The trace table has one row per iteration: ``iteration,best_loss``
    followed by one column per estimated parameter (genome order), so
    per-parameter convergence can be plotted straight from the file.
    """
    params_csv = export_table(report)
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(["iteration", "best_loss", *report.names])
    for i in range(len(report.loss_trace)):
        w.writerow(
            [str(i), _fmt(report.loss_trace[i])]
            + [_fmt(v) for v in report.member_trace[i]]
        )
    return params_csv, buf.getvalue().encode()


def export_dataset(ds: ObservedDataset) -> bytes:
    """Render a dataset back to the canonical input-file schema.

    Column order is canonical; the parameter table is written alongside
    the grid rows, padding with parameter-only rows when there are more
    parameters than grid points.
    """
    cols = ["time", "plasma"] + [c for c in COMPARTMENT_COLUMNS if c in ds.observed]
    names = list(ds.parameters)
    has_params = bool(names)
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(cols + (["param_name", "param_value"] if has_params else []))
    n_rows = max(len(ds), len(names)) if has_params else len(ds)
    for i in range(n_rows):
        row: list[str] = []
        if i < len(ds):
            row.append(_fmt(ds.times[i]))
            row.append(_fmt(ds.plasma[i]))
            for c in cols[2:]:
                row.append(_fmt(ds.observed[c][i]))
        else:
            row.extend([""] * len(cols))
        if has_params:
            if i < len(names):
                row.append(names[i])
                row.append(_fmt(ds.parameters[names[i]]))
            else:
                row.extend(["", ""])
        w.writerow(row)
    return buf.getvalue().encode()


# ---------------------------------------------------------------------------
# shipped sample


def sample_dataset() -> ObservedDataset:
    """Regenerate the shipped sample dataset.

    A synthetic single-dose study: the plasma profile is a two-exponential
    absorption/elimination curve peaking at 0.05 mg/L around 3.5 h, the
    observed compartment series are the model's own response under the
    manifest reference parameters, and the parameter table carries those
    reference values.  Deterministic by construction.
    """
    grid = np.array(
        [
            0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0,
            5.0, 6.0, 8.0, 10.0, 12.0, 16.0, 20.0, 24.0, 30.0, 36.0,
            42.0, 48.0, 54.0, 60.0, 66.0, 72.0,
        ]
    )
    ka, ke, peak = 0.8, 0.06, 0.05
    t_peak = math.log(ka / ke) / (ka - ke)
    amp = peak / (math.exp(-ke * t_peak) - math.exp(-ka * t_peak))
    plasma = amp * (np.exp(-ke * grid) - np.exp(-ka * grid))
    plasma[0] = 0.0

    params = ParameterSet.reference()
    traj = integrate(
        params, PlasmaProfile(grid, plasma), grid, IntegratorConfig()
    )
    observed = {
        name: traj.states[:, j] for j, name in enumerate(COMPARTMENT_COLUMNS)
    }
    return ObservedDataset(
        times=grid,
        plasma=plasma,
        observed=observed,
        parameters=params.to_dict(),
    )


def sample_csv() -> bytes:
    """The sample dataset rendered to CSV (regenerated, not read from disk)."""
    return export_dataset(sample_dataset())


def shipped_sample_bytes() -> bytes:
    """The sample file as shipped inside the package at ``data/sample.csv``."""
    return (resources.files("cnspk") / SAMPLE_RESOURCE).read_bytes()
