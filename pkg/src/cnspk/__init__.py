"""CNS drug-distribution workbench.

Simulates unbound drug concentrations in four CNS compartments (brain
blood, brain mass, cranial CSF, spinal CSF) driven by a measured plasma
profile, computes PK summary metrics, runs one-at-a-time sensitivity
sweeps, and fits parameters to observed series with differential
evolution.  The HTTP service (:mod:`cnspk.service`) and the CLI
(:mod:`cnspk.cli`) are thin facades over the functions exported here.
"""

from __future__ import annotations

from . import errors
from .dataio import (
    CANONICAL_COLUMNS,
    ObservedDataset,
    export_dataset,
    export_estimation_tables,
    export_table,
    parse_bounds,
    parse_input,
    parse_params,
    resolve_parameters,
    sample_csv,
    sample_dataset,
    shipped_sample_bytes,
)
from .estimate import (
    PENALTY_LOSS,
    BoundsSpec,
    DeConfig,
    EstimationReport,
    ParamBounds,
    estimate,
    loss,
)
from .integrate import (
    IntegrationStats,
    IntegratorConfig,
    Trajectory,
    dense_grid,
    integrate,
    new_cancel_flag,
)
from .metrics import CompartmentPk, PkSummary, summarize
from .model import (
    COMPARTMENT_COLUMNS,
    N_COMPARTMENTS,
    CompartmentState,
    PlasmaProfile,
    evaluate_rhs,
    plasma_at,
    system_matrix,
)
from .params import PARAM_NAMES, ParameterSet, manifest_rows
from .sensitivity import (
    DEFAULT_MULTIPLIERS,
    SweepCurve,
    SweepResult,
    SweepSpec,
    run_sweep,
)
from .workbench import DEFAULT_GRID_POINTS, SimulationResult, simulate

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "errors",
    # parameters
    "ParameterSet",
    "PARAM_NAMES",
    "manifest_rows",
    # model
    "PlasmaProfile",
    "CompartmentState",
    "COMPARTMENT_COLUMNS",
    "N_COMPARTMENTS",
    "system_matrix",
    "evaluate_rhs",
    "plasma_at",
    # integration
    "IntegratorConfig",
    "IntegrationStats",
    "Trajectory",
    "integrate",
    "dense_grid",
    "new_cancel_flag",
    # metrics + simulation
    "CompartmentPk",
    "PkSummary",
    "summarize",
    "SimulationResult",
    "simulate",
    "DEFAULT_GRID_POINTS",
    # sensitivity
    "SweepSpec",
    "SweepCurve",
    "SweepResult",
    "run_sweep",
    "DEFAULT_MULTIPLIERS",
    # estimation
    "ParamBounds",
    "BoundsSpec",
    "DeConfig",
    "EstimationReport",
    "estimate",
    "loss",
    "PENALTY_LOSS",
    # data io
    "ObservedDataset",
    "CANONICAL_COLUMNS",
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
]
