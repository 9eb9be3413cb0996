"""Summary metrics for simulated concentration-time curves.

For each compartment series the workbench reports the peak concentration
(Cmax), the time of the first sample attaining that peak (Tmax), and the
area under the curve from the start of the reported grid to its end
(AUC, composite linear trapezoid).  Metrics are computed on the reported
output grid — not on internal solver steps — so they are reproducible
from any exported table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidTrajectoryError
from .integrate import Trajectory
from .model import COMPARTMENT_COLUMNS

__all__ = ["CompartmentPk", "PkSummary", "summarize"]


@dataclass(frozen=True)
class CompartmentPk:
    """Cmax/Tmax/AUC triple for a single compartment series.

    Attributes
    ----------
    cmax : float
        Largest sampled concentration, mg/L.
    tmax : float
        Time of the first sample attaining ``cmax``, h.
    auc : float
        Composite linear-trapezoid area over the full reported grid,
        mg*h/L.
    """

    cmax: float
    tmax: float
    auc: float


@dataclass(frozen=True)
class PkSummary:
    """Per-compartment curve metrics over a common time horizon.

    Attributes
    ----------
    t_start, t_end : float
        First and last time of the grid the metrics were computed on, h.
    by_compartment : dict[str, CompartmentPk]
        Metrics keyed by compartment column name, in canonical column
        order.
    """

    t_start: float
    t_end: float
    by_compartment: dict[str, CompartmentPk]

    def rows(self) -> list[tuple[str, float, float, float]]:
        """Metrics as (compartment, Cmax, Tmax, AUC) rows in column order."""
        return [
            (name, pk.cmax, pk.tmax, pk.auc)
            for name, pk in self.by_compartment.items()
        ]


def summarize(traj: Trajectory) -> PkSummary:
    """Compute Cmax, Tmax, and AUC for every compartment of a trajectory.

    Parameters
    ----------
    traj : Trajectory
        Simulated trajectory with at least two grid points.

    Returns
    -------
    PkSummary
        Cmax is the maximum sampled value; Tmax the time of the first
        sample attaining it (ties broken by earliest time); AUC the
        composite linear trapezoid over the full grid.

    Raises
    ------
    InvalidTrajectoryError
        If the trajectory has fewer than two points.
    """
    if len(traj) < 2:
        raise InvalidTrajectoryError(
            f"need at least 2 grid points to summarize, got {len(traj)}"
        )
    times = traj.times
    by: dict[str, CompartmentPk] = {}
    for col, name in enumerate(COMPARTMENT_COLUMNS):
        series = traj.states[:, col]
        k = int(np.argmax(series))  # argmax returns the first maximum
        by[name] = CompartmentPk(
            cmax=float(series[k]),
            tmax=float(times[k]),
            auc=float(np.trapezoid(series, times)),
        )
    return PkSummary(
        t_start=float(times[0]), t_end=float(times[-1]), by_compartment=by
    )
