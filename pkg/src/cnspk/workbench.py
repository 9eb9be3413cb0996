"""One-call simulation: integrate a parameter set and summarize the curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrate import IntegratorConfig, Trajectory, dense_grid, integrate
from .metrics import PkSummary, summarize
from .model import PlasmaProfile
from .params import ParameterSet

__all__ = ["SimulationResult", "simulate"]

DEFAULT_GRID_POINTS = 201


@dataclass(frozen=True, eq=False)
class SimulationResult:
    """A simulated trajectory together with its per-compartment metrics."""

    trajectory: Trajectory
    pk: PkSummary


def simulate(
    params: ParameterSet,
    profile: PlasmaProfile,
    output_times: np.ndarray | None = None,
    config: IntegratorConfig | None = None,
    *,
    grid_points: int = DEFAULT_GRID_POINTS,
    cancel: np.ndarray | None = None,
) -> SimulationResult:
    """Integrate ``params`` against ``profile`` and compute curve metrics.

    Parameters
    ----------
    params : ParameterSet
        Model parameters.
    profile : PlasmaProfile
        Measured plasma forcing.
    output_times : array_like, optional
        Reporting grid; defaults to ``grid_points`` evenly spaced samples
        spanning the profile.
    config : IntegratorConfig, optional
        Solver settings; library defaults when omitted.
    grid_points : int
        Size of the default reporting grid (ignored when ``output_times``
        is given).
    cancel : ndarray, optional
        Cooperative cancellation flag from
        :func:`cnspk.integrate.new_cancel_flag`.

    Returns
    -------
    SimulationResult
        Trajectory on the reporting grid plus Cmax/Tmax/AUC per
        compartment.
    """
    if output_times is None:
        output_times = dense_grid(profile.t_start, profile.t_end, grid_points)
    traj = integrate(params, profile, output_times, config, cancel=cancel)
    return SimulationResult(trajectory=traj, pk=summarize(traj))
