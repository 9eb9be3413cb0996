"""One-at-a-time parameter sweeps and normalized sensitivity coefficients.

A sweep scales a single parameter by a set of multipliers, re-simulates
each scaled set on a common reporting grid, and quantifies the local
influence of the parameter with the normalized coefficient

    S_j = (dC_j / C_j) / (dp / p)

per compartment j, estimated by a central +/-1% perturbation around the
base value and evaluated at the time of that compartment's peak.  A sweep
over k multipliers performs exactly k + 2 integrations: one per
multiplier plus the two perturbation probes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BoundViolationError,
    IntegrationFailureError,
    NumericDomainError,
    UnknownParameterError,
)
from .integrate import IntegratorConfig, Trajectory, dense_grid, integrate
from .metrics import PkSummary, summarize
from .model import COMPARTMENT_COLUMNS, PlasmaProfile
from .params import PARAM_INDEX, PARAM_SPECS, ParameterSet
from .workbench import DEFAULT_GRID_POINTS

__all__ = ["DEFAULT_MULTIPLIERS", "SweepSpec", "SweepCurve", "SweepResult", "run_sweep"]

DEFAULT_MULTIPLIERS: tuple[float, ...] = (0.1, 0.5, 1.0, 2.0, 10.0)


def _clean_multipliers(multipliers) -> tuple[float, ...]:
    cleaned: list[float] = []
    for m in multipliers:
        v = float(m)
        if not np.isfinite(v) or v <= 0.0:
            raise NumericDomainError(
                f"multipliers must be positive and finite, got {m!r}"
            )
        if v not in cleaned:
            cleaned.append(v)
    if not cleaned:
        raise NumericDomainError("at least one multiplier is required")
    return tuple(cleaned)


@dataclass(frozen=True, eq=False)
class SweepSpec:
    """Description of a one-parameter sweep.

    Attributes
    ----------
    parameter : str
        Name of the swept parameter (manifest roster).
    base : ParameterSet
        Parameter set the multipliers scale.
    profile : PlasmaProfile
        Plasma forcing shared by every curve.
    multipliers : tuple of float
        Positive finite scale factors; duplicates are dropped, first
        occurrence wins.  Defaults to the canonical two-decade set.
    output_times : ndarray or None
        Common reporting grid; an evenly spaced default spanning the
        profile when omitted.
    config : IntegratorConfig
        Solver settings shared by every curve.
    """

    parameter: str
    base: ParameterSet
    profile: PlasmaProfile
    multipliers: tuple[float, ...] = DEFAULT_MULTIPLIERS
    output_times: np.ndarray | None = None
    config: IntegratorConfig = field(default_factory=IntegratorConfig)

    def __post_init__(self) -> None:
        if self.parameter not in PARAM_INDEX:
            raise UnknownParameterError(
                f"unknown parameter name: {self.parameter!r}"
            )
        object.__setattr__(
            self, "multipliers", _clean_multipliers(self.multipliers)
        )


@dataclass(frozen=True, eq=False)
class SweepCurve:
    """One member of the sweep family.

    ``value`` is the scaled parameter value actually simulated
    (base value x multiplier).
    """

    multiplier: float
    value: float
    trajectory: Trajectory
    pk: PkSummary


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Family of curves plus per-compartment sensitivity coefficients.

    ``coefficients`` maps compartment column name to the normalized
    coefficient S_j; entries are NaN where the base concentration at the
    evaluation time does not exceed the solver's absolute tolerance.
    ``n_integrations`` counts the solver calls the sweep issued
    (len(multipliers) + 2).
    """

    parameter: str
    curves: tuple[SweepCurve, ...]
    coefficients: dict[str, float]
    n_integrations: int


def run_sweep(
    spec: SweepSpec,
    *,
    relative_step: float = 0.01,
    cancel: np.ndarray | None = None,
) -> SweepResult:
    """Run a one-at-a-time sweep.

    Parameters
    ----------
    spec : SweepSpec
        What to sweep and how.
    relative_step : float
        Relative half-width of the central perturbation used for the
        sensitivity coefficients.
    cancel : ndarray, optional
        Cooperative cancellation flag shared by all solver calls.

    Returns
    -------
    SweepResult
        One trajectory + metric summary per multiplier, in multiplier
        order, plus the normalized coefficients.

    Raises
    ------
    BoundViolationError
        If a scaled value leaves the manifest bounds for the parameter;
        the error names the offending multiplier.
    IntegrationFailureError
        Propagated from the solver with the multiplier in the message.
    """
    if not (0.0 < relative_step < 1.0):
        raise NumericDomainError(
            f"relative_step must lie in (0, 1), got {relative_step!r}"
        )
    idx = PARAM_INDEX[spec.parameter]
    limits = PARAM_SPECS[idx]
    base_value = spec.base[spec.parameter]

    # validate the whole family before integrating anything
    for m in spec.multipliers:
        value = base_value * m
        if value < limits.min or value > limits.max:
            raise BoundViolationError(
                f"{spec.parameter}={value:g} (multiplier {m:g}) is outside "
                f"the physical bounds [{limits.min:g}, {limits.max:g}]",
                multiplier=m,
            )

    output_times = spec.output_times
    if output_times is None:
        output_times = dense_grid(
            spec.profile.t_start, spec.profile.t_end, DEFAULT_GRID_POINTS
        )

    def _integrate(pset: ParameterSet, context: str) -> Trajectory:
        try:
            return integrate(
                pset, spec.profile, output_times, spec.config, cancel=cancel
            )
        except IntegrationFailureError as exc:
            raise type(exc)(f"{context}: {exc.message}", exc.last_time) from exc

    curves = []
    for m in spec.multipliers:
        value = base_value * m
        traj = _integrate(
            spec.base.with_value(spec.parameter, value),
            f"{spec.parameter} multiplier {m:g}",
        )
        curves.append(
            SweepCurve(multiplier=m, value=value, trajectory=traj, pk=summarize(traj))
        )

    # +/- probes may step past a formal domain edge (e.g. a fraction pinned
    # at 1.0), which is harmless for the model equations; bypass validation.
    probes = []
    for sign, tag in ((1.0, "+"), (-1.0, "-")):
        arr = spec.base.to_array().copy()
        arr[idx] = base_value * (1.0 + sign * relative_step)
        probes.append(
            _integrate(
                ParameterSet._unchecked(arr),
                f"{spec.parameter} {tag}{relative_step:.0%} probe",
            )
        )
    plus, minus = probes

    # Coefficients are anchored to the curve midway between the probes: it
    # matches the base curve to second order in the step and keeps the
    # integration count independent of whether multiplier 1 was requested.
    mid = 0.5 * (plus.states + minus.states)
    coefficients: dict[str, float] = {}
    for col, name in enumerate(COMPARTMENT_COLUMNS):
        k = int(np.argmax(mid[:, col]))
        c_base = mid[k, col]
        if c_base > spec.config.atol:
            delta = plus.states[k, col] - minus.states[k, col]
            coefficients[name] = float(
                (delta / c_base) / (2.0 * relative_step)
            )
        else:
            coefficients[name] = float("nan")

    return SweepResult(
        parameter=spec.parameter,
        curves=tuple(curves),
        coefficients=coefficients,
        n_integrations=len(spec.multipliers) + 2,
    )
