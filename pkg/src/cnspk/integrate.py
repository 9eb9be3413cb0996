"""Adaptive ODE integration with automatic stiff/non-stiff switching.

The driver pairs an explicit Dormand-Prince 5(4) scheme (non-stiff regime)
with a stiffly-accurate L-stable SDIRK method of order 3 (stiff regime).
Because the system is affine with a constant state matrix, its Jacobian is
known exactly and its spectral radius ``rho`` is computed once per call.
The switching heuristic compares the error-controlled step the integrator
wants against the explicit scheme's stability ceiling: while running
explicitly the step is capped at ``3.0 / rho``, and three consecutive
accepted steps whose error-desired step exceeds that ceiling hand the run
over to the implicit method; three consecutive steps wanting less than
``1.5 / rho`` hand it back.  ``method="explicit"`` and
``method="implicit"`` pin one family (disabling switching), which is how
the stiffness acceptance check demonstrates that the explicit scheme alone
exhausts its step budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    CancelledError,
    IntegrationFailureError,
    NumericBlowupError,
    NumericDomainError,
)
from .model import COMPARTMENT_COLUMNS, PlasmaProfile, system_matrix
from .params import ParameterSet

__all__ = [
    "IntegratorConfig",
    "IntegrationStats",
    "Trajectory",
    "integrate",
    "dense_grid",
    "new_cancel_flag",
]

_METHOD_CODES = {
    "auto": _kernels.METHOD_AUTO,
    "explicit": _kernels.METHOD_EXPLICIT,
    "implicit": _kernels.METHOD_IMPLICIT,
}


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and budget for one integration.

    Parameters
    ----------
    rtol : float
        Relative tolerance (dimensionless), > 0.
    atol : float
        Absolute tolerance (mg/L), > 0.
    h_init : float
        Initial step in hours; 0 selects one automatically.
    h_max : float
        Largest allowed step in hours; 0 means the full span.
    max_steps : int
        Budget of step *attempts* (accepted plus rejected), >= 1.
    method : str
        ``"auto"`` (stiffness switching), ``"explicit"`` (Dormand-Prince
        only), or ``"implicit"`` (SDIRK only).
    """

    rtol: float = 1e-6
    atol: float = 1e-9
    h_init: float = 0.0
    h_max: float = 0.0
    max_steps: int = 500_000
    method: str = "auto"

    def __post_init__(self) -> None:
        if not (self.rtol > 0.0):
            raise NumericDomainError(f"rtol must be > 0, got {self.rtol!r}")
        if not (self.atol > 0.0):
            raise NumericDomainError(f"atol must be > 0, got {self.atol!r}")
        if self.max_steps < 1:
            raise NumericDomainError(f"max_steps must be >= 1, got {self.max_steps!r}")
        if self.h_init < 0.0 or not np.isfinite(self.h_init):
            raise NumericDomainError(f"h_init must be finite and >= 0, got {self.h_init!r}")
        if self.h_max < 0.0 or not np.isfinite(self.h_max):
            raise NumericDomainError(f"h_max must be finite and >= 0, got {self.h_max!r}")
        if self.method not in _METHOD_CODES:
            raise NumericDomainError(
                f"method must be one of {sorted(_METHOD_CODES)}, got {self.method!r}"
            )


@dataclass(frozen=True)
class IntegrationStats:
    """Step accounting for one integration."""

    accepted: int
    rejected: int
    explicit_steps: int
    implicit_steps: int
    explicit_segments: int
    implicit_segments: int

    @property
    def attempts(self) -> int:
        """Total step attempts (accepted + rejected)."""
        return self.accepted + self.rejected


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Simulated compartment concentrations on a reporting grid.

    Attributes
    ----------
    times : numpy.ndarray
        Strictly increasing output times (h).
    states : numpy.ndarray
        Shape (len(times), 4) concentrations (mg/L) in canonical
        compartment order (Cbb, Cbm, Cccsf, Cscsf).
    plasma : numpy.ndarray
        Plasma forcing evaluated on the same grid (mg/L); carried along so
        exported tables are self-contained.
    stats : IntegrationStats or None
        Step accounting; None for trajectories loaded from a table rather
        than produced by the solver.
    """

    times: np.ndarray
    states: np.ndarray
    plasma: np.ndarray
    stats: IntegrationStats | None

    def __len__(self) -> int:
        return int(self.times.size)

    def column(self, name: str) -> np.ndarray:
        """One compartment's series by its output column name (e.g. 'Cbm')."""
        try:
            j = COMPARTMENT_COLUMNS.index(name)
        except ValueError:
            raise KeyError(f"unknown compartment column: {name!r}") from None
        return self.states[:, j]


def new_cancel_flag() -> np.ndarray:
    """Shared cooperative-cancellation flag accepted by :func:`integrate`.

    Setting element 0 to a nonzero value makes any integration holding the
    flag stop at its next accepted step with :class:`CancelledError`.
    """
    return np.zeros(1, dtype=np.int64)


def dense_grid(t0: float, t1: float, n: int) -> np.ndarray:
    """``n`` uniformly spaced output times covering [t0, t1] inclusively.

    Raises
    ------
    ValueError
        If ``n < 2`` or ``t1 <= t0``.
    """
    if n < 2:
        raise ValueError(f"a grid needs at least 2 points, got {n}")
    if not (t1 > t0):
        raise ValueError(f"grid end must exceed start, got [{t0!r}, {t1!r}]")
    return np.linspace(t0, t1, n)


def _validated_output_times(output_times) -> np.ndarray:
    out = np.array(output_times, dtype=np.float64, copy=True)
    if out.ndim != 1 or out.size < 1:
        raise ValueError("output_times must be a non-empty 1-d array")
    if not np.all(np.isfinite(out)):
        raise ValueError("output_times must all be finite")
    if out.size > 1 and np.any(np.diff(out) <= 0.0):
        raise ValueError("output_times must be strictly increasing")
    return out


def integrate(
    params: ParameterSet,
    profile: PlasmaProfile,
    output_times,
    config: IntegratorConfig | None = None,
    *,
    cancel: np.ndarray | None = None,
) -> Trajectory:
    """Simulate the four compartments, reporting at exactly ``output_times``.

    All compartments start at zero at the first plasma sample time; output
    times before it are reported as zeros (drug-free system before the
    profile begins) and times beyond the last sample integrate against the
    constant-extrapolated forcing.

    Parameters
    ----------
    params : ParameterSet
        Model parameters.
    profile : PlasmaProfile
        Plasma forcing.
    output_times : array_like
        Strictly increasing times (h) at which states are reported.
    config : IntegratorConfig, optional
        Tolerances/budget; defaults used when omitted.
    cancel : numpy.ndarray, optional
        Flag from :func:`new_cancel_flag` for cooperative cancellation.

    Returns
    -------
    Trajectory

    Raises
    ------
    IntegrationFailureError
        If the step budget is exhausted; carries the last good time.
    NumericBlowupError
        If the state stops being finite; carries the last good time.
    CancelledError
        If the cancel flag was set.
    """
    cfg = config if config is not None else IntegratorConfig()
    out_t = _validated_output_times(output_times)

    A, b = system_matrix(params)
    rho = float(np.max(np.abs(np.linalg.eigvals(A))))

    t0 = profile.t_start
    states = np.zeros((out_t.size, 4), dtype=np.float64)
    n_pre = int(np.searchsorted(out_t, t0, side="left"))
    # rows with out_t < t0 stay zero; the kernel covers [t0, out_t[-1]]
    kernel_out = out_t[n_pre:]

    stats_vec = np.zeros(_kernels.N_STATS, dtype=np.int64)
    if kernel_out.size > 0 and kernel_out[-1] > t0:
        t_final = float(kernel_out[-1])
        inner = profile.times[(profile.times > t0) & (profile.times < t_final)]
        bps = np.append(inner, t_final)
        flag = cancel if cancel is not None else np.zeros(1, dtype=np.int64)
        status, last_t = _kernels.integrate_core(
            A,
            b,
            profile.times,
            profile.concentrations,
            np.zeros(4, dtype=np.float64),
            t0,
            bps,
            kernel_out,
            states[n_pre:],
            cfg.rtol,
            cfg.atol,
            cfg.h_init,
            cfg.h_max,
            cfg.max_steps,
            _METHOD_CODES[cfg.method],
            rho,
            flag,
            stats_vec,
        )
        if status == _kernels.STATUS_MAX_STEPS:
            raise IntegrationFailureError(
                f"step budget of {cfg.max_steps} exhausted at t={last_t:.6g} h "
                f"(target {t_final:.6g} h)",
                last_time=float(last_t),
            )
        if status == _kernels.STATUS_NONFINITE:
            raise NumericBlowupError(
                f"state became non-finite after t={last_t:.6g} h",
                last_time=float(last_t),
            )
        if status == _kernels.STATUS_CANCELLED:
            raise CancelledError(f"integration cancelled at t={last_t:.6g} h")
        emitted = int(stats_vec[_kernels.STAT_EMITTED])
        if emitted != kernel_out.size:
            raise IntegrationFailureError(
                f"internal error: {emitted} of {kernel_out.size} outputs emitted",
                last_time=float(last_t),
            )

    plasma = np.interp(out_t, profile.times, profile.concentrations)
    out_t.setflags(write=False)
    states.setflags(write=False)
    plasma.setflags(write=False)
    return Trajectory(
        times=out_t,
        states=states,
        plasma=plasma,
        stats=IntegrationStats(
            accepted=int(stats_vec[_kernels.STAT_ACCEPTED]),
            rejected=int(stats_vec[_kernels.STAT_REJECTED]),
            explicit_steps=int(stats_vec[_kernels.STAT_EXPLICIT_STEPS]),
            implicit_steps=int(stats_vec[_kernels.STAT_IMPLICIT_STEPS]),
            explicit_segments=int(stats_vec[_kernels.STAT_EXPLICIT_SEGMENTS]),
            implicit_segments=int(stats_vec[_kernels.STAT_IMPLICIT_SEGMENTS]),
        ),
    )
