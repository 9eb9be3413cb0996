"""Structural model: plasma forcing and the four-compartment CNS system.

The central nervous system is represented by four well-stirred compartments —
brain blood (``Cbb``), brain mass (``Cbm``), cranial CSF (``Cccsf``) and
spinal CSF (``Cscsf``) — driven by a measured plasma concentration profile.
Drug moves along physiological flows (perfusion, CSF secretion and
circulation, interstitial bulk flow) and across barriers (blood-brain,
blood-CSF, ependymal, spinal) by passive permeability and active transport.
Only the unbound, diffusible fraction of drug crosses barriers; ionization /
partition factors (``lambda_*``) scale the diffusible fraction on the tissue
and CSF sides.

For a fixed parameter set the system is affine in the state,

    d/dt s(t) = A s(t) + b * C_p(t),

with ``A`` having non-negative off-diagonal entries (drug only moves between
compartments or leaves the modeled region; it is never destroyed into a
negative amount).  ``system_matrix`` assembles ``(A, b)`` and
``evaluate_rhs`` applies them; both use the identical arithmetic so the
results agree bit-for-bit with the integrator core.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidProfileError, NumericDomainError
from .params import ParameterSet

__all__ = [
    "COMPARTMENT_COLUMNS",
    "N_COMPARTMENTS",
    "PlasmaProfile",
    "CompartmentState",
    "plasma_at",
    "system_matrix",
    "evaluate_rhs",
]

#: Output column labels for the four modeled compartments, in state order.
COMPARTMENT_COLUMNS: tuple[str, ...] = ("Cbb", "Cbm", "Cccsf", "Cscsf")

#: Number of modeled compartments.
N_COMPARTMENTS: int = 4

_BB, _BM, _CCSF, _SCSF = 0, 1, 2, 3


@dataclass(frozen=True, eq=False)
class PlasmaProfile:
    """Measured plasma concentration-time profile driving the model.

    Parameters
    ----------
    times : numpy.ndarray
        Sample times in hours.  At least two samples, strictly increasing,
        all finite.
    concentrations : numpy.ndarray
        Plasma concentrations in mg/L at ``times``.  Non-negative and
        finite.

    Raises
    ------
    InvalidProfileError
        If the arrays violate any of the above.
    """

    times: np.ndarray
    concentrations: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=np.float64)
        c = np.asarray(self.concentrations, dtype=np.float64)
        if t.ndim != 1 or c.ndim != 1:
            raise InvalidProfileError("times and concentrations must be 1-d arrays")
        if t.shape != c.shape:
            raise InvalidProfileError(
                f"times and concentrations differ in length ({t.size} vs {c.size})"
            )
        if t.size < 2:
            raise InvalidProfileError(
                f"a plasma profile needs at least 2 samples, got {t.size}"
            )
        if not np.all(np.isfinite(t)):
            raise InvalidProfileError("plasma sample times must all be finite")
        if not np.all(np.isfinite(c)):
            raise InvalidProfileError("plasma concentrations must all be finite")
        if np.any(np.diff(t) <= 0.0):
            k = int(np.argmax(np.diff(t) <= 0.0))
            raise InvalidProfileError(
                f"plasma sample times must be strictly increasing "
                f"(violated between samples {k + 1} and {k + 2})"
            )
        if np.any(c < 0.0):
            k = int(np.argmax(c < 0.0))
            raise InvalidProfileError(
                f"plasma concentrations must be non-negative "
                f"(sample {k + 1} is {c[k]!r})"
            )
        t = t.copy()
        c = c.copy()
        t.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "concentrations", c)

    @property
    def t_start(self) -> float:
        """Time of the first plasma sample (hours)."""
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        """Time of the last plasma sample (hours)."""
        return float(self.times[-1])

    def __len__(self) -> int:
        return int(self.times.size)


@dataclass(frozen=True)
class CompartmentState:
    """Concentrations of the four modeled compartments at one instant."""

    cbb: float = 0.0
    cbm: float = 0.0
    cccsf: float = 0.0
    cscsf: float = 0.0

    def to_array(self) -> np.ndarray:
        """State as a float64 array in canonical compartment order."""
        return np.array([self.cbb, self.cbm, self.cccsf, self.cscsf], dtype=np.float64)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "CompartmentState":
        """Build from a length-4 array in canonical compartment order."""
        v = np.asarray(values, dtype=np.float64)
        return cls(float(v[0]), float(v[1]), float(v[2]), float(v[3]))


def plasma_at(profile: PlasmaProfile, t) -> np.ndarray | float:
    """Plasma concentration at time(s) ``t``.

    Linear interpolation between samples; constant extrapolation beyond the
    first and last sample (the profile is held at its edge values).

    Parameters
    ----------
    profile : PlasmaProfile
        The driving profile.
    t : float or array_like
        Query time(s) in hours.

    Returns
    -------
    float or numpy.ndarray
        Scalar for scalar input, array for array input.
    """
    out = np.interp(t, profile.times, profile.concentrations)
    if np.ndim(t) == 0:
        return float(out)
    return out


def _transfer(A: np.ndarray, V: np.ndarray, src: int, dst: int, coeff: float) -> None:
    # Flux coeff * C_src (mg/h) leaves src and enters dst.
    A[dst, src] += coeff / V[dst]
    A[src, src] -= coeff / V[src]


def _sink(A: np.ndarray, V: np.ndarray, src: int, coeff: float) -> None:
    # Flux coeff * C_src (mg/h) leaves the modeled region entirely.
    A[src, src] -= coeff / V[src]


def system_matrix(params: ParameterSet) -> tuple[np.ndarray, np.ndarray]:
    """Assemble the affine system ``d/dt s = A s + b * C_p(t)``.

    Parameters
    ----------
    params : ParameterSet
        Model parameters.

    Returns
    -------
    (A, b) : tuple[numpy.ndarray, numpy.ndarray]
        ``A`` is the 4x4 state matrix (units 1/h) with non-negative
        off-diagonal entries; ``b`` is the length-4 forcing gain multiplying
        the plasma concentration (units 1/h).
    """
    p = params
    V = np.array([p["V_bb"], p["V_bm"], p["V_ccsf"], p["V_scsf"]], dtype=np.float64)

    # Diffusible (unbound, un-ionized) fraction on each side of a barrier.
    u_bb = p["fu_bb"]
    d_bm = p["lambda_bm"] * p["fu_bm"]
    d_cc = p["lambda_ccsf"] * p["fu_csf"]
    d_sc = p["lambda_scsf"] * p["fu_csf"]

    A = np.zeros((4, 4), dtype=np.float64)
    b = np.zeros(4, dtype=np.float64)

    # Perfusion: arterial inflow carries total blood concentration
    # Kp_bp * C_p; venous outflow carries C_bb out of the modeled region.
    b[_BB] += p["Q_bb"] * p["Kp_bp"] / V[_BB]
    _sink(A, V, _BB, p["Q_bb"])

    # Blood-brain barrier: passive exchange of the diffusible species plus
    # carrier-mediated uptake and efflux.
    _transfer(A, V, _BB, _BM, p["PSB"] * u_bb)
    _transfer(A, V, _BM, _BB, p["PSB"] * d_bm)
    _transfer(A, V, _BB, _BM, p["CL_up_bbb"] * u_bb)
    _transfer(A, V, _BM, _BB, p["CL_ef_bbb"] * d_bm)

    # Blood-CSF barrier (choroid plexus): passive exchange, active
    # transport, and CSF secretion carrying unbound drug into cranial CSF.
    _transfer(A, V, _BB, _CCSF, p["PSC"] * u_bb)
    _transfer(A, V, _CCSF, _BB, p["PSC"] * d_cc)
    _transfer(A, V, _BB, _CCSF, p["CL_up_bcsfb"] * u_bb)
    _transfer(A, V, _CCSF, _BB, p["CL_ef_bcsfb"] * d_cc)
    _transfer(A, V, _BB, _CCSF, p["Q_sec"] * u_bb)

    # Ependymal lining: passive exchange between brain interstitium and
    # cranial CSF; interstitial bulk flow drains unbound drug the same way.
    _transfer(A, V, _BM, _CCSF, p["PSE"] * d_bm)
    _transfer(A, V, _CCSF, _BM, p["PSE"] * d_cc)
    _transfer(A, V, _BM, _CCSF, p["Q_bulk"] * p["fu_bm"])

    # Metabolic loss of unbound drug inside brain tissue.
    _sink(A, V, _BM, p["CL_bm"] * p["fu_bm"])

    # CSF circulation: cranial-to-spinal bulk flow, and reabsorption into
    # venous blood from both CSF pools (leaves the modeled region).
    _transfer(A, V, _CCSF, _SCSF, p["Q_c2s"])
    _sink(A, V, _CCSF, p["Q_abs_c"])
    _sink(A, V, _SCSF, p["Q_abs_s"])

    # Spinal barrier: unbound plasma drug enters spinal CSF directly; the
    # reverse leak returns to systemic blood, which is outside the model.
    b[_SCSF] += p["PSS"] * p["fu_p"] / V[_SCSF]
    _sink(A, V, _SCSF, p["PSS"] * d_sc)

    return A, b


def evaluate_rhs(
    params: ParameterSet,
    state: CompartmentState | np.ndarray,
    t: float,
    profile: PlasmaProfile,
) -> np.ndarray:
    """Time-derivative of the compartment concentrations at time ``t``.

    Computes ``A @ state + b * plasma_at(profile, t)`` with ``(A, b)`` from
    :func:`system_matrix`, using a fixed left-to-right accumulation so the
    result agrees bit-for-bit with the compiled integrator core.

    Parameters
    ----------
    params : ParameterSet
        Model parameters.
    state : CompartmentState or numpy.ndarray
        Compartment concentrations (mg/L); arrays must have length 4.
    t : float
        Evaluation time in hours.
    profile : PlasmaProfile
        Plasma forcing profile.

    Returns
    -------
    numpy.ndarray
        Length-4 derivative (mg/L/h) in canonical compartment order.

    Raises
    ------
    NumericDomainError
        If the state or ``t`` is not finite.
    """
    if isinstance(state, CompartmentState):
        s = state.to_array()
    else:
        s = np.asarray(state, dtype=np.float64)
        if s.shape != (4,):
            raise NumericDomainError(f"state must have 4 entries, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise NumericDomainError("state contains non-finite values")
    if not math.isfinite(t):
        raise NumericDomainError(f"time must be finite, got {t!r}")
    cp = plasma_at(profile, float(t))
    A, b = system_matrix(params)
    out = np.empty(4, dtype=np.float64)
    for i in range(4):
        acc = 0.0
        for j in range(4):
            acc += A[i, j] * s[j]
        acc += b[i] * cp
        out[i] = acc
    return out
