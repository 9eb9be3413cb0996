"""Shared fixtures and the acceptance-summary reporter."""

from __future__ import annotations

import numpy as np
import pytest

from cnspk import (
    IntegratorConfig,
    ObservedDataset,
    ParameterSet,
    PlasmaProfile,
    integrate,
)
from cnspk.model import COMPARTMENT_COLUMNS

# knot layout of the shipped sample: dense where the peak lives
KNOTS_27 = np.array(
    [0, 0.25, 0.5, 0.75, 1, 1.5, 2, 2.5, 3, 3.5, 4, 5, 6, 8, 10, 12,
     16, 20, 24, 30, 36, 42, 48, 54, 60, 66, 72],
    dtype=float,
)


def bateman(times: np.ndarray, ka: float = 0.8, ke: float = 0.06, peak: float = 0.05) -> np.ndarray:
    """Single-peak absorption/elimination curve scaled to a given maximum."""
    t_peak = np.log(ka / ke) / (ka - ke)
    amp = peak / (np.exp(-ke * t_peak) - np.exp(-ka * t_peak))
    return np.clip(amp * (np.exp(-ke * times) - np.exp(-ka * times)), 0.0, None)


def make_observed(
    params: ParameterSet,
    times: np.ndarray,
    plasma: np.ndarray,
    config: IntegratorConfig | None = None,
    columns: tuple[str, ...] = COMPARTMENT_COLUMNS,
) -> ObservedDataset:
    """Noiseless observations: solve at exactly the sampling times.

    The profile is defined on the sampling grid itself, so the forcing a
    fitter reconstructs from the dataset is bit-identical to the forcing
    that produced it.
    """
    traj = integrate(params, PlasmaProfile(times, plasma), times, config)
    observed = {
        c: traj.states[:, COMPARTMENT_COLUMNS.index(c)].copy() for c in columns
    }
    return ObservedDataset(
        times=times.copy(), plasma=plasma.copy(), observed=observed, parameters={}
    )


@pytest.fixture(scope="session")
def ref_params() -> ParameterSet:
    return ParameterSet.reference()


@pytest.fixture(scope="session")
def profile27() -> PlasmaProfile:
    return PlasmaProfile(KNOTS_27, bateman(KNOTS_27))


# --- acceptance reporting ---------------------------------------------------

_ACCEPTANCE: list[tuple[str, bool, str]] = []


def record_acceptance(number: str, ok: bool, detail: str) -> None:
    """Register one criterion verdict and fail the test if it did not hold."""
    _ACCEPTANCE.append((number, ok, detail))
    assert ok, f"ACCEPTANCE {number} FAIL — {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config) -> None:
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(_ACCEPTANCE):
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {number} {verdict} — {detail}")
