"""Structure of the four-compartment system and the forcing profile."""

from __future__ import annotations

import numpy as np
import pytest

from cnspk import (
    COMPARTMENT_COLUMNS,
    CompartmentState,
    ParameterSet,
    PlasmaProfile,
    evaluate_rhs,
    plasma_at,
    system_matrix,
)
from cnspk.errors import InvalidProfileError

from conftest import KNOTS_27, bateman


def test_compartment_column_order():
    assert COMPARTMENT_COLUMNS == ("Cbb", "Cbm", "Cccsf", "Cscsf")


@pytest.mark.parametrize(
    "times,conc,match",
    [
        ([0.0], [1.0], "at least 2"),
        ([0.0, 0.0], [1.0, 1.0], "strictly increasing"),
        ([1.0, 0.5], [1.0, 1.0], "strictly increasing"),
        ([0.0, 1.0], [1.0, -0.5], "negative"),
        ([0.0, 1.0], [1.0, float("nan")], "finite"),
        ([0.0, float("inf")], [1.0, 1.0], "finite"),
        ([0.0, 1.0, 2.0], [1.0, 1.0], "length"),
    ],
)
def test_profile_validation(times, conc, match):
    with pytest.raises(InvalidProfileError, match=match):
        PlasmaProfile(np.array(times, dtype=float), np.array(conc, dtype=float))


def test_profile_span_and_len():
    p = PlasmaProfile(KNOTS_27, bateman(KNOTS_27))
    assert p.t_start == 0.0
    assert p.t_end == 72.0
    assert len(p) == 27


def test_plasma_at_interpolates_linearly_and_clamps():
    p = PlasmaProfile(np.array([0.0, 2.0, 4.0]), np.array([0.0, 1.0, 0.0]))
    assert plasma_at(p, 1.0) == 0.5
    assert plasma_at(p, 2.0) == 1.0
    assert plasma_at(p, 3.0) == 0.5
    # outside the span the curve holds its endpoint values
    assert plasma_at(p, -1.0) == 0.0
    assert plasma_at(p, 10.0) == 0.0
    arr = plasma_at(p, np.array([0.0, 1.0, 3.0]))
    assert np.allclose(arr, [0.0, 0.5, 0.5])


def test_system_matrix_shape_and_metzler_sign_pattern(ref_params):
    A, b = system_matrix(ref_params)
    assert A.shape == (4, 4)
    assert b.shape == (4,)
    off = A[~np.eye(4, dtype=bool)]
    assert np.all(off >= 0.0)
    assert np.all(np.diag(A) < 0.0)
    assert np.all(b >= 0.0)
    assert b[0] > 0.0  # plasma feeds brain blood


def test_volume_weighted_column_sums_are_sinks(ref_params):
    # conservation: V-weighted column sums equal the negated elimination
    # and efflux-to-plasma sinks, so they can never be positive.
    A, _ = system_matrix(ref_params)
    V = np.array([ref_params[n] for n in ("V_bb", "V_bm", "V_ccsf", "V_scsf")])
    col = (V[:, None] * A).sum(axis=0)
    assert np.all(col <= 1e-15)


def test_reference_eigenvalues_match_published_timescales(ref_params):
    A, _ = system_matrix(ref_params)
    ev = np.sort(np.linalg.eigvals(A).real)
    expected = np.array([-554.8, -0.492, -0.216, -0.0084])
    assert np.allclose(ev, expected, rtol=2e-3, atol=2e-4)


def test_evaluate_rhs_matches_matrix_form(ref_params, profile27):
    A, b = system_matrix(ref_params)
    state = CompartmentState(0.01, 0.002, 0.003, 0.001)
    t = 2.5
    ds = evaluate_rhs(ref_params, state, t, profile27)
    expected = A @ state.to_array() + b * plasma_at(profile27, t)
    assert np.allclose(ds, expected, rtol=1e-13, atol=0.0)


def test_compartment_state_round_trip():
    s = CompartmentState(1.0, 2.0, 3.0, 4.0)
    assert np.array_equal(s.to_array(), [1.0, 2.0, 3.0, 4.0])
    assert CompartmentState.from_array(np.array([1.0, 2.0, 3.0, 4.0])) == s


def test_stiffness_grows_as_brain_blood_volume_shrinks(ref_params):
    A_ref, _ = system_matrix(ref_params)
    A_small, _ = system_matrix(ref_params.with_value("V_bb", 0.005))
    rho_ref = np.max(np.abs(np.linalg.eigvals(A_ref).real))
    rho_small = np.max(np.abs(np.linalg.eigvals(A_small).real))
    assert rho_small > 5.0 * rho_ref
