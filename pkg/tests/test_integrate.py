"""Adaptive solver behavior: output contract, modes, budgets, cancellation."""

from __future__ import annotations

import numpy as np
import pytest

from cnspk import (
    IntegratorConfig,
    ParameterSet,
    PlasmaProfile,
    dense_grid,
    integrate,
    new_cancel_flag,
)
from cnspk.errors import CancelledError, IntegrationFailureError, NumericDomainError

from conftest import KNOTS_27, bateman


@pytest.fixture(scope="module")
def traj(ref_params, profile27):
    return integrate(ref_params, profile27, dense_grid(0.0, 72.0, 145))


def test_dense_grid_contract():
    g = dense_grid(0.0, 72.0, 7)
    assert g[0] == 0.0 and g[-1] == 72.0 and len(g) == 7
    assert np.all(np.diff(g) > 0)
    with pytest.raises(ValueError):
        dense_grid(0.0, 1.0, 1)
    with pytest.raises(ValueError):
        dense_grid(2.0, 1.0, 5)


def test_trajectory_shape_and_stats(traj):
    assert traj.states.shape == (145, 4)
    assert len(traj) == 145
    assert traj.stats.accepted > 0
    assert traj.stats.attempts == traj.stats.accepted + traj.stats.rejected
    assert traj.stats.explicit_steps + traj.stats.implicit_steps == traj.stats.accepted


def test_plasma_column_is_profile_on_the_grid(traj, profile27):
    expected = np.interp(traj.times, profile27.times, profile27.concentrations)
    assert np.array_equal(traj.plasma, expected)


def test_states_start_at_zero_and_stay_nonnegative(traj):
    assert np.all(traj.states[0] == 0.0)
    assert np.all(traj.states >= -1e-12)


def test_column_accessor(traj):
    assert np.array_equal(traj.column("Cbm"), traj.states[:, 1])
    with pytest.raises(KeyError):
        traj.column("Cxx")


def test_output_times_validation(ref_params, profile27):
    with pytest.raises(ValueError, match="strictly increasing"):
        integrate(ref_params, profile27, np.array([1.0, 1.0]))
    with pytest.raises(ValueError, match="finite"):
        integrate(ref_params, profile27, np.array([0.0, np.nan]))
    with pytest.raises(ValueError, match="non-empty"):
        integrate(ref_params, profile27, np.array([]))


def test_outputs_before_profile_start_are_zero(ref_params):
    profile = PlasmaProfile(np.array([10.0, 20.0]), np.array([1.0, 1.0]))
    out = integrate(ref_params, profile, np.array([0.0, 5.0, 10.0, 15.0]))
    assert np.all(out.states[:2] == 0.0)
    assert np.any(out.states[3] > 0.0)


def test_outputs_beyond_profile_extend_constant_forcing(ref_params, profile27):
    # beyond the last sample the forcing holds its final value (zero here),
    # so concentrations keep washing out instead of jumping
    out = integrate(ref_params, profile27, np.array([60.0, 72.0, 80.0, 96.0]))
    cbm = out.column("Cbm")
    assert cbm[2] < cbm[1] and cbm[3] < cbm[2]


def test_method_codes_agree_on_smooth_problem(ref_params, profile27):
    grid = dense_grid(0.0, 72.0, 73)
    cfg_auto = IntegratorConfig(rtol=1e-8, atol=1e-11)
    cfg_exp = IntegratorConfig(rtol=1e-8, atol=1e-11, method="explicit")
    cfg_imp = IntegratorConfig(rtol=1e-8, atol=1e-11, method="implicit")
    a = integrate(ref_params, profile27, grid, cfg_auto).states
    e = integrate(ref_params, profile27, grid, cfg_exp).states
    i = integrate(ref_params, profile27, grid, cfg_imp).states
    scale = np.max(np.abs(a))
    assert np.max(np.abs(e - a)) < 1e-6 * scale
    assert np.max(np.abs(i - a)) < 1e-6 * scale


def test_forced_methods_populate_matching_stats(ref_params, profile27):
    grid = dense_grid(0.0, 72.0, 37)
    e = integrate(ref_params, profile27, grid, IntegratorConfig(method="explicit")).stats
    i = integrate(ref_params, profile27, grid, IntegratorConfig(method="implicit")).stats
    assert e.implicit_steps == 0 and e.explicit_steps > 0
    assert i.explicit_steps == 0 and i.implicit_steps > 0


def test_bad_method_rejected(ref_params, profile27):
    with pytest.raises(NumericDomainError, match="method"):
        integrate(ref_params, profile27, np.array([0.0, 1.0]), IntegratorConfig(method="rk4"))


def test_tolerance_validation():
    with pytest.raises(NumericDomainError):
        IntegratorConfig(rtol=-1.0)
    with pytest.raises(NumericDomainError):
        IntegratorConfig(atol=0.0)
    with pytest.raises(NumericDomainError):
        IntegratorConfig(max_steps=0)


def test_step_budget_exhaustion_reports_last_time(ref_params, profile27):
    cfg = IntegratorConfig(max_steps=10)
    with pytest.raises(IntegrationFailureError) as exc_info:
        integrate(ref_params, profile27, dense_grid(0.0, 72.0, 73), cfg)
    assert exc_info.value.last_time is not None
    assert 0.0 <= exc_info.value.last_time < 72.0
    assert "10" in str(exc_info.value)


def test_preset_cancel_flag_aborts(ref_params, profile27):
    flag = new_cancel_flag()
    flag[0] = 1
    with pytest.raises(CancelledError):
        integrate(ref_params, profile27, dense_grid(0.0, 72.0, 73), cancel=flag)


def test_h_max_caps_step_sizes(ref_params, profile27):
    grid = dense_grid(0.0, 72.0, 37)
    free = integrate(ref_params, profile27, grid, IntegratorConfig())
    capped = integrate(ref_params, profile27, grid, IntegratorConfig(h_max=0.05))
    assert capped.stats.accepted > 2 * free.stats.accepted


def test_output_grid_refinement_is_consistent(ref_params, profile27):
    # the dense-output interpolant must agree with re-solving on a
    # coarser grid: shared times see the same accepted-step history
    fine = integrate(ref_params, profile27, dense_grid(0.0, 72.0, 145))
    coarse = integrate(ref_params, profile27, dense_grid(0.0, 72.0, 37))
    sel = np.isin(fine.times, coarse.times)
    assert np.allclose(fine.states[sel], coarse.states, rtol=1e-6, atol=1e-10)


def test_single_output_time(ref_params, profile27):
    out = integrate(ref_params, profile27, np.array([24.0]))
    assert out.states.shape == (1, 4)
    assert np.all(out.states > 0.0)


def test_results_are_deterministic(ref_params, profile27):
    grid = dense_grid(0.0, 72.0, 73)
    a = integrate(ref_params, profile27, grid)
    b = integrate(ref_params, profile27, grid)
    assert np.array_equal(a.states, b.states)
