"""Loss function and differential-evolution fitting."""

from __future__ import annotations

import numpy as np
import pytest

from cnspk import (
    PENALTY_LOSS,
    BoundsSpec,
    DeConfig,
    IntegratorConfig,
    ObservedDataset,
    ParamBounds,
    ParameterSet,
    dense_grid,
    estimate,
    loss,
)
from cnspk.errors import (
    CancelledError,
    InfeasibleProblemError,
    InvalidBoundsError,
    NumericDomainError,
)

from conftest import bateman, make_observed


def _full_bounds(estimated: dict[str, tuple[float, float]]) -> BoundsSpec:
    ref = ParameterSet.reference()
    est = [ParamBounds(n, lo, hi) for n, (lo, hi) in estimated.items()]
    fixed = {n: ref[n] for n in ref if n not in estimated}
    return BoundsSpec(est, fixed)


@pytest.fixture(scope="module")
def obs50(ref_params):
    times = dense_grid(0.0, 72.0, 50)
    return make_observed(ref_params, times, bateman(times))


# --- BoundsSpec -------------------------------------------------------------


def test_bounds_require_full_roster_coverage():
    with pytest.raises(InvalidBoundsError, match="missing"):
        BoundsSpec([ParamBounds("V_bm", 0.5, 2.0)], {})


def test_bounds_reject_estimated_fixed_overlap(ref_params):
    fixed = {n: ref_params[n] for n in ref_params}
    with pytest.raises(InvalidBoundsError, match="V_bm"):
        BoundsSpec([ParamBounds("V_bm", 0.5, 2.0)], fixed)


def test_bounds_reject_inverted_interval(ref_params):
    fixed = {n: ref_params[n] for n in ref_params if n != "V_bm"}
    with pytest.raises(InvalidBoundsError):
        BoundsSpec([ParamBounds("V_bm", 2.0, 0.5)], fixed)


def test_bounds_reject_domain_violating_endpoints(ref_params):
    fixed = {n: ref_params[n] for n in ref_params if n != "fu_bb"}
    with pytest.raises(InvalidBoundsError):
        BoundsSpec([ParamBounds("fu_bb", -0.5, 0.8)], fixed)


def test_bounds_require_at_least_one_estimated(ref_params):
    with pytest.raises(InvalidBoundsError, match="estimation"):
        BoundsSpec([], {n: ref_params[n] for n in ref_params})


def test_bounds_expose_names_dim_and_arrays(ref_params):
    spec = _full_bounds({"V_bm": (0.5, 2.0), "PSB": (0.01, 1.0)})
    assert spec.names == ("V_bm", "PSB")
    assert spec.dim == 2
    assert np.array_equal(spec.lower_array(), [0.5, 0.01])
    assert np.array_equal(spec.upper_array(), [2.0, 1.0])
    p = spec.to_parameter_set(np.array([1.0, 0.5]))
    assert p["V_bm"] == 1.0 and p["PSB"] == 0.5
    assert p["V_bb"] == ref_params["V_bb"]


# --- DeConfig ---------------------------------------------------------------


@pytest.mark.parametrize(
    "kw",
    [
        {"np": 3},
        {"f": 0.0},
        {"f": 2.5},
        {"cr": -0.1},
        {"cr": 1.1},
        {"max_iter": 0},
        {"vtr": -1.0},
        {"stall_window": 0},
    ],
)
def test_de_config_validation(kw):
    with pytest.raises(NumericDomainError):
        DeConfig(**kw)


def test_de_config_population_defaults_to_ten_per_dimension():
    assert DeConfig().resolved_np(6) == 60
    assert DeConfig(np=24).resolved_np(6) == 24


# --- loss -------------------------------------------------------------------


def test_loss_hand_example_is_exactly_two(ref_params):
    # zero forcing keeps every model prediction at exactly zero, so the
    # loss reduces to sum(y^2) / (2 var(y)); for y = [0, c] that is
    # (0 + c^2) / (2 c^2/4) = 2, independent of c
    obs = ObservedDataset(
        times=np.array([0.0, 1.0]),
        plasma=np.zeros(2),
        observed={"Cbm": np.array([0.0, 4.0])},
        parameters={},
    )
    assert loss(ref_params, obs) == 2.0


def test_loss_is_zero_on_self_consistent_data(ref_params, obs50):
    assert loss(ref_params, obs50) == 0.0


def test_loss_positive_away_from_truth(ref_params, obs50):
    off = ref_params.with_value("PSB", 0.4)
    assert loss(off, obs50) > 1e-3


def test_loss_weighting_is_per_series_scale_invariant(ref_params):
    rng = np.random.default_rng(5)
    times = np.linspace(0.0, 10.0, 20)
    y1 = rng.uniform(0.5, 2.0, 20)
    y2 = rng.uniform(0.1, 0.4, 20)
    base = ObservedDataset(
        times=times, plasma=np.zeros(20),
        observed={"Cbb": y1, "Cbm": y2}, parameters={},
    )
    scaled = ObservedDataset(
        times=times, plasma=np.zeros(20),
        observed={"Cbb": 1e3 * y1, "Cbm": 7.5e-2 * y2}, parameters={},
    )
    a = loss(ref_params, base)
    b = loss(ref_params, scaled)
    assert abs(a - b) <= 1e-10 * a


def test_loss_penalty_on_integration_failure(ref_params, obs50):
    tiny_budget = IntegratorConfig(max_steps=5)
    assert loss(ref_params, obs50, tiny_budget) == PENALTY_LOSS


# --- estimate ---------------------------------------------------------------


def test_two_parameter_recovery_and_determinism(obs50):
    bounds = _full_bounds({"V_bm": (0.2, 6.0), "PSB": (0.01, 2.0)})
    de = DeConfig(np=20, max_iter=120, seed=7)
    a = estimate(obs50, bounds, de)
    b = estimate(obs50, bounds, de)
    truth = ParameterSet.reference()
    assert abs(a.best["V_bm"] - truth["V_bm"]) < 1e-4
    assert abs(a.best["PSB"] - truth["PSB"]) < 1e-4
    # byte-identical reports for a fixed seed
    assert a.best == b.best
    assert np.array_equal(a.loss_trace, b.loss_trace)
    assert np.array_equal(a.member_trace, b.member_trace)
    assert a.evaluations == b.evaluations
    assert a.termination == b.termination


def test_trace_is_monotone_and_consistent(obs50):
    bounds = _full_bounds({"V_bm": (0.2, 6.0), "PSB": (0.01, 2.0)})
    rep = estimate(obs50, bounds, DeConfig(np=16, max_iter=40, seed=2))
    assert np.all(np.diff(rep.loss_trace) <= 0.0)
    assert rep.best_loss == rep.loss_trace[-1] == rep.loss_trace.min()
    assert rep.member_trace.shape == (len(rep.loss_trace), 2)
    assert rep.iterations == len(rep.loss_trace) - 1
    assert rep.seed == 2


def test_progress_reports_every_iteration_from_zero(obs50):
    bounds = _full_bounds({"PSB": (0.01, 2.0)})
    seen: list[tuple[int, float]] = []

    def progress(iteration, best_loss, best):
        seen.append((iteration, best_loss))
        assert isinstance(best, ParameterSet)

    rep = estimate(obs50, bounds, DeConfig(np=8, max_iter=10, seed=1), progress=progress)
    assert [s[0] for s in seen] == list(range(rep.iterations + 1))
    assert seen[0][1] >= seen[-1][1]


def test_inspect_receives_population_snapshots(obs50):
    bounds = _full_bounds({"V_bm": (0.2, 6.0), "PSB": (0.01, 2.0)})
    pops = []

    def inspect(iteration, genomes, losses):
        assert genomes.shape == (12, 2)
        assert losses.shape == (12,)
        assert not genomes.flags.writeable
        pops.append(genomes)

    estimate(obs50, bounds, DeConfig(np=12, max_iter=5, seed=4), inspect=inspect)
    assert len(pops) == 6


def test_members_stay_in_bounds(obs50):
    bounds = _full_bounds({"V_bm": (0.2, 6.0), "PSB": (0.01, 2.0)})
    lo, hi = bounds.lower_array(), bounds.upper_array()

    def inspect(iteration, genomes, losses):
        assert np.all(genomes >= lo) and np.all(genomes <= hi)

    estimate(obs50, bounds, DeConfig(np=16, max_iter=30, seed=9), inspect=inspect)


def test_vtr_stops_immediately_when_met_at_init(obs50):
    bounds = _full_bounds({"PSB": (0.01, 2.0)})
    rep = estimate(obs50, bounds, DeConfig(np=8, max_iter=500, seed=1, vtr=1e30))
    assert rep.termination == "vtr"
    assert rep.iterations == 0


def test_stall_detection_on_flat_landscape(ref_params):
    # zero forcing, nonzero observations: every candidate scores the same
    obs = ObservedDataset(
        times=np.linspace(0.0, 5.0, 8),
        plasma=np.zeros(8),
        observed={"Cbm": np.linspace(1.0, 2.0, 8)},
        parameters={},
    )
    rep = estimate(
        obs,
        _full_bounds({"PSB": (0.01, 2.0)}),
        DeConfig(np=8, max_iter=5000, seed=3, stall_window=25, stall_tol=1e-8),
    )
    assert rep.termination == "stall"
    assert rep.iterations == 25


def test_max_iter_termination(obs50):
    bounds = _full_bounds({"PSB": (0.01, 2.0)})
    rep = estimate(
        obs50, bounds,
        DeConfig(np=8, max_iter=3, seed=1, stall_window=10**6, stall_tol=0.0),
    )
    assert rep.termination == "max-iter"
    assert rep.iterations == 3


def test_should_stop_cancels_between_generations(obs50):
    bounds = _full_bounds({"PSB": (0.01, 2.0)})
    calls = {"n": 0}

    def should_stop():
        calls["n"] += 1
        return calls["n"] > 3

    with pytest.raises(CancelledError):
        estimate(
            obs50, bounds, DeConfig(np=8, max_iter=1000, seed=1),
            should_stop=should_stop,
        )


def test_infeasible_when_every_member_fails(obs50):
    bounds = _full_bounds({"PSB": (0.01, 2.0)})
    with pytest.raises(InfeasibleProblemError):
        estimate(obs50, bounds, DeConfig(np=8, max_iter=5, seed=1),
                 IntegratorConfig(max_steps=5))


def test_estimation_requires_observed_series(ref_params):
    empty = ObservedDataset(
        times=np.array([0.0, 1.0]),
        plasma=np.array([0.0, 1.0]),
        observed={},
        parameters={},
    )
    bounds = _full_bounds({"PSB": (0.01, 2.0)})
    with pytest.raises(Exception, match="observed"):
        estimate(empty, bounds, DeConfig(np=8, max_iter=2, seed=1))
