"""Parameter estimation: variance-weighted least squares + differential evolution.

The loss compares model curves, solved at exactly the observed times,
against every observed compartment series:

    L(p) = sum_i sum_j (yhat_j(t_i) - y_j(t_i; p))^2 / (2 sigma_j^2)

with sigma_j^2 the population variance of observed series j (fallback 1.0
for degenerate series).  Solver failures score a large finite penalty so
the optimizer can route around infeasible corners of the box.

The optimizer is the classic rand/1/bin differential evolution: uniform
initialization inside the box, donor vectors a + F*(b - c) drawn from the
previous generation, binomial crossover with one guaranteed mutant gene,
reflection of out-of-box genes, and greedy selection applied synchronously
per generation.  Runs are deterministic for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Iterable, Mapping

import numpy as np

from .errors import (
    CancelledError,
    InfeasibleProblemError,
    IntegrationFailureError,
    InvalidBoundsError,
    NumericBlowupError,
    NumericDomainError,
    DataError,
)
from .integrate import IntegratorConfig, integrate
from .model import COMPARTMENT_COLUMNS
from .params import PARAM_INDEX, PARAM_NAMES, ParameterSet, domain_error

if TYPE_CHECKING:  # pragma: no cover - import cycle guard (dataio exports reports)
    from .dataio import ObservedDataset

__all__ = [
    "PENALTY_LOSS",
    "ParamBounds",
    "BoundsSpec",
    "DeConfig",
    "EstimationReport",
    "loss",
    "estimate",
]

# Finite score for parameter sets whose integration fails; large enough to
# lose every selection against any feasible member.
PENALTY_LOSS: float = 1.0e12


@dataclass(frozen=True)
class ParamBounds:
    """Closed search interval for one estimated parameter."""

    name: str
    lower: float
    upper: float


class BoundsSpec:
    """Partition of the roster into estimated intervals and pinned values.

    Every manifest parameter must appear exactly once: either with a
    search interval (estimated) or with a single fixed value.  Estimated
    parameters are kept in manifest order, which is also the genome order
    used by the optimizer.

    Parameters
    ----------
    estimated : iterable of ParamBounds or (name, lower, upper) tuples
    fixed : mapping of name to pinned value

    Raises
    ------
    InvalidBoundsError
        On unknown names, duplicates, missing coverage, empty estimated
        set, inverted intervals, or interval endpoints outside the
        parameter's structural domain.
    """

    __slots__ = ("estimated", "fixed", "_template", "_indices")

    def __init__(
        self,
        estimated: Iterable[ParamBounds | tuple[str, float, float]],
        fixed: Mapping[str, float],
    ):
        rows: dict[str, ParamBounds] = {}
        for item in estimated:
            pb = item if isinstance(item, ParamBounds) else ParamBounds(*item)
            if pb.name not in PARAM_INDEX:
                raise InvalidBoundsError(f"unknown parameter name: {pb.name!r}")
            if pb.name in rows:
                raise InvalidBoundsError(f"duplicate bounds for {pb.name!r}")
            lo, hi = float(pb.lower), float(pb.upper)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise InvalidBoundsError(
                    f"bounds for {pb.name!r} must be finite, got [{lo!r}, {hi!r}]"
                )
            if not lo < hi:
                raise InvalidBoundsError(
                    f"bounds for {pb.name!r} must satisfy min < max, "
                    f"got [{lo:g}, {hi:g}]"
                )
            for endpoint in (lo, hi):
                problem = domain_error(pb.name, endpoint)
                if problem is not None:
                    raise InvalidBoundsError(problem)
            rows[pb.name] = ParamBounds(pb.name, lo, hi)

        if not rows:
            raise InvalidBoundsError("no parameters marked for estimation")

        pins: dict[str, float] = {}
        for name, value in fixed.items():
            if name not in PARAM_INDEX:
                raise InvalidBoundsError(f"unknown parameter name: {name!r}")
            if name in rows:
                raise InvalidBoundsError(
                    f"{name!r} is both estimated and fixed"
                )
            v = float(value)
            problem = domain_error(name, v)
            if problem is not None:
                raise InvalidBoundsError(problem)
            pins[name] = v

        missing = [n for n in PARAM_NAMES if n not in rows and n not in pins]
        if missing:
            raise InvalidBoundsError(
                "every parameter needs either bounds or a fixed value; "
                f"missing: {', '.join(missing)}"
            )

        ordered = tuple(rows[n] for n in PARAM_NAMES if n in rows)
        object.__setattr__(self, "estimated", ordered)
        object.__setattr__(self, "fixed", dict(pins))

        template = np.empty(len(PARAM_NAMES))
        for name, value in pins.items():
            template[PARAM_INDEX[name]] = value
        indices = np.array([PARAM_INDEX[pb.name] for pb in ordered], dtype=np.intp)
        object.__setattr__(self, "_template", template)
        object.__setattr__(self, "_indices", indices)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("BoundsSpec is immutable")

    @property
    def names(self) -> tuple[str, ...]:
        """Estimated parameter names in genome (manifest) order."""
        return tuple(pb.name for pb in self.estimated)

    @property
    def dim(self) -> int:
        return len(self.estimated)

    def lower_array(self) -> np.ndarray:
        return np.array([pb.lower for pb in self.estimated])

    def upper_array(self) -> np.ndarray:
        return np.array([pb.upper for pb in self.estimated])

    def to_parameter_set(self, genome: np.ndarray) -> ParameterSet:
        """Assemble the full parameter set for one genome."""
        arr = self._template.copy()
        arr[self._indices] = genome
        return ParameterSet.from_array(arr)


@dataclass(frozen=True)
class DeConfig:
    """Differential-evolution settings.

    Attributes
    ----------
    np : int
        Population size; 0 selects the default of 10x the number of
        estimated parameters.  Explicit values must be >= 4.
    f : float
        Differential weight, in (0, 2].
    cr : float
        Crossover rate, in [0, 1].
    max_iter : int
        Iteration budget (>= 1).
    vtr : float
        Value-to-reach: terminate once the best loss falls to or below
        this (>= 0; the default 0.0 effectively disables it).
    stall_tol : float
        Relative best-loss improvement under which progress counts as
        stalled.
    stall_window : int
        Number of consecutive iterations the stall comparison spans.
    seed : int
        RNG seed; fixing it makes the whole run reproducible.
    """

    np: int = 0
    f: float = 0.8
    cr: float = 0.9
    max_iter: int = 200
    vtr: float = 0.0
    stall_tol: float = 1e-8
    stall_window: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if self.np != 0 and self.np < 4:
            raise NumericDomainError(f"population size must be >= 4, got {self.np}")
        if not (0.0 < self.f <= 2.0):
            raise NumericDomainError(f"weight f must lie in (0, 2], got {self.f!r}")
        if not (0.0 <= self.cr <= 1.0):
            raise NumericDomainError(f"crossover cr must lie in [0, 1], got {self.cr!r}")
        if self.max_iter < 1:
            raise NumericDomainError(f"max_iter must be >= 1, got {self.max_iter}")
        if not (math.isfinite(self.vtr) and self.vtr >= 0.0):
            raise NumericDomainError(f"vtr must be finite and >= 0, got {self.vtr!r}")
        if not (math.isfinite(self.stall_tol) and self.stall_tol >= 0.0):
            raise NumericDomainError(
                f"stall_tol must be finite and >= 0, got {self.stall_tol!r}"
            )
        if self.stall_window < 1:
            raise NumericDomainError(
                f"stall_window must be >= 1, got {self.stall_window}"
            )
        if self.seed < 0:
            raise NumericDomainError(f"seed must be >= 0, got {self.seed}")

    def resolved_np(self, dim: int) -> int:
        return self.np if self.np > 0 else 10 * dim


@dataclass(frozen=True, eq=False)
class EstimationReport:
    """Outcome of one optimization run.

    Attributes
    ----------
    best : ParameterSet
        Full parameter set assembled from the best genome plus pins.
    best_loss : float
        Loss of ``best``; equals ``loss_trace.min()``.
    names : tuple of str
        Estimated parameter names, genome order.
    loss_trace : ndarray
        Best loss after initialization and after every iteration
        (length = iterations + 1, non-increasing).
    member_trace : ndarray
        Best genome at the same instants, shape (iterations + 1, dim);
        column k tracks ``names[k]`` for convergence plots.
    termination : str
        One of "vtr", "max-iter", "stall".
    evaluations : int
        Number of loss evaluations performed.
    seed : int
        Seed the run used.
    """

    best: ParameterSet
    best_loss: float
    names: tuple[str, ...]
    loss_trace: np.ndarray
    member_trace: np.ndarray
    termination: str
    evaluations: int
    seed: int

    @property
    def iterations(self) -> int:
        """Completed DE iterations (excludes the initialization entry)."""
        return len(self.loss_trace) - 1


class _Objective:
    """Prepared loss evaluator.

    Binds the observed series, forcing profile, and solver settings once,
    so the public :func:`loss` and the optimizer share one arithmetic
    path (results are bitwise identical across entry points).
    """

    __slots__ = ("times", "profile", "config", "col_idx", "data", "inv_two_var")

    def __init__(self, obs: "ObservedDataset", config: IntegratorConfig):
        cols = [c for c in COMPARTMENT_COLUMNS if c in obs.observed]
        if not cols:
            raise DataError(
                "dataset has no observed compartment series to fit "
                "(need at least one of Cbb, Cbm, Cccsf, Cscsf)"
            )
        if obs.times.shape[0] < 2:
            raise DataError("need at least two observation times")
        self.times = obs.times
        self.profile = obs.profile()
        self.config = config
        self.col_idx = np.array(
            [COMPARTMENT_COLUMNS.index(c) for c in cols], dtype=np.intp
        )
        self.data = np.column_stack([obs.observed[c] for c in cols])
        var = self.data.var(axis=0)  # population variance per series
        var = np.where(var < 1e-30, 1.0, var)
        self.inv_two_var = 1.0 / (2.0 * var)

    def __call__(self, p: ParameterSet) -> float:
        try:
            traj = integrate(p, self.profile, self.times, self.config)
        except (IntegrationFailureError, NumericBlowupError):
            return PENALTY_LOSS
        r = traj.states[:, self.col_idx] - self.data
        return float(((r * r).sum(axis=0) * self.inv_two_var).sum())


def loss(
    p: ParameterSet, obs: "ObservedDataset", cfg: IntegratorConfig | None = None
) -> float:
    """Variance-weighted sum of squared residuals for one parameter set.

    Parameters
    ----------
    p : ParameterSet
        Candidate parameters.
    obs : ObservedDataset
        Must carry at least one observed compartment series on >= 2
        times; the model is solved at exactly those times.
    cfg : IntegratorConfig, optional
        Solver settings; library defaults when omitted.

    Returns
    -------
    float
        The double sum over times and observed series, or the finite
        penalty ``PENALTY_LOSS`` when integration fails.

    Raises
    ------
    DataError
        If the dataset carries no fittable series (structural problems
        are never converted into penalties).
    """
    return _Objective(obs, cfg if cfg is not None else IntegratorConfig())(p)


def _reflect(genome: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> None:
    """Fold out-of-box genes back inside, in place."""
    for k in range(genome.shape[0]):
        x = genome[k]
        while x < lo[k] or x > hi[k]:
            if x < lo[k]:
                x = 2.0 * lo[k] - x
            if x > hi[k]:
                x = 2.0 * hi[k] - x
        genome[k] = x


def estimate(
    obs: "ObservedDataset",
    bounds: BoundsSpec,
    de: DeConfig | None = None,
    icfg: IntegratorConfig | None = None,
    progress: Callable[[int, float, ParameterSet], None] | None = None,
    *,
    should_stop: Callable[[], bool] | None = None,
    inspect: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
) -> EstimationReport:
    """Fit the estimated parameters to the observed series with DE.

    Parameters
    ----------
    obs : ObservedDataset
        Observations to fit (>= 1 compartment series).
    bounds : BoundsSpec
        Search box and pinned values covering the whole roster.
    de : DeConfig, optional
        Optimizer settings; defaults when omitted.
    icfg : IntegratorConfig, optional
        Solver settings for every loss evaluation.
    progress : callable, optional
        Sink invoked as ``progress(iteration, best_loss, best)`` after
        initialization (iteration 0) and after every iteration.
    should_stop : callable, optional
        Polled between generations; returning True raises
        :class:`CancelledError` (progress already emitted stays valid).
    inspect : callable, optional
        Diagnostic sink invoked as ``inspect(iteration, genomes, losses)``
        at the same instants as ``progress``, with read-only snapshots of
        the whole population (shape (NP, dim), column k is ``names[k]``)
        and its losses.  Intended for population-spread diagnostics.

    Returns
    -------
    EstimationReport

    Raises
    ------
    InfeasibleProblemError
        If every initial member scores the integration-failure penalty.
    CancelledError
        If ``should_stop`` requested termination.
    """
    de = de if de is not None else DeConfig()
    icfg = icfg if icfg is not None else IntegratorConfig()
    objective = _Objective(obs, icfg)

    dim = bounds.dim
    npop = de.resolved_np(dim)
    lo = bounds.lower_array()
    hi = bounds.upper_array()
    rng = np.random.Generator(np.random.PCG64(de.seed))

    pop = lo + rng.random((npop, dim)) * (hi - lo)
    losses = np.empty(npop)
    for i in range(npop):
        losses[i] = objective(bounds.to_parameter_set(pop[i]))
    evaluations = npop

    if bool(np.all(losses >= PENALTY_LOSS)):
        raise InfeasibleProblemError(
            "every initial population member failed to integrate; "
            "the search box may be entirely outside the feasible region"
        )

    best_i = int(np.argmin(losses))
    best_loss = float(losses[best_i])
    best_genome = pop[best_i].copy()

    loss_trace = [best_loss]
    member_trace = [best_genome.copy()]

    def _emit(iteration: int) -> None:
        if progress is not None:
            progress(iteration, best_loss, bounds.to_parameter_set(best_genome))
        if inspect is not None:
            genomes = pop.copy()
            scores = losses.copy()
            genomes.setflags(write=False)
            scores.setflags(write=False)
            inspect(iteration, genomes, scores)

    _emit(0)

    termination = "max-iter"
    if best_loss <= de.vtr:
        termination = "vtr"
    else:
        trial = np.empty(dim)
        trials = np.empty((npop, dim))
        for g in range(1, de.max_iter + 1):
            if should_stop is not None and should_stop():
                raise CancelledError(
                    f"estimation cancelled before iteration {g}"
                )
            for i in range(npop):
                r1 = i
                while r1 == i:
                    r1 = int(rng.integers(npop))
                r2 = i
                while r2 == i or r2 == r1:
                    r2 = int(rng.integers(npop))
                r3 = i
                while r3 == i or r3 == r1 or r3 == r2:
                    r3 = int(rng.integers(npop))
                for k in range(dim):
                    trial[k] = pop[r1, k] + de.f * (pop[r2, k] - pop[r3, k])
                _reflect(trial, lo, hi)
                j_rand = int(rng.integers(dim))
                for k in range(dim):
                    if k != j_rand and rng.random() >= de.cr:
                        trial[k] = pop[i, k]
                trials[i] = trial

            # trials all built against the previous generation; evaluate,
            # then select synchronously
            for i in range(npop):
                t_loss = objective(bounds.to_parameter_set(trials[i]))
                if t_loss <= losses[i]:
                    losses[i] = t_loss
                    pop[i] = trials[i]
            evaluations += npop

            best_i = int(np.argmin(losses))
            best_loss = float(losses[best_i])
            best_genome = pop[best_i].copy()
            loss_trace.append(best_loss)
            member_trace.append(best_genome.copy())
            _emit(g)

            if best_loss <= de.vtr:
                termination = "vtr"
                break
            if g >= de.stall_window:
                ref = loss_trace[g - de.stall_window]
                gain = (ref - best_loss) / max(abs(ref), 1e-300)
                if gain < de.stall_tol:
                    termination = "stall"
                    break

    loss_arr = np.array(loss_trace)
    member_arr = np.array(member_trace)
    loss_arr.setflags(write=False)
    member_arr.setflags(write=False)
    return EstimationReport(
        best=bounds.to_parameter_set(best_genome),
        best_loss=best_loss,
        names=bounds.names,
        loss_trace=loss_arr,
        member_trace=member_arr,
        termination=termination,
        evaluations=evaluations,
        seed=de.seed,
    )
