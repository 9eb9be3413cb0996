"""Job-based HTTP facade over the workbench library.

Datasets are uploaded once and referenced by id; simulations, sweeps, and
estimations run as asynchronous jobs that clients poll.  Every result a
route returns is produced by the same library calls the CLI uses, so the
three entry points agree bit-for-bit for identical inputs and seeds.

The store is in-memory and bounded (the most recent 100 jobs and 100
datasets are retained; finished jobs are evicted oldest-first), matching
the single-analyst workbench scope.
"""

from __future__ import annotations

import math
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from pydantic import BaseModel, ConfigDict

from . import dataio
from .errors import CancelledError, CnspkError, DataError
from .estimate import BoundsSpec, DeConfig, ParamBounds, estimate
from .integrate import IntegratorConfig, Trajectory, dense_grid, new_cancel_flag
from .metrics import PkSummary
from .model import COMPARTMENT_COLUMNS
from .params import ParameterSet, manifest_rows
from .sensitivity import DEFAULT_MULTIPLIERS, SweepResult, SweepSpec, run_sweep
from .workbench import DEFAULT_GRID_POINTS, simulate

__all__ = ["create_app", "MAX_UPLOAD_BYTES", "MAX_RETAINED_JOBS", "MAX_RETAINED_DATASETS"]

MAX_UPLOAD_BYTES = 20 * 1024 * 1024
MAX_RETAINED_JOBS = 100
MAX_RETAINED_DATASETS = 100

_FINISHED = frozenset({"done", "failed", "cancelled"})


# ---------------------------------------------------------------------------
# request bodies


class IntegratorOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rtol: float | None = None
    atol: float | None = None
    h_init: float | None = None
    h_max: float | None = None
    max_steps: int | None = None
    method: Literal["auto", "explicit", "implicit"] | None = None

    def build(self) -> IntegratorConfig:
        overrides = {k: v for k, v in self.model_dump().items() if v is not None}
        return IntegratorConfig(**overrides)


class DeOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    np: int | None = None
    f: float | None = None
    cr: float | None = None
    max_iter: int | None = None
    vtr: float | None = None
    stall_tol: float | None = None
    stall_window: int | None = None
    seed: int | None = None

    def build(self) -> DeConfig:
        overrides = {k: v for k, v in self.model_dump().items() if v is not None}
        return DeConfig(**overrides)


class SweepOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    parameter: str
    multipliers: list[float] | None = None


class BoundsRow(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    min: float | None = None
    max: float | None = None
    fixed_value: float | None = None


class JobRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["simulate", "sweep", "estimate"]
    dataset_id: str
    params: dict[str, float] | None = None
    sweep: SweepOptions | None = None
    bounds: list[BoundsRow] | None = None
    integrator: IntegratorOptions | None = None
    de: DeOptions | None = None
    grid: int | None = None
    output_times: list[float] | None = None


# ---------------------------------------------------------------------------
# store


@dataclass
class _Job:
    id: str
    kind: str
    state: str = "queued"
    progress: dict[str, Any] = field(default_factory=dict)
    submitted: float = field(default_factory=time.time)
    finished: float | None = None
    error: dict[str, Any] | None = None
    result: Any = None
    csv: bytes | None = None
    trace_csv: bytes | None = None
    cancel_event: threading.Event = field(default_factory=threading.Event)
    cancel_flag: np.ndarray = field(default_factory=new_cancel_flag)
    future: Any = None


class _Store:
    def __init__(self) -> None:
        self.lock = threading.Lock()
        self.datasets: dict[str, dataio.ObservedDataset] = {}
        self.jobs: dict[str, _Job] = {}

    def add_dataset(self, ds: dataio.ObservedDataset) -> str:
        with self.lock:
            while len(self.datasets) >= MAX_RETAINED_DATASETS:
                self.datasets.pop(next(iter(self.datasets)))
            ds_id = uuid.uuid4().hex
            self.datasets[ds_id] = ds
            return ds_id

    def add_job(self, job: _Job) -> None:
        with self.lock:
            if len(self.jobs) >= MAX_RETAINED_JOBS:
                for jid, other in list(self.jobs.items()):
                    if other.state in _FINISHED:
                        del self.jobs[jid]
                        if len(self.jobs) < MAX_RETAINED_JOBS:
                            break
            self.jobs[job.id] = job


def _job_json(job: _Job) -> dict[str, Any]:
    return {
        "id": job.id,
        "kind": job.kind,
        "state": job.state,
        "progress": dict(job.progress),
        "submitted": job.submitted,
        "finished": job.finished,
        "error": job.error,
    }


# ---------------------------------------------------------------------------
# result serialization (JSON mirrors the CSV exports field-for-field)


def _nan_safe(x: float) -> float | None:
    return None if math.isnan(x) else x


def _traj_json(traj: Trajectory) -> dict[str, list[float]]:
    out: dict[str, list[float]] = {
        "time": [float(v) for v in traj.times],
        "plasma": [float(v) for v in traj.plasma],
    }
    for j, name in enumerate(COMPARTMENT_COLUMNS):
        out[name] = [float(v) for v in traj.states[:, j]]
    return out


def _pk_json(pk: PkSummary) -> dict[str, Any]:
    return {
        "t_start": pk.t_start,
        "t_end": pk.t_end,
        "compartments": [
            {"compartment": name, "Cmax": cmax, "Tmax": tmax, "AUC": auc}
            for name, cmax, tmax, auc in pk.rows()
        ],
    }


def _sweep_json(res: SweepResult) -> dict[str, Any]:
    return {
        "parameter": res.parameter,
        "n_integrations": res.n_integrations,
        "coefficients": {k: _nan_safe(v) for k, v in res.coefficients.items()},
        "curves": [
            {
                "multiplier": c.multiplier,
                "value": c.value,
                "trajectory": _traj_json(c.trajectory),
                "pk": _pk_json(c.pk),
            }
            for c in res.curves
        ],
    }


# ---------------------------------------------------------------------------
# app


def _http_422(exc: CnspkError) -> HTTPException:
    detail: dict[str, Any] = {
        "message": getattr(exc, "message", None) or str(exc),
        "type": type(exc).__name__,
    }
    if isinstance(exc, DataError):
        detail["row"] = exc.row
        detail["column"] = exc.column
    return HTTPException(status_code=422, detail=detail)


def _resolve_output_times(
    req: JobRequest, ds: dataio.ObservedDataset
) -> np.ndarray:
    if req.output_times is not None:
        arr = np.asarray(req.output_times, dtype=float)
        if arr.ndim != 1 or arr.size < 2 or not np.all(np.isfinite(arr)) or np.any(
            np.diff(arr) <= 0.0
        ):
            raise HTTPException(
                status_code=422,
                detail={
                    "message": "output_times must be >= 2 strictly increasing finite values"
                },
            )
        return arr
    profile = ds.profile()
    try:
        return dense_grid(profile.t_start, profile.t_end, req.grid or DEFAULT_GRID_POINTS)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail={"message": str(exc)})


def create_app() -> FastAPI:
    """Build the HTTP application (one isolated store per instance)."""

    store = _Store()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.executor = ThreadPoolExecutor(
            max_workers=4, thread_name_prefix="cnspk-job"
        )
        try:
            yield
        finally:
            app.state.executor.shutdown(wait=False, cancel_futures=True)

    app = FastAPI(title="cnspk workbench service", lifespan=lifespan)

    def _finish(job: _Job, state: str, **kw: Any) -> None:
        with store.lock:
            job.state = state
            job.finished = time.time()
            for key, value in kw.items():
                setattr(job, key, value)

    def _get_job(job_id: str) -> _Job:
        with store.lock:
            job = store.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail={"message": f"unknown job {job_id!r}"})
        return job

    # -- datasets ----------------------------------------------------------

    @app.post("/datasets", status_code=201)
    async def upload_dataset(request: Request) -> dict[str, Any]:
        body = await request.body()
        if len(body) > MAX_UPLOAD_BYTES:
            raise HTTPException(
                status_code=413,
                detail={
                    "message": f"upload exceeds {MAX_UPLOAD_BYTES // (1024 * 1024)} MB"
                },
            )
        try:
            ds = dataio.parse_input(body)
        except DataError as exc:
            raise _http_422(exc)
        ds_id = store.add_dataset(ds)
        return {
            "id": ds_id,
            "rows": len(ds),
            "columns": ["time", "plasma", *ds.observed],
            "parameters": dict(ds.parameters),
        }

    @app.get("/manifest")
    def manifest() -> list[dict[str, Any]]:
        return manifest_rows()

    @app.get("/sample.csv")
    def sample() -> Response:
        return Response(
            content=dataio.shipped_sample_bytes(), media_type="text/csv"
        )

    # -- job submission ----------------------------------------------------

    def _run_simulate(job: _Job, ds, pset, times, icfg) -> None:
        with store.lock:
            job.progress["fraction"] = 0.0
        res = simulate(pset, ds.profile(), times, icfg, cancel=job.cancel_flag)
        with store.lock:
            job.progress["fraction"] = 1.0
        _finish(
            job,
            "done",
            result={"trajectory": _traj_json(res.trajectory), "pk": _pk_json(res.pk)},
            csv=dataio.export_table(res.trajectory),
        )

    def _run_sweep(job: _Job, spec: SweepSpec) -> None:
        with store.lock:
            job.progress["fraction"] = 0.0
        res = run_sweep(spec, cancel=job.cancel_flag)
        with store.lock:
            job.progress["fraction"] = 1.0
        _finish(
            job,
            "done",
            result=_sweep_json(res),
            csv=dataio.export_table(res),
        )

    def _run_estimate(job: _Job, ds, bounds, de, icfg) -> None:
        trace: dict[str, list[float]] = {
            "iteration": [],
            "best_loss": [],
            **{name: [] for name in bounds.names},
        }

        def on_progress(iteration: int, best_loss: float, best: ParameterSet) -> None:
            with store.lock:
                trace["iteration"].append(iteration)
                trace["best_loss"].append(best_loss)
                for name in bounds.names:
                    trace[name].append(best[name])
                job.progress["iteration"] = iteration
                job.progress["best_loss"] = best_loss
                job.progress["trace"] = trace

        report = estimate(
            ds,
            bounds,
            de,
            icfg,
            progress=on_progress,
            should_stop=job.cancel_event.is_set,
        )
        params_csv, trace_csv = dataio.export_estimation_tables(report)
        estimated = set(report.names)
        _finish(
            job,
            "done",
            result={
                "parameters": [
                    {
                        "name": name,
                        "value": report.best[name],
                        "estimated": name in estimated,
                    }
                    for name in report.best
                ],
                "best_loss": report.best_loss,
                "termination": report.termination,
                "evaluations": report.evaluations,
                "iterations": report.iterations,
                "seed": report.seed,
                "trace": trace,
            },
            csv=params_csv,
            trace_csv=trace_csv,
        )

    def _runner(job: _Job, work) -> None:
        with store.lock:
            if job.cancel_event.is_set():
                job.state = "cancelled"
                job.finished = time.time()
                return
            job.state = "running"
        try:
            work()
        except CancelledError:
            _finish(job, "cancelled")
        except CnspkError as exc:
            _finish(
                job,
                "failed",
                error={"message": str(exc), "type": type(exc).__name__},
            )
        except Exception as exc:  # pragma: no cover - defensive
            _finish(
                job,
                "failed",
                error={"message": f"internal error: {exc}", "type": "InternalError"},
            )

    @app.post("/jobs", status_code=201)
    def submit_job(req: JobRequest, request: Request) -> dict[str, Any]:
        with store.lock:
            ds = store.datasets.get(req.dataset_id)
        if ds is None:
            raise HTTPException(
                status_code=404,
                detail={"message": f"unknown dataset {req.dataset_id!r}"},
            )

        try:
            icfg = (req.integrator or IntegratorOptions()).build()
        except CnspkError as exc:
            raise _http_422(exc)

        job = _Job(id=uuid.uuid4().hex, kind=req.kind)

        try:
            if req.kind == "simulate":
                pset = dataio.resolve_parameters(ds, req.params)
                times = _resolve_output_times(req, ds)
                work = lambda: _run_simulate(job, ds, pset, times, icfg)
            elif req.kind == "sweep":
                if req.sweep is None:
                    raise HTTPException(
                        status_code=422,
                        detail={"message": "sweep jobs need a 'sweep' block"},
                    )
                base = dataio.resolve_parameters(ds, req.params)
                times = _resolve_output_times(req, ds)
                spec = SweepSpec(
                    parameter=req.sweep.parameter,
                    base=base,
                    profile=ds.profile(),
                    multipliers=(
                        tuple(req.sweep.multipliers)
                        if req.sweep.multipliers is not None
                        else DEFAULT_MULTIPLIERS
                    ),
                    output_times=times,
                    config=icfg,
                )
                work = lambda: _run_sweep(job, spec)
            else:  # estimate
                if req.bounds is None:
                    raise HTTPException(
                        status_code=422,
                        detail={"message": "estimate jobs need a 'bounds' list"},
                    )
                if not ds.observed:
                    raise HTTPException(
                        status_code=422,
                        detail={
                            "message": "dataset has no observed compartment series to fit"
                        },
                    )
                estimated = []
                fixed = {}
                for row in req.bounds:
                    if row.fixed_value is not None:
                        if row.min is not None or row.max is not None:
                            raise HTTPException(
                                status_code=422,
                                detail={
                                    "message": f"{row.name!r} mixes bounds with a fixed value"
                                },
                            )
                        fixed[row.name] = row.fixed_value
                    elif row.min is not None and row.max is not None:
                        estimated.append(ParamBounds(row.name, row.min, row.max))
                    else:
                        raise HTTPException(
                            status_code=422,
                            detail={
                                "message": f"{row.name!r} needs min+max or fixed_value"
                            },
                        )
                bounds = BoundsSpec(estimated, fixed)
                de = (req.de or DeOptions()).build()
                work = lambda: _run_estimate(job, ds, bounds, de, icfg)
        except CnspkError as exc:
            raise _http_422(exc)

        store.add_job(job)
        job.future = request.app.state.executor.submit(_runner, job, work)
        return {"id": job.id}

    # -- job inspection ----------------------------------------------------

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str) -> dict[str, Any]:
        job = _get_job(job_id)
        with store.lock:
            return _job_json(job)

    def _require_done(job: _Job) -> None:
        with store.lock:
            state = job.state
        if state != "done":
            raise HTTPException(
                status_code=409,
                detail={"message": f"job is {state}, result available once done"},
            )

    @app.get("/jobs/{job_id}/result")
    def job_result(job_id: str) -> Any:
        job = _get_job(job_id)
        _require_done(job)
        return job.result

    @app.get("/jobs/{job_id}/result.csv")
    def job_result_csv(job_id: str) -> Response:
        job = _get_job(job_id)
        _require_done(job)
        return Response(content=job.csv, media_type="text/csv")

    @app.get("/jobs/{job_id}/result.trace.csv")
    def job_trace_csv(job_id: str) -> Response:
        job = _get_job(job_id)
        _require_done(job)
        if job.trace_csv is None:
            raise HTTPException(
                status_code=404,
                detail={"message": "only estimate jobs have a trace table"},
            )
        return Response(content=job.trace_csv, media_type="text/csv")

    @app.delete("/jobs/{job_id}")
    def cancel_job(job_id: str) -> dict[str, Any]:
        job = _get_job(job_id)
        with store.lock:
            if job.state in _FINISHED:
                raise HTTPException(
                    status_code=409,
                    detail={"message": f"job already {job.state}"},
                )
            job.cancel_event.set()
            job.cancel_flag[0] = 1
        # a queued job whose thread has not started can finish right away
        if job.future is not None and job.future.cancel():
            with store.lock:
                if job.state not in _FINISHED:
                    job.state = "cancelled"
                    job.finished = time.time()
        with store.lock:
            return _job_json(job)

    @app.get("/")
    def root() -> dict[str, Any]:
        return {
            "service": "cnspk workbench",
            "endpoints": [
                "POST /datasets",
                "POST /jobs",
                "GET /jobs/{id}",
                "GET /jobs/{id}/result",
                "GET /jobs/{id}/result.csv",
                "GET /jobs/{id}/result.trace.csv",
                "DELETE /jobs/{id}",
                "GET /manifest",
                "GET /sample.csv",
            ],
        }

    return app
