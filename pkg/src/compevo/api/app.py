"""HTTP front end over the core package.

Experiments run in background threads; their output directory is the one
named in the spec, or a temporary directory when none is given.
"""
from __future__ import annotations

import tempfile
import threading
import uuid
from dataclasses import asdict
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from fastapi import FastAPI, HTTPException

from .. import graph as G
from ..bench import ExperimentSpec, run_experiment
from ..errors import CompevoError, ParseError
from ..kinds import TaskType
from ..objectives import hypervolume, read_front_csv
from .schemas import (
    Health,
    HypervolumeRequest,
    HypervolumeResponse,
    JobStatus,
    ParetoPoint,
    ParetoResponse,
    ValidateRequest,
    ValidateResponse,
    ViolationOut,
)

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source checkout
    __version__ = "0.0.0"

app = FastAPI(title="compevo", version=__version__)

_jobs: dict[str, JobStatus] = {}
_lock = threading.Lock()


@app.get("/health", response_model=Health)
def health() -> Health:
    return Health(version=__version__)


@app.post("/pipelines/validate", response_model=ValidateResponse)
def validate_pipeline(req: ValidateRequest) -> ValidateResponse:
    try:
        task = TaskType.parse(req.task)
        graph = G.graph_from_obj(req.pipeline)
    except (ValueError, ParseError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from None
    report = G.validate(graph, task, depth_cap=req.depth_cap)
    return ValidateResponse(
        valid=report.ok,
        violations=[ViolationOut(path=list(v.path), message=v.message) for v in report.violations],
        size=G.size(graph),
        depth=G.depth(graph),
        canonical=G.serialize(graph),
    )


@app.post("/metrics/hypervolume", response_model=HypervolumeResponse)
def compute_hypervolume(req: HypervolumeRequest) -> HypervolumeResponse:
    if any(len(p) != len(req.reference) for p in req.front):
        raise HTTPException(status_code=422, detail="every point needs as many objectives as the reference")
    try:
        return HypervolumeResponse(hypervolume=hypervolume(req.front, req.reference))
    except CompevoError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from None


def _run_job(job_id: str) -> None:
    job = _jobs[job_id]
    job.status = "running"
    try:
        report = run_experiment(job.spec, progress=job.progress.append)
    except Exception as exc:  # reported through the job status
        job.status, job.error = "failed", str(exc)
        return
    job.summary = [asdict(r) | {"gs_gd": r.gs_gd, "spread_flag": r.spread_flag} for r in report.rows]
    job.status = "done"


@app.post("/experiments", response_model=JobStatus, status_code=202)
def submit_experiment(spec: ExperimentSpec) -> JobStatus:
    if spec.out is None:
        spec = spec.model_copy(update={"out": tempfile.mkdtemp(prefix="compevo-")})
    job = JobStatus(id=uuid.uuid4().hex, status="queued", spec=spec)
    with _lock:
        _jobs[job.id] = job
    threading.Thread(target=_run_job, args=(job.id,), daemon=True).start()
    return job


def _job(job_id: str) -> JobStatus:
    try:
        return _jobs[job_id]
    except KeyError:
        raise HTTPException(status_code=404, detail=f"no experiment {job_id}") from None


@app.get("/experiments/{job_id}", response_model=JobStatus)
def experiment_status(job_id: str) -> JobStatus:
    return _job(job_id)


@app.get("/experiments/{job_id}/pareto/{variant}", response_model=ParetoResponse)
def experiment_front(job_id: str, variant: str, rep: int = 0) -> ParetoResponse:
    job = _job(job_id)
    if job.status != "done":
        raise HTTPException(status_code=409, detail=f"experiment is {job.status}")
    path = Path(job.spec.out) / "pareto" / f"{variant}_rep{rep}.csv"
    if not path.is_file():
        raise HTTPException(status_code=404, detail=f"no front for {variant} rep {rep}")
    points = [ParetoPoint(objectives=list(o), genotype=g) for o, g in read_front_csv(path)]
    return ParetoResponse(variant=variant, rep=rep, points=points)
