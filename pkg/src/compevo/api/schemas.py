"""Request and response models for the HTTP service."""
from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field

from ..bench import ExperimentSpec


class Health(BaseModel):
    status: Literal["ok"] = "ok"
    version: str


class ValidateRequest(BaseModel):
    pipeline: dict[str, Any] = Field(description="genotype as {kind, params, children}")
    task: str = "binary_classification"
    depth_cap: int = Field(6, ge=1)


class ViolationOut(BaseModel):
    path: list[int]
    message: str


class ValidateResponse(BaseModel):
    valid: bool
    violations: list[ViolationOut]
    size: int
    depth: int
    canonical: str


class HypervolumeRequest(BaseModel):
    front: list[list[float]]
    reference: list[float] = Field(min_length=2, max_length=3)


class HypervolumeResponse(BaseModel):
    hypervolume: float


class JobStatus(BaseModel):
    id: str
    status: Literal["queued", "running", "done", "failed"]
    spec: ExperimentSpec
    progress: list[str] = Field(default_factory=list)
    error: Optional[str] = None
    summary: Optional[list[dict[str, Any]]] = None


class ParetoPoint(BaseModel):
    objectives: list[float]
    genotype: str


class ParetoResponse(BaseModel):
    variant: str
    rep: int
    points: list[ParetoPoint]
