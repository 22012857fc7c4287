"""Request and response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class SegmentOptions(BaseModel):
    """Per-request overrides of the run configuration; None keeps the default."""

    clusters: int | None = None
    epsilon0: float | None = None
    delta_epsilon: float | None = None
    mu: float | None = None
    rule: str | None = None
    connectivity: int | None = None
    minkowski_k: float | None = None
    conv_tol: float | None = None
    max_sweeps: int | None = None
    max_rounds: int | None = None
    seed: int | None = None
    merge_tol: float | None = None
    mass_floor: float | None = None
    prefilter: bool | None = None
    sigma_spatial: float | None = None
    sigma_range: float | None = None
    radius: int | None = None
    postsmooth: bool | None = None
    min_area_frac: float | None = None


class SegmentRequest(BaseModel):
    image_base64: str = Field(description="image file content, base64 encoded")
    options: SegmentOptions = SegmentOptions()


class SegmentResponse(BaseModel):
    manifest: dict
    label_map: str = Field(description="text label map (width height num_labels + rows)")
    image_base64: str = Field(description="rendered segmentation PNG, base64 encoded")
    target_met: bool
    converged: bool
    headline_count: int


class SimulateRequest(BaseModel):
    agents: int = 1000
    epsilon: float
    mu: float = 0.5
    seed: int = 0
    snapshot_every: int = 10
    max_sweeps: int = 10_000
    include_csv: bool = False


class SimulateResponse(BaseModel):
    sweeps: int
    converged: bool
    cluster_count: int
    expected_count: int
    centres: list[float]
    csv: str | None = None


class EvaluateRequest(BaseModel):
    label_map: str = Field(description="text label map as produced by segmentation")
    mask_base64: str = Field(description="ground-truth mask image, base64 encoded")


class MetricsModel(BaseModel):
    accuracy: float
    recall: float | None
    fallout: float | None


class EvaluateResponse(BaseModel):
    tp: int
    fp: int
    tn: int
    fn: int
    metrics: MetricsModel


class HealthResponse(BaseModel):
    status: str
    version: str
