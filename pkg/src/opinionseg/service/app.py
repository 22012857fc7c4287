"""HTTP service wrapping the segmentation pipeline.

Images travel base64-encoded in JSON; label maps travel in the same
text format the CLI writes, so the two front ends interoperate.  Bad
inputs (undecodable images, malformed label maps, out-of-range
parameters) come back as 400s.
"""

from __future__ import annotations

import base64
import binascii
import io

import numpy as np
from fastapi import FastAPI, HTTPException
from PIL import Image

from .. import __version__
from ..config import build_config
from ..evaluation import confusion, metrics, to_binary_mask
from ..imaging import label_map_from_text, label_map_to_text, load_image
from ..pipeline import segment_population
from ..sim import expected_cluster_count, simulate_population
from .schemas import (
    EvaluateRequest,
    EvaluateResponse,
    HealthResponse,
    MetricsModel,
    SegmentRequest,
    SegmentResponse,
    SimulateRequest,
    SimulateResponse,
)


def _decode_image(field: str, data_b64: str):
    try:
        raw = base64.b64decode(data_b64, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise HTTPException(400, f"{field} is not valid base64: {exc}") from exc
    try:
        return load_image(io.BytesIO(raw))
    except Exception as exc:
        raise HTTPException(400, f"{field} is not a readable image: {exc}") from exc


def _png_base64(pixels: np.ndarray) -> str:
    buf = io.BytesIO()
    mode = "L" if pixels.ndim == 2 else "RGB"
    Image.fromarray(pixels, mode=mode).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _simulate_csv(traj) -> str:
    lines = ["sweep," + ",".join(f"agent_{k}" for k in range(traj.snapshots[0][1].shape[0]))]
    for sweep_idx, values in traj.snapshots:
        lines.append(str(sweep_idx) + "," + ",".join(repr(float(v)) for v in values))
    return "\n".join(lines) + "\n"


def create_app() -> FastAPI:
    app = FastAPI(title="opinionseg", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/defaults")
    def defaults() -> dict:
        return build_config().as_dict()

    @app.post("/segment", response_model=SegmentResponse)
    def segment(req: SegmentRequest) -> SegmentResponse:
        pop = _decode_image("image_base64", req.image_base64)
        try:
            cfg = build_config(overrides=req.options.model_dump())
            outcome = segment_population(pop, cfg, name="<upload>")
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from exc
        return SegmentResponse(
            manifest=outcome.manifest,
            label_map=label_map_to_text(outcome.label_map),
            image_base64=_png_base64(outcome.rendered),
            target_met=outcome.schedule.target_met,
            converged=outcome.schedule.converged_all,
            headline_count=outcome.schedule.clusters.headline_count,
        )

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest) -> SimulateResponse:
        try:
            traj = simulate_population(
                n=req.agents,
                epsilon=req.epsilon,
                mu=req.mu,
                seed=req.seed,
                snapshot_every=req.snapshot_every,
                max_sweeps=req.max_sweeps,
            )
            expected = expected_cluster_count(req.epsilon)
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from exc
        return SimulateResponse(
            sweeps=traj.sweeps,
            converged=traj.converged,
            cluster_count=traj.clusters.headline_count,
            expected_count=expected,
            centres=[float(c[0]) for c in traj.clusters.headline_centres],
            csv=_simulate_csv(traj) if req.include_csv else None,
        )

    @app.post("/evaluate", response_model=EvaluateResponse)
    def evaluate(req: EvaluateRequest) -> EvaluateResponse:
        mask_pop = _decode_image("mask_base64", req.mask_base64)
        mask = mask_pop.grid()[:, :, 0] > 0.5
        try:
            lmap = label_map_from_text(req.label_map)
            pred = to_binary_mask(lmap, mask)
            counts = confusion(pred, mask)
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from exc
        m = metrics(counts)
        return EvaluateResponse(
            tp=counts.tp,
            fp=counts.fp,
            tn=counts.tn,
            fn=counts.fn,
            metrics=MetricsModel(accuracy=m.accuracy, recall=m.recall, fallout=m.fallout),
        )

    return app


app = create_app()
