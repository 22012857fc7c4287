"""End-to-end drivers: segment, evaluate, benchmark.

The CLI and the HTTP service both call into here, so file layout,
manifest contents and method naming stay identical across entry points.
Timing is deliberately kept out of the manifest (it goes to stderr in
the CLI) so that a fixed seed yields byte-identical output files.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import json
import numpy as np

from . import __version__
from .baselines import kmeans
from .cluster import ScheduleResult, schedule_epsilon
from .config import RunConfig
from .evaluation import (
    ConfusionCounts,
    EvalRecord,
    Metrics,
    aggregate,
    confusion,
    format_metrics_table,
    load_mask,
    metrics,
    to_binary_mask,
)
from .imaging import (
    LabelMap,
    bilateral_filter,
    densify_labels,
    label_map_from_clusters,
    load_image,
    morph_smooth,
    paint_label_map,
    read_label_map,
    save_image,
    write_label_map,
)
from .model import Population

BENCH_METHODS = (
    ("kmeans", "k-means"),
    ("basic", "deffuant"),
    ("distance", "deffuant-distance"),
    ("neighbour", "deffuant-neighbour"),
)


@dataclass
class SegmentOutcome:
    """Everything produced by one segmentation run."""

    schedule: ScheduleResult
    label_map: LabelMap
    centres: np.ndarray
    rendered: np.ndarray
    manifest: dict


def _min_area(cfg: RunConfig, n_pixels: int) -> int:
    return max(1, int(round(cfg.min_area_frac * n_pixels)))


def segment_population(pop: Population, cfg: RunConfig, name: str = "<memory>") -> SegmentOutcome:
    """Run the full pipeline on an in-memory pixel population.

    Stages: optional bilateral prefilter, the epsilon-ladder scheduled
    dynamics, label extraction, optional speckle smoothing, rendering.
    The returned label map has dense ids aligned with the returned
    centres (smoothing may retire a minor cluster's id entirely).
    """
    if pop.geometry is None:
        raise ValueError("segmentation needs grid geometry")
    work = pop
    if cfg.prefilter:
        work = bilateral_filter(work, cfg.sigma_spatial, cfg.sigma_range, cfg.radius)
    sched = schedule_epsilon(
        work,
        cfg.schedule_params(),
        cfg.model_params(),
        merge_tol=cfg.merge_tol,
        mass_floor=cfg.mass_floor,
    )
    clusters = sched.clusters
    lmap = label_map_from_clusters(clusters.labels, clusters.num_clusters, pop.geometry)
    if cfg.postsmooth:
        lmap = morph_smooth(lmap, _min_area(cfg, pop.n))
    dense, kept = densify_labels(lmap)
    centres = clusters.centres[kept]
    rendered = paint_label_map(dense, centres)

    w, h = pop.geometry
    manifest = {
        "version": __version__,
        "input": str(name),
        "width": w,
        "height": h,
        "channels": pop.d,
        "config": cfg.as_dict(),
        "epsilon_final": sched.epsilon_final,
        "rounds": [
            {
                "round": r.round_index,
                "epsilon": r.epsilon,
                "sweeps": r.sweeps,
                "converged": r.converged,
                "headline_count": r.headline_count,
            }
            for r in sched.rounds
        ],
        "total_sweeps": sched.total_sweeps,
        "converged": sched.converged_all,
        "target_met": sched.target_met,
        "overshoot": sched.overshoot,
        "headline_count": clusters.headline_count,
        "clusters": [
            {
                "centre": [float(v) for v in clusters.centres[k]],
                "mass": float(clusters.masses[k]),
                "headline": bool(k < clusters.headline_count),
            }
            for k in range(clusters.num_clusters)
        ],
        "output_labels": {
            "num_labels": dense.num_labels,
            "centres": [[float(v) for v in c] for c in centres],
        },
    }
    return SegmentOutcome(
        schedule=sched,
        label_map=dense,
        centres=centres,
        rendered=rendered,
        manifest=manifest,
    )


def manifest_json(manifest: dict) -> str:
    return json.dumps(manifest, indent=2, sort_keys=True)


def segment_file(input_path, output_dir, cfg: RunConfig, stem: str | None = None):
    """Segment an image file and write PNG, label map and manifest.

    Output names are <stem>_seg.png, <stem>_labels.txt and
    <stem>_manifest.json with stem defaulting to the input file's.
    Returns (outcome, paths dict).
    """
    input_path = Path(input_path)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    if stem is None:
        stem = input_path.stem
    pop = load_image(input_path)
    outcome = segment_population(pop, cfg, name=input_path.name)
    paths = {
        "segmentation": output_dir / f"{stem}_seg.png",
        "labels": output_dir / f"{stem}_labels.txt",
        "manifest": output_dir / f"{stem}_manifest.json",
    }
    save_image(paths["segmentation"], outcome.rendered)
    write_label_map(paths["labels"], outcome.label_map)
    with open(paths["manifest"], "w") as fh:
        fh.write(manifest_json(outcome.manifest) + "\n")
    return outcome, paths


def evaluate_map(name: str, lmap: LabelMap, gt: np.ndarray) -> EvalRecord:
    """Score one label map against a ground-truth object mask."""
    pred = to_binary_mask(lmap, gt)
    counts = confusion(pred, gt)
    return EvalRecord(name=name, counts=counts, metrics=metrics(counts))


def pair_label_maps(pred_dir, gt_dir) -> list[tuple[str, Path, Path]]:
    """Match predicted label maps with their ground-truth masks.

    Predictions are the *.txt files in pred_dir; a prediction named
    X_labels.txt or X.txt matches the first of X_mask.png, X.png in
    gt_dir.  A prediction without a mask raises ValueError, as does an
    empty prediction directory.
    """
    pred_dir = Path(pred_dir)
    gt_dir = Path(gt_dir)
    preds = sorted(pred_dir.glob("*.txt"))
    if not preds:
        raise ValueError(f"no label maps (*.txt) found in {pred_dir}")
    pairs = []
    for pred in preds:
        stem = pred.stem
        if stem.endswith("_labels"):
            stem = stem[: -len("_labels")]
        for candidate in (f"{stem}_mask.png", f"{stem}.png"):
            mask_path = gt_dir / candidate
            if mask_path.exists():
                pairs.append((stem, pred, mask_path))
                break
        else:
            raise ValueError(f"no ground-truth mask for {pred.name} in {gt_dir}")
    return pairs


def evaluate_directory(pred_dir, gt_dir) -> tuple[list[EvalRecord], Metrics, Metrics]:
    """Evaluate every prediction in a directory.

    Returns the per-image records, the mean-over-images summary and the
    pixel-pooled summary.
    """
    records = []
    for name, pred_path, mask_path in pair_label_maps(pred_dir, gt_dir):
        lmap = read_label_map(pred_path)
        gt = load_mask(mask_path)
        records.append(evaluate_map(name, lmap, gt))
    return records, aggregate(records), aggregate(records, pixel_pooled=True)


def dataset_pairs(dataset_dir) -> list[tuple[str, Path, Path]]:
    """Find image/mask pairs (X.png with X_mask.png) in one directory."""
    dataset_dir = Path(dataset_dir)
    images = [
        p
        for p in sorted(dataset_dir.glob("*.png"))
        if not p.stem.endswith("_mask")
    ]
    pairs = []
    for img in images:
        mask = dataset_dir / f"{img.stem}_mask.png"
        if not mask.exists():
            raise ValueError(f"no mask {mask.name} for image {img.name}")
        pairs.append((img.stem, img, mask))
    if not pairs:
        raise ValueError(f"no image/mask pairs found in {dataset_dir}")
    return pairs


def _segment_labels_for_method(pop: Population, cfg: RunConfig, method: str) -> LabelMap:
    """Label map for one bench method on an already-loaded image."""
    if method == "kmeans":
        work = pop
        if cfg.prefilter:
            work = bilateral_filter(work, cfg.sigma_spatial, cfg.sigma_range, cfg.radius)
        result = kmeans(work, cfg.clusters, seed=cfg.seed)
        lmap = label_map_from_clusters(result.labels, cfg.clusters, pop.geometry)
        if cfg.postsmooth:
            lmap = morph_smooth(lmap, _min_area(cfg, pop.n))
        lmap, _ = densify_labels(lmap)
        return lmap
    outcome = segment_population(pop, replace(cfg, rule=method))
    return outcome.label_map


def _bench_one(task) -> tuple[str, str, ConfusionCounts]:
    method, name, img_path, mask_path, cfg = task
    pop = load_image(img_path)
    gt = load_mask(mask_path)
    lmap = _segment_labels_for_method(pop, cfg, method)
    pred = to_binary_mask(lmap, gt)
    return method, name, confusion(pred, gt)


def bench_dataset(pairs, cfg: RunConfig):
    """Run every bench method over a dataset and tabulate the rates.

    Returns (per-method record lists, summary rows) where rows pair the
    method display name with mean-over-images metrics, in fixed method
    order.  cfg.workers > 1 fans the per-image runs out to processes.
    """
    tasks = [
        (method, name, img, mask, cfg)
        for method, _ in BENCH_METHODS
        for name, img, mask in pairs
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_bench_one, tasks))
    else:
        results = [_bench_one(task) for task in tasks]
    by_method: dict[str, list[EvalRecord]] = {m: [] for m, _ in BENCH_METHODS}
    for method, name, counts in results:
        by_method[method].append(EvalRecord(name, counts, metrics(counts)))
    rows = [(display, aggregate(by_method[method])) for method, display in BENCH_METHODS]
    return by_method, rows


def bench_report(rows) -> str:
    return format_metrics_table(rows)
