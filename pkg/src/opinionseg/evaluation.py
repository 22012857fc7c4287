"""Binary segmentation quality metrics against ground-truth masks.

A predicted label map is first reduced to a binary object mask, then
compared pixelwise with the ground truth to produce confusion counts
and the derived rates.  Ratios with a zero denominator are reported as
None rather than a made-up number, and aggregation skips them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .imaging import LabelMap


@dataclass
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp,
            self.fp + other.fp,
            self.tn + other.tn,
            self.fn + other.fn,
        )


@dataclass
class Metrics:
    """Derived rates; a rate whose denominator is empty is None."""

    accuracy: float
    recall: float | None
    fallout: float | None


def to_binary_mask(lmap: LabelMap, gt: np.ndarray) -> np.ndarray:
    """Reduce a label map to the object/background split that fits gt best.

    With at most two distinct labels the two complementary assignments
    are tried and the one with higher pixel accuracy wins (the first one
    on a tie).  With more labels, each label becomes object when the
    majority of its pixels are object in the ground truth.
    """
    gt = np.asarray(gt, dtype=bool)
    if gt.shape != lmap.shape:
        raise ValueError(
            f"ground truth shape {gt.shape} does not match labels {lmap.shape}"
        )
    labels = lmap.labels
    ids = np.unique(labels)
    if ids.size <= 2:
        candidate = labels == ids[0]
        acc_a = float(np.mean(candidate == gt))
        acc_b = float(np.mean(~candidate == gt))
        return candidate if acc_a >= acc_b else ~candidate
    mask = np.zeros(labels.shape, dtype=bool)
    for lid in ids:
        member = labels == lid
        if float(np.mean(gt[member])) > 0.5:
            mask |= member
    return mask


def confusion(pred: np.ndarray, gt: np.ndarray) -> ConfusionCounts:
    """Pixelwise confusion counts of a binary prediction against truth."""
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: prediction {pred.shape} vs truth {gt.shape}")
    if pred.size == 0:
        raise ValueError("cannot evaluate empty masks")
    return ConfusionCounts(
        tp=int(np.sum(pred & gt)),
        fp=int(np.sum(pred & ~gt)),
        tn=int(np.sum(~pred & ~gt)),
        fn=int(np.sum(~pred & gt)),
    )


def metrics(counts: ConfusionCounts) -> Metrics:
    """Accuracy, recall and fallout from confusion counts.

    recall = tp / (tp + fn) is None when the truth has no object pixels,
    fallout = fp / (fp + tn) is None when it has no background pixels.
    """
    if counts.total <= 0:
        raise ValueError("confusion counts are empty")
    pos = counts.tp + counts.fn
    neg = counts.fp + counts.tn
    return Metrics(
        accuracy=(counts.tp + counts.tn) / counts.total,
        recall=counts.tp / pos if pos > 0 else None,
        fallout=counts.fp / neg if neg > 0 else None,
    )


@dataclass
class EvalRecord:
    """Evaluation of one image: its confusion counts and rates."""

    name: str
    counts: ConfusionCounts
    metrics: Metrics


def aggregate(records: list[EvalRecord], pixel_pooled: bool = False) -> Metrics:
    """Combine per-image results into dataset-level rates.

    Default is the unweighted mean over images, skipping None entries
    per metric (all None -> None).  pixel_pooled=True instead sums the
    confusion counts over the dataset and derives the rates once, which
    weights images by pixel count.
    """
    if not records:
        raise ValueError("nothing to aggregate")
    if pixel_pooled:
        total = records[0].counts
        for rec in records[1:]:
            total = total + rec.counts
        return metrics(total)

    def mean_of(values):
        present = [v for v in values if v is not None]
        if not present:
            return None
        return sum(present) / len(present)

    acc = mean_of([r.metrics.accuracy for r in records])
    assert acc is not None, "accuracy is always defined per image"
    return Metrics(
        accuracy=acc,
        recall=mean_of([r.metrics.recall for r in records]),
        fallout=mean_of([r.metrics.fallout for r in records]),
    )


def _rate_str(value: float | None) -> str:
    return "NA" if value is None else f"{value:.4f}"


def format_metrics_table(rows: list[tuple[str, Metrics]]) -> str:
    """Plain-text table of named metric rows (rates as fractions)."""
    name_w = max(len("name"), *(len(name) for name, _ in rows))
    lines = [f"{'name':<{name_w}}  {'recall':>8}  {'fallout':>8}  {'accuracy':>8}"]
    for name, m in rows:
        lines.append(
            f"{name:<{name_w}}  {_rate_str(m.recall):>8}  "
            f"{_rate_str(m.fallout):>8}  {_rate_str(m.accuracy):>8}"
        )
    return "\n".join(lines)


def results_to_json(records: list[EvalRecord], summary: Metrics,
                    pooled: Metrics | None = None) -> str:
    """Serialise evaluation results; undefined rates become JSON null."""

    def metrics_dict(m: Metrics):
        return {"accuracy": m.accuracy, "recall": m.recall, "fallout": m.fallout}

    payload = {
        "images": [
            {
                "name": rec.name,
                "counts": {
                    "tp": rec.counts.tp,
                    "fp": rec.counts.fp,
                    "tn": rec.counts.tn,
                    "fn": rec.counts.fn,
                },
                "metrics": metrics_dict(rec.metrics),
            }
            for rec in records
        ],
        "summary": metrics_dict(summary),
    }
    if pooled is not None:
        payload["summary_pixel_pooled"] = metrics_dict(pooled)
    return json.dumps(payload, indent=2, sort_keys=True)


def load_mask(path) -> np.ndarray:
    """Read a ground-truth mask image; pixels above mid-gray are object."""
    from PIL import Image

    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"))
    return arr > 127
