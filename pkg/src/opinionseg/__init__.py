"""Image segmentation by bounded-confidence opinion dynamics.

Pixels act as agents whose opinions (their values on [0, 1]) are pulled
together pairwise whenever they already agree to within a confidence
bound; a ladder scheduler raises the bound until the opinions condense
into the requested number of clusters, which become the segments.
"""

__version__ = "0.1.0"

from .baselines import KMeansResult, kmeans
from .cluster import (
    ClusterResult,
    RoundStats,
    ScheduleParams,
    ScheduleResult,
    count_clusters,
    schedule_epsilon,
)
from .config import RunConfig, build_config, parse_config_file
from .evaluation import (
    ConfusionCounts,
    EvalRecord,
    Metrics,
    aggregate,
    confusion,
    metrics,
    to_binary_mask,
)
from .imaging import (
    LabelMap,
    bilateral_filter,
    densify_labels,
    label_map_from_clusters,
    label_map_from_text,
    label_map_to_text,
    load_image,
    morph_smooth,
    paint_label_map,
    read_label_map,
    render_segmentation,
    save_image,
    write_label_map,
)
from .model import (
    ModelParams,
    Population,
    RunResult,
    basic_update,
    run_model,
    sweep,
    within_confidence,
)
from .pipeline import SegmentOutcome, bench_dataset, segment_file, segment_population
from .sim import Trajectory, expected_cluster_count, simulate_population
from .spatial import (
    PixelCoord,
    distance_update,
    neighbour_update,
    neighbourhood_opinion,
    normalized_distance,
)

__all__ = [
    "__version__",
    "ClusterResult",
    "ConfusionCounts",
    "EvalRecord",
    "KMeansResult",
    "LabelMap",
    "Metrics",
    "ModelParams",
    "PixelCoord",
    "Population",
    "RoundStats",
    "RunConfig",
    "RunResult",
    "ScheduleParams",
    "ScheduleResult",
    "SegmentOutcome",
    "Trajectory",
    "aggregate",
    "basic_update",
    "bench_dataset",
    "bilateral_filter",
    "build_config",
    "confusion",
    "count_clusters",
    "densify_labels",
    "distance_update",
    "expected_cluster_count",
    "kmeans",
    "label_map_from_clusters",
    "label_map_from_text",
    "label_map_to_text",
    "load_image",
    "metrics",
    "morph_smooth",
    "neighbour_update",
    "neighbourhood_opinion",
    "normalized_distance",
    "paint_label_map",
    "parse_config_file",
    "read_label_map",
    "render_segmentation",
    "run_model",
    "save_image",
    "schedule_epsilon",
    "segment_file",
    "segment_population",
    "simulate_population",
    "sweep",
    "to_binary_mask",
    "within_confidence",
    "write_label_map",
]
