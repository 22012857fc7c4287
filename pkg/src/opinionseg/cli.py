"""Command-line interface.

Subcommands: segment, simulate, evaluate, bench, make-dataset, serve.
Options resolve as CLI flags > --config file > built-in defaults.
Exit codes: 0 success, 1 bad arguments or inputs, 2 file I/O trouble,
3 finished but missed the target (non-convergence or wrong final
cluster count; outputs are still written).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .config import build_config, parse_config_file
from .evaluation import format_metrics_table, results_to_json
from .pipeline import (
    BENCH_METHODS,
    bench_dataset,
    bench_report,
    dataset_pairs,
    evaluate_directory,
    segment_file,
)
from .sim import expected_cluster_count, simulate_population, write_trajectory_csv
from .synthetic import write_dataset

CONFIG_KEYS = (
    "clusters",
    "epsilon0",
    "delta_epsilon",
    "mu",
    "rule",
    "connectivity",
    "minkowski_k",
    "conv_tol",
    "max_sweeps",
    "max_rounds",
    "seed",
    "merge_tol",
    "mass_floor",
    "sigma_spatial",
    "sigma_range",
    "radius",
    "min_area_frac",
    "workers",
)


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="key=value config file")
    parser.add_argument("--clusters", "-c", type=int, help="target segment count")
    parser.add_argument("--epsilon0", type=float, help="confidence bound at ladder start")
    parser.add_argument("--delta-epsilon", type=float, help="ladder step size")
    parser.add_argument("--mu", type=float, help="convergence rate in (0, 0.5]")
    parser.add_argument(
        "--rule", choices=("basic", "distance", "neighbour"), help="interaction rule"
    )
    parser.add_argument("--connectivity", type=int, choices=(4, 8), help="neighbour stencil")
    parser.add_argument("--minkowski-k", type=float, help="distance-rule exponent (> 1)")
    parser.add_argument("--conv-tol", type=float, help="per-sweep convergence threshold")
    parser.add_argument("--max-sweeps", type=int, help="sweep cap per round")
    parser.add_argument("--max-rounds", type=int, help="ladder round cap")
    parser.add_argument("--seed", type=int, help="RNG seed")
    parser.add_argument("--merge-tol", type=float, help="cluster merge distance")
    parser.add_argument("--mass-floor", type=float, help="headline cluster mass floor")
    parser.add_argument(
        "--no-prefilter", action="store_true", help="skip the bilateral prefilter"
    )
    parser.add_argument("--sigma-spatial", type=float, help="prefilter spatial sigma")
    parser.add_argument("--sigma-range", type=float, help="prefilter range sigma")
    parser.add_argument("--radius", type=int, help="prefilter window radius")
    parser.add_argument(
        "--no-postsmooth", action="store_true", help="skip label speckle smoothing"
    )
    parser.add_argument("--min-area-frac", type=float, help="speckle area fraction")
    parser.add_argument("--workers", type=int, help="parallel workers for datasets")


def _config_from_args(args: argparse.Namespace):
    file_values = parse_config_file(args.config) if args.config else None
    overrides = {key: getattr(args, key, None) for key in CONFIG_KEYS}
    if getattr(args, "no_prefilter", False):
        overrides["prefilter"] = False
    if getattr(args, "no_postsmooth", False):
        overrides["postsmooth"] = False
    return build_config(file_values, overrides)


def cmd_segment(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    started = time.perf_counter()
    outcome, paths = segment_file(args.input, args.output_dir, cfg, stem=args.stem)
    elapsed = time.perf_counter() - started
    sched = outcome.schedule
    print(
        f"{args.input}: {sched.clusters.headline_count} clusters "
        f"(target {cfg.clusters}) at epsilon={sched.epsilon_final:.4g} "
        f"after {len(sched.rounds)} rounds, {sched.total_sweeps} sweeps"
    )
    for key in ("segmentation", "labels", "manifest"):
        print(f"  {key}: {paths[key]}")
    print(f"elapsed: {elapsed:.2f}s", file=sys.stderr)
    if not sched.target_met or not sched.converged_all:
        return 3
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    traj = simulate_population(
        n=args.agents,
        epsilon=args.epsilon,
        mu=args.mu,
        seed=args.seed,
        snapshot_every=args.snapshot_every,
        max_sweeps=args.max_sweeps,
    )
    expected = expected_cluster_count(args.epsilon)
    got = traj.clusters.headline_count
    centres = ", ".join(f"{c[0]:.4f}" for c in traj.clusters.headline_centres)
    print(
        f"n={args.agents} epsilon={args.epsilon} mu={args.mu} seed={args.seed}: "
        f"{got} clusters (predicted {expected}) after {traj.sweeps} sweeps"
    )
    print(f"centres: [{centres}]")
    if args.csv:
        Path(args.csv).parent.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(args.csv, traj)
        print(f"trajectory: {args.csv}")
    if not traj.converged:
        return 3
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    records, summary, pooled = evaluate_directory(args.pred, args.gt)
    rows = [(rec.name, rec.metrics) for rec in records]
    rows.append(("mean", summary))
    if args.pixel_pooled:
        rows.append(("pooled", pooled))
    print(format_metrics_table(rows))
    if args.json:
        Path(args.json).parent.mkdir(parents=True, exist_ok=True)
        with open(args.json, "w") as fh:
            fh.write(results_to_json(records, summary, pooled) + "\n")
        print(f"results: {args.json}", file=sys.stderr)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    if args.dataset:
        pairs = dataset_pairs(args.dataset)
    else:
        directory = Path(args.output_dir) / "dataset"
        written = write_dataset(directory, seed=cfg.seed)
        print(f"wrote builtin dataset to {directory}", file=sys.stderr)
        pairs = [(img.stem, img, mask) for img, mask in written]
    started = time.perf_counter()
    by_method, rows = bench_dataset(pairs, cfg)
    elapsed = time.perf_counter() - started
    print(bench_report(rows))
    print(f"elapsed: {elapsed:.2f}s", file=sys.stderr)
    if args.json:
        payload = {
            display: {
                "summary": {
                    "accuracy": summary.accuracy,
                    "recall": summary.recall,
                    "fallout": summary.fallout,
                },
                "images": [
                    {
                        "name": rec.name,
                        "accuracy": rec.metrics.accuracy,
                        "recall": rec.metrics.recall,
                        "fallout": rec.metrics.fallout,
                    }
                    for rec in by_method[method]
                ],
            }
            for (method, display), (_, summary) in zip(BENCH_METHODS, rows)
        }
        path = Path(args.json)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"results: {args.json}", file=sys.stderr)
    return 0


def cmd_make_dataset(args: argparse.Namespace) -> int:
    pairs = write_dataset(args.output_dir, n_images=args.count, size=args.size, seed=args.seed)
    for img, mask in pairs:
        print(f"{img}  {mask}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opinionseg",
        description="Image segmentation by bounded-confidence opinion dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_segment = sub.add_parser("segment", help="segment one image")
    p_segment.add_argument("input", help="image file to segment")
    p_segment.add_argument("--output-dir", "-o", default=".", help="where outputs go")
    p_segment.add_argument("--stem", help="output file stem (default: input stem)")
    _add_config_options(p_segment)
    p_segment.set_defaults(func=cmd_segment)

    p_sim = sub.add_parser("simulate", help="run the abstract opinion model")
    p_sim.add_argument("--agents", "-n", type=int, default=1000, help="population size")
    p_sim.add_argument("--epsilon", "-e", type=float, required=True, help="confidence bound")
    p_sim.add_argument("--mu", type=float, default=0.5, help="convergence rate")
    p_sim.add_argument("--seed", type=int, default=0, help="RNG seed")
    p_sim.add_argument("--snapshot-every", type=int, default=10, help="snapshot stride")
    p_sim.add_argument("--max-sweeps", type=int, default=10_000, help="sweep cap")
    p_sim.add_argument("--csv", help="write trajectory CSV here")
    p_sim.set_defaults(func=cmd_simulate)

    p_eval = sub.add_parser("evaluate", help="score label maps against masks")
    p_eval.add_argument("--pred", required=True, help="directory of *_labels.txt files")
    p_eval.add_argument("--gt", required=True, help="directory of ground-truth masks")
    p_eval.add_argument("--json", help="write detailed results JSON here")
    p_eval.add_argument(
        "--pixel-pooled", action="store_true", help="also print pixel-pooled summary"
    )
    p_eval.set_defaults(func=cmd_evaluate)

    p_bench = sub.add_parser("bench", help="compare methods on an image/mask dataset")
    p_bench.add_argument(
        "--dataset", help="directory of X.png with X_mask.png (default: builtin synthetic)"
    )
    p_bench.add_argument("--output-dir", "-o", default=".", help="where generated data goes")
    p_bench.add_argument("--json", help="write detailed results JSON here")
    _add_config_options(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    p_mkds = sub.add_parser("make-dataset", help="write the synthetic demo dataset")
    p_mkds.add_argument("--output-dir", "-o", default="dataset", help="target directory")
    p_mkds.add_argument("--count", type=int, default=5, help="number of images")
    p_mkds.add_argument("--size", type=int, default=64, help="image side length")
    p_mkds.add_argument("--seed", type=int, default=0, help="base RNG seed")
    p_mkds.set_defaults(func=cmd_make_dataset)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1", help="bind address")
    p_serve.add_argument("--port", type=int, default=8000, help="bind port")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
