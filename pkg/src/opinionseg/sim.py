"""Abstract population runs: uniform random opinions, no image attached.

Useful for studying the dynamics themselves: how opinions condense over
sweeps and how the final cluster count tracks the confidence bound
(about floor(1/(2 epsilon)) for uniform initial opinions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cluster import MASS_FLOOR, MERGE_TOL, ClusterResult, count_clusters
from .model import ModelParams, Population, run_model


@dataclass
class Trajectory:
    """Snapshots of a scalar-opinion run, for plotting or export.

    snapshots holds (sweep_index, opinions-copy) pairs with strictly
    increasing indices, starting at sweep 0 (the initial state) and
    ending at the final state.
    """

    snapshots: list[tuple[int, np.ndarray]]
    sweeps: int
    converged: bool
    clusters: ClusterResult


def simulate_population(
    n: int,
    epsilon: float,
    mu: float = 0.5,
    seed: int = 0,
    snapshot_every: int = 10,
    max_sweeps: int = 10_000,
    conv_tol: float = 1e-6,
    merge_tol: float = MERGE_TOL,
    mass_floor: float = MASS_FLOOR,
) -> Trajectory:
    """Run the basic model on n uniform random scalar opinions.

    One PCG64 stream (from seed) drives both the initial opinions and
    the pair draws, so a (n, epsilon, mu, seed) tuple pins the entire
    run.  Snapshots are taken at sweep 0, every snapshot_every sweeps,
    and at the final sweep.
    """
    if n < 2:
        raise ValueError(f"population size must be >= 2, got {n}")
    if snapshot_every < 1:
        raise ValueError(f"snapshot_every must be >= 1, got {snapshot_every}")
    params = ModelParams(
        epsilon=epsilon, mu=mu, conv_tol=conv_tol, max_sweeps=max_sweeps, seed=seed
    )
    rng = np.random.default_rng(seed)
    pop = Population(rng.random(n))
    snapshots: list[tuple[int, np.ndarray]] = [(0, pop.opinions[:, 0].copy())]

    def record(sweep_idx: int, state: Population, diff: float) -> None:
        if sweep_idx % snapshot_every == 0:
            snapshots.append((sweep_idx, state.opinions[:, 0].copy()))

    result = run_model(pop, params, on_sweep=record, rng=rng)
    if snapshots[-1][0] != result.sweeps:
        snapshots.append((result.sweeps, result.population.opinions[:, 0].copy()))
    clusters = count_clusters(result.population, merge_tol, mass_floor)
    return Trajectory(
        snapshots=snapshots,
        sweeps=result.sweeps,
        converged=result.converged,
        clusters=clusters,
    )


def expected_cluster_count(epsilon: float) -> int:
    """Cluster count predicted for uniform opinions: floor(1/(2 epsilon)).

    Never below 1 (any valid epsilon yields at least one cluster).  The
    tiny nudge before flooring keeps quotients like 1/(2*0.1), which
    lands a hair under 5 in floats, on the intended integer.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    return max(1, math.floor(1.0 / (2.0 * epsilon) + 1e-9))


def write_trajectory_csv(path, traj: Trajectory) -> None:
    """Write snapshots as CSV rows: sweep index then one opinion per column."""
    import csv

    n = traj.snapshots[0][1].shape[0]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sweep"] + [f"agent_{k}" for k in range(n)])
        for sweep_idx, values in traj.snapshots:
            writer.writerow([sweep_idx] + [repr(float(v)) for v in values])
