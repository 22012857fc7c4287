"""Cluster extraction in opinion space and the epsilon-ladder scheduler.

After the dynamics converge, agents sit in tight knots in opinion
space.  count_clusters groups them by single linkage: two agents join
the same cluster when a chain of agents connects them in which every
consecutive pair is strictly closer than merge_tol in Chebyshev
(max-component) distance.  Clusters below the mass floor still get ids
and centres but are excluded from the headline count that drives
scheduling decisions.

schedule_epsilon walks the confidence bound up a fixed ladder
(epsilon_0, epsilon_0 + delta, ...), re-running the model to
convergence at each step, until the headline cluster count drops to the
requested target or the ladder is exhausted.  Raising epsilon only ever
lets converged clusters merge, so the headline count is non-increasing
over rounds; a violation means state corruption and aborts the run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelParams, Population, run_model

MERGE_TOL = 1e-3
MASS_FLOOR = 0.01


class UnionFind:
    """Disjoint sets over range(n), path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


@dataclass
class ClusterResult:
    """Clusters of a population, ordered headline-first.

    labels maps each agent to a cluster id; ids are dense in
    [0, num_clusters).  Clusters are sorted by descending mass with ties
    broken by ascending centre, and ids 0..headline_count-1 are exactly
    the clusters whose mass reaches the mass floor.  centres[k] is the
    mean opinion of cluster k, masses[k] its agent fraction.
    """

    labels: np.ndarray
    centres: np.ndarray
    masses: np.ndarray
    headline_count: int
    merge_tol: float
    mass_floor: float

    @property
    def num_clusters(self) -> int:
        return self.centres.shape[0]

    @property
    def headline_centres(self) -> np.ndarray:
        return self.centres[: self.headline_count]

    @property
    def minor_count(self) -> int:
        return self.num_clusters - self.headline_count


def _any_pair_close(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    """Whether any cross pair of rows is within tol in Chebyshev distance."""
    step = max(1, 2_000_000 // max(1, b.shape[0]))
    for s in range(0, a.shape[0], step):
        gaps = np.abs(a[s : s + step, None, :] - b[None, :, :]).max(axis=2)
        if bool((gaps < tol).any()):
            return True
    return False


def _link_labels_1d(values: np.ndarray, tol: float) -> np.ndarray:
    """Single-linkage labels for scalar opinions via one sort.

    On a line, chains split exactly at sorted gaps >= tol, so no
    union-find is needed.  Label values follow ascending opinion order
    here; count_clusters reorders them by mass afterwards.
    """
    order = np.argsort(values, kind="stable")
    svals = values[order]
    breaks = np.diff(svals) >= tol
    ids = np.concatenate(([0], np.cumsum(breaks)))
    labels = np.empty(values.shape[0], dtype=np.int64)
    labels[order] = ids
    return labels


def _link_labels_grid(op: np.ndarray, tol: float) -> np.ndarray:
    """Single-linkage labels for vector opinions via a cell hash.

    Hashing opinions to cells of width tol means any pair closer than
    tol lands in the same cell or in adjacent ones, so only members of
    adjacent cell pairs need a distance check.  Within one cell every
    per-component spread is below tol, so whole cells union for free.
    """
    n, d = op.shape
    cells = np.floor(op / tol).astype(np.int64)
    uniq, inverse = np.unique(cells, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    n_cells = uniq.shape[0]

    by_cell = np.argsort(inverse, kind="stable")
    starts = np.searchsorted(inverse[by_cell], np.arange(n_cells))
    ends = np.append(starts[1:], n)
    members = [by_cell[starts[c] : ends[c]] for c in range(n_cells)]

    uf = UnionFind(n)
    for mem in members:
        first = int(mem[0])
        for x in mem[1:]:
            uf.union(first, int(x))

    cell_index = {tuple(row): c for c, row in enumerate(uniq)}
    # Half of the nonzero offsets (first nonzero component positive) so
    # each adjacent cell pair is visited once.
    offsets = []
    for off in np.ndindex(*([3] * d)):
        delta = tuple(o - 1 for o in off)
        nz = next((x for x in delta if x != 0), 0)
        if nz > 0:
            offsets.append(delta)

    for c, row in enumerate(uniq):
        a = members[c]
        rep_a = int(a[0])
        for delta in offsets:
            key = tuple(row[m] + delta[m] for m in range(d))
            other = cell_index.get(key)
            if other is None:
                continue
            b = members[other]
            rep_b = int(b[0])
            if uf.find(rep_a) == uf.find(rep_b):
                continue
            if _any_pair_close(op[a], op[b], tol):
                uf.union(rep_a, rep_b)

    roots = np.fromiter((uf.find(x) for x in range(n)), dtype=np.int64, count=n)
    _, labels = np.unique(roots, return_inverse=True)
    return labels.astype(np.int64)


def count_clusters(
    pop: Population,
    merge_tol: float = MERGE_TOL,
    mass_floor: float = MASS_FLOOR,
) -> ClusterResult:
    """Group agents into opinion clusters and report centres and masses.

    Single linkage under strict Chebyshev distance < merge_tol, exact
    (not approximate) for any dimensionality.  Clusters are ordered by
    descending mass, ties by ascending centre, and the headline count
    tallies those with mass >= mass_floor.  When every cluster is below
    the floor (possible only for tiny populations or a high floor) the
    largest is still promoted so the headline count is never zero.
    """
    if not merge_tol > 0.0:
        raise ValueError(f"merge_tol must be positive, got {merge_tol}")
    if not 0.0 <= mass_floor <= 1.0:
        raise ValueError(f"mass_floor must be in [0, 1], got {mass_floor}")
    op = pop.opinions
    n, d = op.shape
    if d == 1:
        raw = _link_labels_1d(op[:, 0], merge_tol)
    else:
        raw = _link_labels_grid(op, merge_tol)

    n_raw = int(raw.max()) + 1
    counts = np.bincount(raw, minlength=n_raw)
    centres = np.empty((n_raw, d), dtype=np.float64)
    for m in range(d):
        centres[:, m] = np.bincount(raw, weights=op[:, m], minlength=n_raw) / counts
    masses = counts / n

    order = sorted(range(n_raw), key=lambda k: (-masses[k], tuple(centres[k])))
    remap = np.empty(n_raw, dtype=np.int64)
    remap[order] = np.arange(n_raw)
    labels = remap[raw]
    centres = centres[order]
    masses = masses[order]

    headline = int(np.sum(masses >= mass_floor))
    if headline == 0:
        headline = 1
    return ClusterResult(
        labels=labels,
        centres=centres,
        masses=masses,
        headline_count=headline,
        merge_tol=merge_tol,
        mass_floor=mass_floor,
    )


@dataclass
class ScheduleParams:
    """Ladder settings for schedule_epsilon.

    Rounds use epsilon_0, epsilon_0 + delta_epsilon, ... (each value
    computed fresh from the round index, so no accumulation drift).
    max_rounds of None means enough rounds to walk the ladder up to 1.0.
    """

    target_c: int = 2
    epsilon_0: float = 0.1
    delta_epsilon: float = 0.01
    max_rounds: int | None = None

    def __post_init__(self):
        if self.target_c < 1:
            raise ValueError(f"target_c must be >= 1, got {self.target_c}")
        if not 0.0 < self.epsilon_0 <= 1.0:
            raise ValueError(f"epsilon_0 must be in (0, 1], got {self.epsilon_0}")
        if not self.delta_epsilon > 0.0:
            raise ValueError(f"delta_epsilon must be positive, got {self.delta_epsilon}")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ValueError(f"max_rounds must be >= 1, got {self.max_rounds}")

    def resolved_max_rounds(self) -> int:
        if self.max_rounds is not None:
            return self.max_rounds
        span = (1.0 - self.epsilon_0) / self.delta_epsilon
        # The 1e-9 nudge keeps a quotient that lands a hair under an
        # integer from dropping the final on-ladder round.
        return int(np.floor(span + 1e-9)) + 1


@dataclass
class RoundStats:
    """One scheduler round: which epsilon ran and what it produced."""

    round_index: int
    epsilon: float
    sweeps: int
    converged: bool
    headline_count: int


@dataclass
class ScheduleResult:
    """Final state of a scheduled run plus the per-round trace."""

    population: Population
    clusters: ClusterResult
    rounds: list[RoundStats]
    epsilon_final: float
    target_met: bool
    overshoot: bool
    converged_all: bool

    @property
    def total_sweeps(self) -> int:
        return sum(r.sweeps for r in self.rounds)


def schedule_epsilon(
    pop: Population,
    sched: ScheduleParams,
    params: ModelParams,
    merge_tol: float = MERGE_TOL,
    mass_floor: float = MASS_FLOOR,
    rng: np.random.Generator | None = None,
) -> ScheduleResult:
    """Raise epsilon round by round until the headline count hits target_c.

    At least one round always runs.  Each round runs the model to
    convergence on the previous round's output, then recounts clusters.
    Stops at the first round whose headline count is <= target_c, or
    when the ladder tops out (epsilon values above 1 are clamped to 1
    within a small guard, beyond it the ladder ends).  Counts below the
    target are reported with overshoot=True; counts that increase
    between rounds violate the merge-only invariant and raise
    RuntimeError.  One RNG stream (seeded from params.seed when rng is
    omitted) feeds every round, so a full schedule is reproducible.
    """
    if rng is None:
        rng = np.random.default_rng(params.seed)
    max_rounds = sched.resolved_max_rounds()
    work = pop
    clusters: ClusterResult | None = None
    rounds: list[RoundStats] = []
    prev_count: int | None = None
    for k in range(max_rounds):
        eps = sched.epsilon_0 + k * sched.delta_epsilon
        if eps > 1.0:
            if eps <= 1.0 + 1e-9:
                eps = 1.0
            else:
                break
        res = run_model(work, params.with_epsilon(eps), rng=rng)
        work = res.population
        clusters = count_clusters(work, merge_tol, mass_floor)
        count = clusters.headline_count
        if prev_count is not None and count > prev_count:
            raise RuntimeError(
                f"headline cluster count rose from {prev_count} to {count} "
                f"at round {k} (epsilon={eps}); merging can only reduce it, "
                "so the run state is corrupt"
            )
        rounds.append(RoundStats(k, eps, res.sweeps, res.converged, count))
        prev_count = count
        if count <= sched.target_c:
            break
    assert clusters is not None and rounds, "ladder must run at least one round"
    return ScheduleResult(
        population=work,
        clusters=clusters,
        rounds=rounds,
        epsilon_final=rounds[-1].epsilon,
        target_met=clusters.headline_count == sched.target_c,
        overshoot=clusters.headline_count < sched.target_c,
        converged_all=all(r.converged for r in rounds),
    )
