"""Bounded-confidence opinion dynamics over a population of agents.

Each agent holds an opinion vector in [0, 1]^d.  During a sweep, random
ordered pairs of agents are drawn; a pair interacts only when every
component of the opinion difference is strictly inside the confidence
bound epsilon.  An interacting pair moves together by the convergence
rate mu:

    x_i' = x_i + mu * (x_j - x_i)
    x_j' = x_j + mu * (x_i - x_j)

With mu in (0, 0.5] this is a symmetric contraction: the pair mean is
conserved exactly and the gap shrinks by the factor (1 - 2 mu).  The
population splits into internally-agreeing clusters whose count is
governed by epsilon (roughly floor(1/(2 epsilon)) for uniform initial
opinions).

Spatial interaction rules ("distance", "neighbour") additionally use the
pixel-grid geometry attached to the population; their per-pair update
formulas live in :mod:`opinionseg.spatial` and the compiled sweep loops
in :mod:`opinionseg._kernels`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import _kernels

RULES = ("basic", "distance", "neighbour")

CONVERGENCE_TOL = 1e-6
MAX_SWEEPS = 10_000


def _as_opinion_array(x) -> np.ndarray:
    """Coerce scalars / sequences to a float64 array with a component axis."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    return arr


def within_confidence(a, b, epsilon: float):
    """True when the pair (a, b) may interact under the bound epsilon.

    The test is strict on every component: max_m |a_m - b_m| < epsilon.
    Opinions exactly epsilon apart do not interact, so epsilon = 0 would
    freeze everything and is rejected.  Accepts single opinion vectors or
    stacked arrays of them (the comparison broadcasts over leading axes
    and returns a bool / bool array accordingly).
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    a = _as_opinion_array(a)
    b = _as_opinion_array(b)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(
            f"opinion dimensionality mismatch: {a.shape[-1]} vs {b.shape[-1]}"
        )
    out = np.max(np.abs(a - b), axis=-1) < epsilon
    if np.ndim(out) == 0:
        return bool(out)
    return out


def basic_update(a, b, mu: float):
    """Move the pair symmetrically toward each other by rate mu.

    Returns the updated pair (a', b').  Inputs are not modified.  The
    caller is responsible for the confidence gate; this function applies
    the update unconditionally.  Broadcasts over stacked inputs, which
    keeps bulk property checks (conservation, contraction) cheap.
    """
    if not 0.0 < mu <= 0.5:
        raise ValueError(f"mu must be in (0, 0.5], got {mu}")
    a = _as_opinion_array(a)
    b = _as_opinion_array(b)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(
            f"opinion dimensionality mismatch: {a.shape[-1]} vs {b.shape[-1]}"
        )
    return a + mu * (b - a), b + mu * (a - b)


@dataclass
class Population:
    """Flat array of agent opinions, optionally tied to an image grid.

    ``opinions`` has shape (n, d) with values in [0, 1].  When the agents
    are pixels, ``geometry = (width, height)`` records the grid so that
    agent k sits at row k // width, column k % width (row-major).
    """

    opinions: np.ndarray
    geometry: tuple[int, int] | None = None

    def __post_init__(self):
        arr = np.asarray(self.opinions, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ValueError(f"opinions must be (n,) or (n, d), got shape {arr.shape}")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError("population must have at least one agent and one component")
        if not np.isfinite(arr).all():
            raise ValueError("opinions must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("opinions must lie in [0, 1]")
        self.opinions = np.ascontiguousarray(arr)
        if self.geometry is not None:
            w, h = self.geometry
            if w < 1 or h < 1:
                raise ValueError(f"geometry sides must be positive, got {self.geometry}")
            if w * h != self.n:
                raise ValueError(
                    f"geometry {w}x{h} does not match population size {self.n}"
                )
            self.geometry = (int(w), int(h))

    @property
    def n(self) -> int:
        return self.opinions.shape[0]

    @property
    def d(self) -> int:
        return self.opinions.shape[1]

    @classmethod
    def from_grid(cls, grid: np.ndarray) -> "Population":
        """Build a population from an (h, w) or (h, w, d) array of opinions."""
        grid = np.asarray(grid, dtype=np.float64)
        if grid.ndim == 2:
            grid = grid[:, :, None]
        if grid.ndim != 3:
            raise ValueError(f"grid must be (h, w) or (h, w, d), got shape {grid.shape}")
        h, w, d = grid.shape
        return cls(grid.reshape(h * w, d), geometry=(w, h))

    def grid(self) -> np.ndarray:
        """Opinions reshaped to (h, w, d).  Requires geometry."""
        if self.geometry is None:
            raise ValueError("population has no grid geometry")
        w, h = self.geometry
        return self.opinions.reshape(h, w, self.d)

    def copy(self) -> "Population":
        return Population(self.opinions.copy(), geometry=self.geometry)


@dataclass
class ModelParams:
    """Knobs for one model run.

    mu is the convergence rate, epsilon the confidence bound.  The
    spatial rules read minkowski_k (distance) or connectivity
    (neighbour); the basic rule ignores both.  A run converges when the
    largest per-sweep opinion change drops to conv_tol or below, and is
    cut off after max_sweeps sweeps otherwise.
    """

    epsilon: float = 0.1
    mu: float = 0.5
    rule: str = "basic"
    minkowski_k: float = 2.0
    connectivity: int = 8
    conv_tol: float = CONVERGENCE_TOL
    max_sweeps: int = MAX_SWEEPS
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in (0, 1], got {self.epsilon}")
        if not 0.0 < self.mu <= 0.5:
            raise ValueError(f"mu must be in (0, 0.5], got {self.mu}")
        if self.rule not in RULES:
            raise ValueError(f"rule must be one of {RULES}, got {self.rule!r}")
        if not self.minkowski_k > 1.0:
            raise ValueError(f"minkowski_k must be > 1, got {self.minkowski_k}")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if not self.conv_tol > 0.0:
            raise ValueError(f"conv_tol must be positive, got {self.conv_tol}")
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")

    def with_epsilon(self, epsilon: float) -> "ModelParams":
        return replace(self, epsilon=epsilon)


def draw_pairs(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw n ordered agent pairs (i, j), i != j, uniformly with replacement.

    j is drawn on n-1 values and shifted past i, which keeps the pair
    exactly uniform over all n*(n-1) ordered pairs using two draws.
    """
    if n < 2:
        raise ValueError(f"need at least 2 agents to draw pairs, got {n}")
    i = rng.integers(0, n, size=n)
    j_raw = rng.integers(0, n - 1, size=n)
    j = j_raw + (j_raw >= i)
    return i, j


def sweep(pop: Population, params: ModelParams, rng: np.random.Generator) -> float:
    """Run one sweep of n sequential pair interactions, in place.

    Draws n ordered pairs up front, then applies the configured update
    rule pair by pair on the live opinion array, so later pairs in the
    same sweep see earlier results.  Returns the sweep diff: the largest
    absolute componentwise change between the opinions before and after
    the sweep (0.0 when nothing moved).
    """
    n = pop.n
    if n < 2:
        raise ValueError("sweep needs a population of at least 2 agents")
    if params.rule != "basic" and pop.geometry is None:
        raise ValueError(f"rule {params.rule!r} requires grid geometry")
    i_arr, j_arr = draw_pairs(n, rng)
    before = pop.opinions.copy()
    op = pop.opinions
    if params.rule == "basic":
        _kernels.sweep_basic(op, i_arr, j_arr, params.mu, params.epsilon)
    elif params.rule == "distance":
        w, h = pop.geometry
        if w == 1 and h == 1:
            raise ValueError("distance rule is undefined on a 1x1 grid")
        k = params.minkowski_k
        denom = (float(h - 1) ** k + float(w - 1) ** k) ** (1.0 / k)
        _kernels.sweep_distance(op, i_arr, j_arr, params.mu, params.epsilon, w, k, denom)
    else:
        w, h = pop.geometry
        conn8 = params.connectivity == 8
        _kernels.sweep_neighbour(op, i_arr, j_arr, params.mu, params.epsilon, w, h, conn8)
    return float(np.max(np.abs(op - before)))


@dataclass
class RunResult:
    """Outcome of run_model: final state plus convergence bookkeeping."""

    population: Population
    sweeps: int
    converged: bool
    final_diff: float


def run_model(
    pop: Population,
    params: ModelParams,
    on_sweep: Callable[[int, Population, float], None] | None = None,
    rng: np.random.Generator | None = None,
) -> RunResult:
    """Sweep until the per-sweep diff reaches conv_tol or sweeps run out.

    The input population is copied, never mutated.  At least one sweep
    always runs.  When rng is omitted a fresh PCG64 generator seeded
    with params.seed is used, which makes runs bit-reproducible; pass a
    generator explicitly to chain several runs on one stream.  on_sweep,
    if given, is called after every sweep with (sweep_index, population,
    diff); the population object it sees is the live working copy.
    """
    work = pop.copy()
    if rng is None:
        rng = np.random.default_rng(params.seed)
    sweeps = 0
    converged = False
    diff = np.inf
    while True:
        diff = sweep(work, params, rng)
        sweeps += 1
        if on_sweep is not None:
            on_sweep(sweeps, work, diff)
        if diff <= params.conv_tol:
            converged = True
            break
        if sweeps >= params.max_sweeps:
            break
    return RunResult(population=work, sweeps=sweeps, converged=converged, final_diff=diff)
