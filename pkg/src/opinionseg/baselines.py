"""Reference segmentation baseline: k-means on pixel values.

Lloyd iterations with k-means++ seeding, run on the same [0, 1] opinion
vectors the dynamics see, so benchmark comparisons differ only in the
clustering step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Population


@dataclass
class KMeansResult:
    labels: np.ndarray
    centres: np.ndarray
    inertia: float
    iterations: int
    converged: bool


def _seed_centres(op: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: spread initial centres by squared distance."""
    n = op.shape[0]
    centres = np.empty((k, op.shape[1]), dtype=np.float64)
    centres[0] = op[rng.integers(0, n)]
    dist2 = np.sum((op - centres[0]) ** 2, axis=1)
    for c in range(1, k):
        total = dist2.sum()
        if total <= 0.0:
            centres[c:] = centres[0]
            break
        probs = dist2 / total
        centres[c] = op[rng.choice(n, p=probs)]
        dist2 = np.minimum(dist2, np.sum((op - centres[c]) ** 2, axis=1))
    return centres


def kmeans(
    pop: Population,
    k: int,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> KMeansResult:
    """Cluster opinions into k groups by Lloyd's algorithm.

    Deterministic for a given seed.  An iteration that empties a cluster
    reseeds it from the point farthest from its centre.  Stops when the
    largest centre movement drops to tol or below.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if pop.n < k:
        raise ValueError(f"cannot fit {k} clusters to {pop.n} agents")
    op = pop.opinions
    rng = np.random.default_rng(seed)
    centres = _seed_centres(op, k, rng)
    labels = np.zeros(pop.n, dtype=np.int64)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        dist2 = np.sum((op[:, None, :] - centres[None, :, :]) ** 2, axis=2)
        labels = np.argmin(dist2, axis=1)
        new_centres = centres.copy()
        for c in range(k):
            members = op[labels == c]
            if members.shape[0] == 0:
                farthest = int(np.argmax(np.min(dist2, axis=1)))
                new_centres[c] = op[farthest]
            else:
                new_centres[c] = members.mean(axis=0)
        shift = float(np.max(np.abs(new_centres - centres)))
        centres = new_centres
        if shift <= tol:
            converged = True
            break
    dist2 = np.sum((op[:, None, :] - centres[None, :, :]) ** 2, axis=2)
    labels = np.argmin(dist2, axis=1)
    inertia = float(np.sum(np.take_along_axis(dist2, labels[:, None], axis=1)))
    return KMeansResult(
        labels=labels.astype(np.int64),
        centres=centres,
        inertia=inertia,
        iterations=iterations,
        converged=converged,
    )
