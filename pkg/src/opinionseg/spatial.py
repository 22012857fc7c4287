"""Spatial interaction rules for pixel populations.

Two refinements of the basic pairwise update use the grid geometry:

* distance rule: the update is damped by (1 - d) where d is the
  Minkowski distance between the two pixels normalised by the grid
  diagonal, so far-apart pixels barely pull on each other.
* neighbour rule: each pixel is represented by the mean opinion of its
  within-epsilon grid neighbours (itself included), the confidence gate
  compares those local means, and each side moves toward the other
  side's mean.

These are the scalar reference implementations; the compiled sweep
loops in _kernels replay exactly the same arithmetic.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .model import Population, within_confidence


class PixelCoord(NamedTuple):
    row: int
    col: int


def coord_of(index: int, width: int) -> PixelCoord:
    """Grid coordinate of a row-major agent index."""
    if width < 1:
        raise ValueError(f"width must be positive, got {width}")
    if index < 0:
        raise ValueError(f"index must be non-negative, got {index}")
    return PixelCoord(index // width, index % width)


def index_of(coord: PixelCoord, width: int) -> int:
    """Row-major agent index of a grid coordinate."""
    r, c = coord
    if width < 1:
        raise ValueError(f"width must be positive, got {width}")
    if r < 0 or c < 0 or c >= width:
        raise ValueError(f"coordinate {coord!r} out of range for width {width}")
    return r * width + c


def normalized_distance(p_i: PixelCoord, p_j: PixelCoord, p_size: PixelCoord, k: float = 2.0) -> float:
    """Minkowski-k distance between two pixels over the grid diagonal.

    p_size is the bottom-right corner (height-1, width-1), so the result
    is 0 for coincident pixels and 1 for opposite corners.  k must
    exceed 1; a degenerate 1x1 grid (p_size == (0, 0)) has no diagonal
    and is rejected.
    """
    if not k > 1.0:
        raise ValueError(f"minkowski k must be > 1, got {k}")
    if p_size.row < 0 or p_size.col < 0:
        raise ValueError(f"p_size must be non-negative, got {p_size!r}")
    if p_size.row == 0 and p_size.col == 0:
        raise ValueError("normalized distance is undefined on a 1x1 grid")
    for p in (p_i, p_j):
        if not (0 <= p.row <= p_size.row and 0 <= p.col <= p_size.col):
            raise ValueError(f"coordinate {p!r} outside grid corner {p_size!r}")
    dr = abs(float(p_i.row - p_j.row))
    dc = abs(float(p_i.col - p_j.col))
    denom = float(p_size.row) ** k + float(p_size.col) ** k
    return (dr ** k + dc ** k) ** (1.0 / k) / denom ** (1.0 / k)


def distance_update(a, b, p_i: PixelCoord, p_j: PixelCoord, p_size: PixelCoord,
                    mu: float, k: float = 2.0):
    """Pairwise update damped by how far apart the two pixels sit.

    The effective rate is mu * (1 - d) with d = normalized_distance, so
    touching pixels move at nearly full rate and opposite corners not at
    all.  Unconditional like basic_update: the caller applies the
    confidence gate on the raw opinions first.
    """
    if not 0.0 < mu <= 0.5:
        raise ValueError(f"mu must be in (0, 0.5], got {mu}")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    dist = normalized_distance(p_i, p_j, p_size, k)
    f = mu * (1.0 - dist)
    return a + f * (b - a), b + f * (a - b)


def neighbourhood_opinion(pop: Population, index: int, epsilon: float,
                          connectivity: int = 8) -> np.ndarray:
    """Mean opinion of a pixel and its within-epsilon grid neighbours.

    Neighbours come from the 4- or 8-connected stencil, truncated at the
    image border; a neighbour contributes only when it clears the
    confidence gate against the centre pixel.  The centre always counts,
    so the result is defined even for a fully isolated pixel.
    """
    if pop.geometry is None:
        raise ValueError("population has no grid geometry")
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    if not 0 <= index < pop.n:
        raise ValueError(f"index {index} out of range for population of {pop.n}")
    width, height = pop.geometry
    op = pop.opinions
    r0, c0 = index // width, index % width
    out = op[index].copy()
    count = 1
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            if connectivity == 4 and dr != 0 and dc != 0:
                continue
            r, c = r0 + dr, c0 + dc
            if not (0 <= r < height and 0 <= c < width):
                continue
            q = r * width + c
            if within_confidence(op[index], op[q], epsilon):
                out += op[q]
                count += 1
    out /= count
    return out


def neighbour_update(pop: Population, i: int, j: int, epsilon: float, mu: float,
                     connectivity: int = 8):
    """Neighbourhood-smoothed update for one pair of pixels.

    Gates on the two neighbourhood means rather than the raw opinions,
    then moves each pixel toward the other side's mean.  Results are
    clamped to [0, 1] (the mean of a mixed neighbourhood can pull a
    pixel toward the box edge, and clamping keeps the state valid).
    Returns the updated pair, or None when the gate blocks.
    """
    if not 0.0 < mu <= 0.5:
        raise ValueError(f"mu must be in (0, 0.5], got {mu}")
    eta_i = neighbourhood_opinion(pop, i, epsilon, connectivity)
    eta_j = neighbourhood_opinion(pop, j, epsilon, connectivity)
    if not within_confidence(eta_i, eta_j, epsilon):
        return None
    a = pop.opinions[i]
    b = pop.opinions[j]
    new_a = np.clip(a + mu * (eta_j - a), 0.0, 1.0)
    new_b = np.clip(b + mu * (eta_i - b), 0.0, 1.0)
    return new_a, new_b
