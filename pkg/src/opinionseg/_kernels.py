"""Compiled inner loops for the three sweep rules.

Pair indices are drawn outside (numpy Generator) so the documented RNG
stays the single source of randomness; the kernels just replay the pair
list sequentially on the live opinion array.  Kept free of fastmath so
results match the pure-Python reference updates bit for bit.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def sweep_basic(op, i_arr, j_arr, mu, eps):
    n_pairs = i_arr.shape[0]
    d = op.shape[1]
    for t in range(n_pairs):
        i = i_arr[t]
        j = j_arr[t]
        gap = 0.0
        for m in range(d):
            g = abs(op[i, m] - op[j, m])
            if g > gap:
                gap = g
        if gap < eps:
            for m in range(d):
                a = op[i, m]
                b = op[j, m]
                op[i, m] = a + mu * (b - a)
                op[j, m] = b + mu * (a - b)


@njit(cache=True)
def sweep_distance(op, i_arr, j_arr, mu, eps, width, k, denom):
    n_pairs = i_arr.shape[0]
    d = op.shape[1]
    for t in range(n_pairs):
        i = i_arr[t]
        j = j_arr[t]
        gap = 0.0
        for m in range(d):
            g = abs(op[i, m] - op[j, m])
            if g > gap:
                gap = g
        if gap < eps:
            dr = abs(float(i // width - j // width))
            dc = abs(float(i % width - j % width))
            dist = (dr ** k + dc ** k) ** (1.0 / k) / denom
            f = mu * (1.0 - dist)
            for m in range(d):
                a = op[i, m]
                b = op[j, m]
                op[i, m] = a + f * (b - a)
                op[j, m] = b + f * (a - b)


@njit(cache=True)
def neighbourhood_mean(op, idx, eps, width, height, conn8, out):
    """Mean opinion of idx and its within-eps grid neighbours, into out."""
    d = op.shape[1]
    r0 = idx // width
    c0 = idx % width
    for m in range(d):
        out[m] = op[idx, m]
    count = 1
    for dr in range(-1, 2):
        for dc in range(-1, 2):
            if dr == 0 and dc == 0:
                continue
            if not conn8 and dr != 0 and dc != 0:
                continue
            r = r0 + dr
            c = c0 + dc
            if r < 0 or r >= height or c < 0 or c >= width:
                continue
            q = r * width + c
            gap = 0.0
            for m in range(d):
                g = abs(op[idx, m] - op[q, m])
                if g > gap:
                    gap = g
            if gap < eps:
                for m in range(d):
                    out[m] += op[q, m]
                count += 1
    for m in range(d):
        out[m] /= count


@njit(cache=True)
def sweep_neighbour(op, i_arr, j_arr, mu, eps, width, height, conn8):
    n_pairs = i_arr.shape[0]
    d = op.shape[1]
    eta_i = np.empty(d, dtype=np.float64)
    eta_j = np.empty(d, dtype=np.float64)
    for t in range(n_pairs):
        i = i_arr[t]
        j = j_arr[t]
        neighbourhood_mean(op, i, eps, width, height, conn8, eta_i)
        neighbourhood_mean(op, j, eps, width, height, conn8, eta_j)
        gap = 0.0
        for m in range(d):
            g = abs(eta_i[m] - eta_j[m])
            if g > gap:
                gap = g
        if gap < eps:
            for m in range(d):
                a = op[i, m]
                b = op[j, m]
                x = a + mu * (eta_j[m] - a)
                y = b + mu * (eta_i[m] - b)
                if x < 0.0:
                    x = 0.0
                elif x > 1.0:
                    x = 1.0
                if y < 0.0:
                    y = 0.0
                elif y > 1.0:
                    y = 1.0
                op[i, m] = x
                op[j, m] = y
