"""Independent reference implementations used as test oracles.

Deliberately naive: explicit matrix inverses, full re-evaluation per
candidate, plain Python loops. Nothing here shares a code path with the
production package beyond numpy itself.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np


def kernel_naive(a, b, h) -> float:
    d2 = sum((float(x) - float(y)) ** 2 for x, y in zip(a, b))
    return h.sigma_f**2 * math.exp(-d2 / (2.0 * h.length_scale**2))


def posterior_variance_inv(x, sample_coords, h) -> float:
    """Posterior variance via an explicit dense inverse."""
    m = len(sample_coords)
    if m == 0:
        return kernel_naive(x, x, h)
    cov = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            cov[i, j] = kernel_naive(sample_coords[i], sample_coords[j], h)
        cov[i, i] += h.sigma_n**2
    kvec = np.array([kernel_naive(c, x, h) for c in sample_coords])
    return kernel_naive(x, x, h) - float(kvec @ np.linalg.inv(cov) @ kvec)


def posterior_mean_inv(x, sample_coords, observations, h) -> float:
    m = len(sample_coords)
    if m == 0:
        return 0.0
    cov = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            cov[i, j] = kernel_naive(sample_coords[i], sample_coords[j], h)
        cov[i, i] += h.sigma_n**2
    kvec = np.array([kernel_naive(c, x, h) for c in sample_coords])
    return float(kvec @ np.linalg.inv(cov) @ np.asarray(observations, dtype=float))


def total_variance_naive(subset_indices, domain, h) -> float:
    coords = [domain.points[i] for i in subset_indices]
    return sum(posterior_variance_inv(x, coords, h) for x in domain.points)


def qubo_value_naive(linear, quad_upper, selection) -> float:
    """From-scratch objective for one selection (sorted index iterable)."""
    sel = sorted(selection)
    val = sum(float(linear[i]) for i in sel)
    for a, b in combinations(sel, 2):
        val += float(quad_upper[a, b])
    return val


def brute_force_qubo(linear, quad_upper):
    """Global minimum over all 2^n assignments by full re-evaluation.

    Returns (selection tuple, value); ties go to the lexicographically
    smallest selection, compared on exactly equal values.
    """
    n = len(linear)
    best_val = math.inf
    best_sel = None
    for mask in range(1 << n):
        sel = tuple(i for i in range(n) if (mask >> i) & 1)
        val = qubo_value_naive(linear, quad_upper, sel)
        if val < best_val or (val == best_val and sel < best_sel):
            best_val = val
            best_sel = sel
    return best_sel, best_val


def brute_force_best_subset(domain, h, k):
    """Minimizer of J over cardinality-k subsets by naive double loop."""
    n = len(domain.points)
    best_val = math.inf
    best = None
    for sel in combinations(range(n), k):
        val = total_variance_naive(sel, domain, h)
        if val < best_val - 1e-12 * max(1.0, abs(val)):
            best_val = val
            best = sel
    return best, best_val


def subset_variance_profiles(domain, h):
    """Posterior-variance profile for every subset of a tiny domain.

    Returns a dict mask -> array of sigma^2(x_i | subset) over all domain
    points, computed with the explicit-inverse oracle. Only sensible for
    |X| <= ~10.
    """
    n = len(domain.points)
    prof = {}
    for mask in range(1 << n):
        coords = [domain.points[i] for i in range(n) if (mask >> i) & 1]
        prof[mask] = np.array(
            [posterior_variance_inv(x, coords, h) for x in domain.points]
        )
    return prof
