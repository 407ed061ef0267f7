"""Numpy/pure-Python solver kernels: the fallback backend.

Same interface as the compiled `_ckernels` extension. The exhaustive scans
are chunk-vectorized with numpy; the annealer is a plain Python loop that
replays the exact arithmetic of the C kernel (same SplitMix64 stream, same
conditional-add accumulation order) so both backends produce bit-identical
trajectories for a given seed.

Tie-breaking: objective values within `tie_eps` of the running minimum are
treated as equal and the lexicographically smallest index set wins. The
tolerance absorbs summation-order noise between mathematically equal
optima (symmetric grids make such degeneracy the norm, not the exception);
callers pass a tie_eps far below any genuine value gap.
"""

from __future__ import annotations

import math

import numpy as np

from ..combinatorics import comb, iter_combination_chunks
from ..rng import SplitMix64

_GRAY_CHUNK = 1 << 16


def _mask_selection(mask: int, n: int) -> tuple[int, ...]:
    return tuple(i for i in range(n) if (mask >> i) & 1)


def gray_scan(linear: np.ndarray, quad_upper: np.ndarray, tie_eps: float):
    """Scan all 2^n assignments; returns (best_mask, best_value, evaluations)."""
    lin = np.asarray(linear, dtype=np.float64)
    upper = np.asarray(quad_upper, dtype=np.float64)
    n = lin.shape[0]
    total = 1 << n
    shifts = np.arange(n, dtype=np.uint64)
    best_val = math.inf
    best_sel: tuple[int, ...] | None = None
    for start in range(0, total, _GRAY_CHUNK):
        stop = min(start + _GRAY_CHUNK, total)
        masks = np.arange(start, stop, dtype=np.uint64)
        bits = ((masks[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.float64)
        vals = bits @ lin + np.einsum("mi,mi->m", bits @ upper, bits)
        cmin = float(vals.min())
        if cmin > best_val + tie_eps:
            continue
        new_val = min(best_val, cmin)
        cand = min(
            _mask_selection(int(m), n) for m in masks[vals <= new_val + tie_eps]
        )
        if cmin < best_val - tie_eps or best_sel is None:
            best_sel = cand
        elif cand < best_sel:
            best_sel = cand
        best_val = new_val
    mask = 0
    for i in best_sel:
        mask |= 1 << i
    return mask, best_val, total


def combo_scan(linear: np.ndarray, quad_upper: np.ndarray, k: int, tie_eps: float):
    """Scan all cardinality-k subsets in lexicographic order.

    Returns (best_selection array, best_value, evaluations); among values
    within tie_eps of the minimum the lexicographically smallest subset
    (the earliest in scan order) wins.
    """
    lin = np.asarray(linear, dtype=np.float64)
    upper = np.asarray(quad_upper, dtype=np.float64)
    n = lin.shape[0]
    if k == 0:
        return np.empty(0, dtype=np.int64), 0.0, 1
    best_val = math.inf
    best_sel = None
    for block in iter_combination_chunks(n, k):
        idx = block.astype(np.intp)
        vals = lin[idx].sum(axis=1)
        for p in range(k):
            for q in range(p + 1, k):
                vals += upper[idx[:, p], idx[:, q]]
        cmin = float(vals.min())
        if cmin > best_val + tie_eps:
            continue
        new_val = min(best_val, cmin)
        cand_rows = idx[vals <= new_val + tie_eps]
        cand = min(tuple(int(v) for v in row) for row in cand_rows)
        if cmin < best_val - tie_eps or best_sel is None:
            best_sel = cand
        elif cand < best_sel:
            best_sel = cand
        best_val = new_val
    return np.asarray(best_sel, dtype=np.int64), best_val, comb(n, k)


def _eval_from_scratch(lin, sym, z, n):
    # Canonical accumulation order, mirrored exactly by the C kernel.
    val = 0.0
    for i in range(n):
        if z[i]:
            acc = lin[i]
            row = sym[i]
            for j in range(i):
                if z[j]:
                    acc += row[j]
            val += acc
    return val


def anneal_run(
    linear: np.ndarray,
    quad_upper: np.ndarray,
    t_initial: float,
    cooling: float,
    sweeps: int,
    restarts: int,
    seed: int,
    tie_eps: float,
):
    """Single-flip Metropolis annealing with geometric cooling.

    Restart r uses the SplitMix64 stream seeded with seed + r. Returns
    (best_selection array, best_value, evaluations, trace) where trace
    holds the best-so-far value after each sweep of each restart.
    """
    lin = [float(v) for v in np.asarray(linear, dtype=np.float64)]
    symm = np.asarray(quad_upper, dtype=np.float64)
    symm = symm + symm.T
    sym = [[float(v) for v in row] for row in symm]
    n = len(lin)
    best_val = math.inf
    best_sel: tuple[int, ...] | None = None
    trace = np.empty(restarts * sweeps)
    evaluations = 0
    step = 0

    def consider(val, z):
        nonlocal best_val, best_sel
        if val > best_val + tie_eps:
            return
        sel = tuple(i for i in range(n) if z[i])
        if val < best_val - tie_eps or best_sel is None or sel < best_sel:
            best_sel = sel
        if val < best_val:
            best_val = val

    for r in range(restarts):
        rng = SplitMix64(seed + r)
        z = [rng.next_u64() & 1 for _ in range(n)]
        val = _eval_from_scratch(lin, sym, z, n)
        evaluations += 1
        consider(val, z)
        t = t_initial
        for _ in range(sweeps):
            for _ in range(n):
                i = rng.below(n)
                s = lin[i]
                row = sym[i]
                for j in range(n):
                    if z[j]:
                        s += row[j]
                delta = -s if z[i] else s
                evaluations += 1
                if delta <= 0.0 or rng.uniform() < math.exp(-delta / t):
                    z[i] ^= 1
                    val += delta
                    consider(val, z)
            trace[step] = best_val
            step += 1
            t *= cooling
    return np.asarray(best_sel, dtype=np.int64), best_val, evaluations, trace
