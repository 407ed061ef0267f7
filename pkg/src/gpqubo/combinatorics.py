"""Subset-enumeration helpers shared by the solvers and the fallback kernels."""

from __future__ import annotations

from functools import lru_cache
from math import comb

import numpy as np

__all__ = ["comb", "combinations_array", "iter_combination_chunks"]


@lru_cache(maxsize=2)
def combinations_array(n: int, k: int) -> np.ndarray:
    """All k-subsets of range(n) as a (C(n,k), k) array in lexicographic order.

    Uses int8 indices when n allows it to keep the cache affordable
    (C(36, 7) rows are ~58 MB at one byte per index).
    """
    dtype = np.int8 if n <= 127 else np.int32
    out = np.empty((comb(n, k), k), dtype=dtype)
    _fill(out, n, k, offset=0)
    out.flags.writeable = False
    return out


def _fill(out: np.ndarray, n: int, k: int, offset: int) -> None:
    if k == 0:
        return
    row = 0
    for first in range(n - k + 1):
        block = comb(n - first - 1, k - 1)
        out[row : row + block, 0] = offset + first
        _fill(out[row : row + block, 1:], n - first - 1, k - 1, offset + first + 1)
        row += block


def iter_combination_chunks(n: int, k: int, chunk_rows: int = 1_000_000):
    """Yield successive row blocks of `combinations_array(n, k)`."""
    full = combinations_array(n, k)
    for lo in range(0, full.shape[0], chunk_rows):
        yield full[lo : lo + chunk_rows]
