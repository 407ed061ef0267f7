"""Comparison strategies: submodular greedy forward selection and uniform random."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import MalformedInputError
from .gp import Domain, Hyperparams, Selection, total_variance
from .rng import SplitMix64

__all__ = ["GreedyResult", "greedy_select", "random_select"]


@dataclass(frozen=True)
class GreedyResult:
    """Greedy selection plus the J value after each pick."""

    selection: Selection
    trajectory: tuple[float, ...]


def greedy_select(domain: Domain, h: Hyperparams, K: int) -> GreedyResult:
    """Forward selection: each step adds the point whose inclusion minimizes
    the total remaining variance, ties broken by lowest index.

    Variance reduction is submodular, so this is the classic near-optimal
    greedy; the per-step J trajectory is returned for diagnostics.
    """
    n = len(domain)
    if not 1 <= K <= n:
        raise MalformedInputError(f"need 1 <= K <= {n}, got K = {K}")
    # Candidates whose J is within this band of the best count as tied, so
    # the lowest index wins regardless of float summation noise between
    # symmetry-equivalent candidates.
    tie_eps = 1e-9 * max(1.0, n * h.sigma_f**2)
    chosen: list[int] = []
    trajectory: list[float] = []
    for _ in range(K):
        best_j = None
        best_cand = None
        for cand in range(n):
            if cand in chosen:
                continue
            j_val = total_variance(Selection(tuple(chosen) + (cand,)), domain, h)
            if best_j is None or j_val < best_j - tie_eps:
                best_j = j_val
                best_cand = cand
            elif j_val < best_j:
                best_j = j_val
        chosen.append(best_cand)
        trajectory.append(total_variance(Selection(tuple(chosen)), domain, h))
    return GreedyResult(selection=Selection(tuple(chosen)), trajectory=tuple(trajectory))


def random_select(domain: Domain, K: int, seed: int) -> Selection:
    """Uniform K-subset of the domain, deterministic for a given seed.

    Drawn by a partial Fisher-Yates shuffle over SplitMix64 (see `rng`);
    no OS randomness is involved.
    """
    n = len(domain)
    if not 1 <= K <= n:
        raise MalformedInputError(f"need 1 <= K <= {n}, got K = {K}")
    return Selection(SplitMix64(seed).choose(n, K))
