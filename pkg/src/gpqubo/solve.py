"""Minimizing assignments of a QUBO instance, plus the true-objective oracle.

Three strategies:

* `solve_exact_gray` - full 2^n enumeration (Gray-code order with O(n)
  incremental updates in the compiled kernel), capped by variable count.
* `solve_exact_constrained` - enumeration restricted to cardinality-K
  subsets. For instances compiled with a feasible penalty scale B the
  unconstrained optimum has exactly K ones, so this equals the global
  optimum at a fraction of the cost.
* `solve_anneal` - seeded single-flip Metropolis annealing with geometric
  cooling and restarts; always returns a candidate.

All solvers break ties by the lexicographically smallest index set, where
"tie" means objective values within a tolerance of 1e-9 times the
coefficient scale: symmetric domains make exactly-degenerate optima the
common case, and the tolerance keeps the winner independent of summation
order. The reported best_value is re-evaluated from scratch on the winning
selection.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import backend
from .combinatorics import comb, iter_combination_chunks
from .errors import CapacityError, MalformedInputError
from .gp import Domain, Hyperparams, Selection, total_variance, total_variance_many
from .model import QuboInstance, evaluate

__all__ = [
    "AnnealSchedule",
    "SolveReport",
    "GRAY_CAP_DEFAULT",
    "SUBSET_BUDGET_DEFAULT",
    "solve_exact_gray",
    "solve_exact_constrained",
    "solve_anneal",
    "oracle_best_subset",
    "report_to_dict",
    "report_from_dict",
    "save_report",
    "load_report",
]

GRAY_CAP_DEFAULT = 26
SUBSET_BUDGET_DEFAULT = 10_000_000
TIE_RTOL = 1e-9


def _tie_eps(q: QuboInstance) -> float:
    """Absolute tie band: TIE_RTOL times the largest coefficient magnitude."""
    scale = max(1.0, float(np.abs(q.linear).max()), float(np.abs(q.quadratic).max()))
    return TIE_RTOL * scale


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling schedule: T_k = t_initial * cooling^k for `sweeps` sweeps.

    Each sweep proposes n single-bit flips. `t_final` records the target end
    temperature the default sweep count is derived from.
    """

    t_initial: float
    t_final: float
    cooling: float = 0.97
    sweeps: int = 300
    restarts: int = 10

    def __post_init__(self):
        if not (self.t_initial > 0 and self.t_final > 0):
            raise MalformedInputError("temperatures must be positive")
        if not 0 < self.cooling < 1:
            raise MalformedInputError("cooling factor must lie in (0, 1)")
        if self.sweeps < 1 or self.restarts < 1:
            raise MalformedInputError("sweeps and restarts must be at least 1")

    @classmethod
    def default_for(cls, q: QuboInstance, restarts: int = 10) -> "AnnealSchedule":
        """Scale-aware defaults: start at max |coefficient|, end near
        1e-3 x median |coefficient|, cooling 0.97 per sweep."""
        iu = np.triu_indices(q.n, k=1)
        coeffs = np.abs(np.concatenate([q.linear, q.quadratic[iu]])) if q.n > 1 else np.abs(q.linear)
        t_init = float(coeffs.max()) if coeffs.size and coeffs.max() > 0 else 1.0
        t_final = 1e-3 * float(np.median(coeffs)) if coeffs.size else 1e-3
        if t_final <= 0 or t_final >= t_init:
            t_final = 1e-6 * t_init
        sweeps = max(1, math.ceil(math.log(t_final / t_init) / math.log(0.97)))
        return cls(t_initial=t_init, t_final=t_final, cooling=0.97, sweeps=sweeps, restarts=restarts)


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one solver run. wall_time_ms is measured, not reproducible."""

    best_selection: Selection
    best_value: float
    method: str
    evaluations: int
    seed: int | None
    wall_time_ms: float


def solve_exact_gray(q: QuboInstance, cap: int = GRAY_CAP_DEFAULT) -> SolveReport:
    """Global minimum by full 2^n enumeration."""
    if q.n > min(cap, 62):
        raise CapacityError(
            f"full enumeration of 2^{q.n} assignments exceeds the cap of {min(cap, 62)} "
            "variables; use solve_exact_constrained or solve_anneal"
        )
    start = time.perf_counter()
    mask, _, evals = backend.gray_scan(q.linear, q.quadratic, _tie_eps(q))
    sel = Selection(tuple(i for i in range(q.n) if (mask >> i) & 1))
    return SolveReport(
        best_selection=sel,
        best_value=evaluate(q, sel),
        method="gray_exact",
        evaluations=evals,
        seed=None,
        wall_time_ms=(time.perf_counter() - start) * 1e3,
    )


def solve_exact_constrained(
    q: QuboInstance, budget: int = SUBSET_BUDGET_DEFAULT
) -> SolveReport:
    """Minimum over the feasible set of exactly K selected variables.

    Equals the unconstrained optimum whenever the instance was compiled
    with a feasible penalty scale.
    """
    n_candidates = comb(q.n, q.K)
    if n_candidates > budget:
        raise CapacityError(
            f"C({q.n}, {q.K}) = {n_candidates} cardinality-K subsets exceed the "
            f"budget of {budget}; raise the budget or use solve_anneal"
        )
    start = time.perf_counter()
    sel_arr, _, evals = backend.combo_scan(q.linear, q.quadratic, q.K, _tie_eps(q))
    sel = Selection(tuple(int(i) for i in sel_arr))
    return SolveReport(
        best_selection=sel,
        best_value=evaluate(q, sel),
        method="constrained_exact",
        evaluations=evals,
        seed=None,
        wall_time_ms=(time.perf_counter() - start) * 1e3,
    )


def solve_anneal(
    q: QuboInstance, schedule: AnnealSchedule | None = None, seed: int = 0
) -> SolveReport:
    """Best assignment visited by seeded Metropolis annealing.

    Deterministic for a given (schedule, seed); restart r consumes the
    stream seeded with seed + r, so restarts parallelize without changing
    the result.
    """
    sched = schedule if schedule is not None else AnnealSchedule.default_for(q)
    start = time.perf_counter()
    sel_arr, _, evals, _trace = backend.anneal_run(
        q.linear,
        q.quadratic,
        sched.t_initial,
        sched.cooling,
        sched.sweeps,
        sched.restarts,
        seed,
        _tie_eps(q),
    )
    sel = Selection(tuple(int(i) for i in sel_arr))
    return SolveReport(
        best_selection=sel,
        best_value=evaluate(q, sel),
        method="annealing",
        evaluations=evals,
        seed=seed,
        wall_time_ms=(time.perf_counter() - start) * 1e3,
    )


def oracle_best_subset(
    domain: Domain,
    h: Hyperparams,
    K: int,
    budget: int = SUBSET_BUDGET_DEFAULT,
) -> Selection:
    """Exhaustive minimizer of the true objective J over cardinality-K subsets.

    Ground truth for the QUBO surrogate; ties go to the lexicographically
    smallest subset (the first minimum in lex enumeration order).
    """
    n = len(domain)
    if not 1 <= K <= n:
        raise MalformedInputError(f"need 1 <= K <= {n}, got K = {K}")
    n_candidates = comb(n, K)
    if n_candidates > budget:
        raise CapacityError(
            f"C({n}, {K}) = {n_candidates} subsets exceed the budget of {budget}"
        )
    tie_eps = TIE_RTOL * max(1.0, n * h.sigma_f**2)
    best_val = math.inf
    best = None
    for block in iter_combination_chunks(n, K, chunk_rows=65_536):
        vals = total_variance_many(block, domain, h)
        cmin = float(vals.min())
        if cmin > best_val + tie_eps:
            continue
        new_val = min(best_val, cmin)
        cand_rows = block[vals <= new_val + tie_eps]
        cand = min(tuple(int(v) for v in row) for row in cand_rows)
        if cmin < best_val - tie_eps or best is None:
            best = cand
        elif cand < best:
            best = cand
        best_val = new_val
    return Selection(best)


def report_to_dict(r: SolveReport) -> dict[str, Any]:
    return {
        "best_selection": list(r.best_selection.indices),
        "best_value": r.best_value,
        "method": r.method,
        "evaluations": r.evaluations,
        "seed": r.seed,
        "wall_time_ms": r.wall_time_ms,
    }


def report_from_dict(d: dict[str, Any]) -> SolveReport:
    try:
        return SolveReport(
            best_selection=Selection(tuple(d["best_selection"])),
            best_value=float(d["best_value"]),
            method=str(d["method"]),
            evaluations=int(d["evaluations"]),
            seed=None if d.get("seed") is None else int(d["seed"]),
            wall_time_ms=float(d["wall_time_ms"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInputError(f"malformed solve report document: {exc}") from exc


def save_report(r: SolveReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(r), fh, indent=2)
        fh.write("\n")


def load_report(path) -> SolveReport:
    with open(path, "r", encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


def true_objective(sel: Selection, domain: Domain, h: Hyperparams) -> float:
    """Convenience: J of a selection, for scoring solver output."""
    return total_variance(sel, domain, h)
