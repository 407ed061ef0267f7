"""Reproducible grid experiments: sweep, aggregation and CSV/TSV emission.

The default protocol evaluates, on an equally spaced lattice, every
combination of two length-scales x two signal levels x two noise levels
(8 hyperparameter combos), K from 2 to 7, a 19-value sweep of the edge
weight w from 0.10 to 1.00 in steps of 0.05, 100 seeded random baselines
per cell, one greedy run per cell, and the exhaustive oracle where its
subset count fits the budget.

Canonical output is a CSV with the exact header

    grid,n_points,length_scale,sigma_f,sigma_n,K,method,w,seed,remaining_variance,selection,wall_time_ms

where `selection` is a semicolon-joined index list and floats are written
in shortest round-trip decimal. Everything except the measured
wall_time_ms column is a pure function of the config: records are sorted
by all key fields, so reruns and different worker counts emit identical
bytes there. A plot-ready TSV (one row per K per curve) accompanies it.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .baselines import greedy_select, random_select
from .combinatorics import comb
from .errors import CapacityError, MalformedInputError
from .gp import Domain, Hyperparams, Selection, total_variance
from .model import build_from_tables, compute_tables
from .solve import (
    GRAY_CAP_DEFAULT,
    SUBSET_BUDGET_DEFAULT,
    AnnealSchedule,
    SolveReport,
    oracle_best_subset,
    solve_anneal,
    solve_exact_constrained,
    solve_exact_gray,
)

__all__ = [
    "GridSpec",
    "HyperparamsGrid",
    "SolverConfig",
    "ExperimentConfig",
    "RunRecord",
    "SummaryRow",
    "CSV_HEADER",
    "METHOD_QUBO",
    "METHOD_GREEDY",
    "METHOD_RANDOM",
    "METHOD_ORACLE",
    "make_grid",
    "default_w_values",
    "default_config",
    "run_experiment",
    "aggregate",
    "write_records_csv",
    "read_records_csv",
    "write_summary_tsv",
    "verify_records",
    "run_and_write",
]

logger = logging.getLogger(__name__)

METHOD_QUBO = "qubo_w"
METHOD_GREEDY = "greedy"
METHOD_RANDOM = "random"
METHOD_ORACLE = "oracle"

CSV_HEADER = (
    "grid,n_points,length_scale,sigma_f,sigma_n,K,method,w,seed,"
    "remaining_variance,selection,wall_time_ms"
)

_GRID_LABEL_RE = re.compile(r"^(\d+)x(\d+)(?:@(.+))?$")


def make_grid(rows: int, cols: int, spacing: float = 1.0) -> Domain:
    """Row-major lattice of rows x cols points at the given spacing."""
    if rows < 1 or cols < 1:
        raise MalformedInputError(f"grid dimensions must be >= 1, got {rows} x {cols}")
    if not spacing > 0:
        raise MalformedInputError(f"spacing must be positive, got {spacing}")
    pts = [(r * spacing, c * spacing) for r in range(rows) for c in range(cols)]
    return Domain(points=np.asarray(pts, dtype=np.float64), grid=(rows, cols), spacing=spacing)


def grid_label(rows: int, cols: int, spacing: float = 1.0) -> str:
    return f"{rows}x{cols}" if spacing == 1.0 else f"{rows}x{cols}@{spacing!r}"


def parse_grid_label(label: str) -> tuple[int, int, float]:
    m = _GRID_LABEL_RE.match(label)
    if not m:
        raise MalformedInputError(f"unparseable grid label: {label!r}")
    rows, cols = int(m.group(1)), int(m.group(2))
    spacing = float(m.group(3)) if m.group(3) else 1.0
    return rows, cols, spacing


@dataclass(frozen=True)
class GridSpec:
    rows: int
    cols: int
    spacing: float = 1.0

    @property
    def label(self) -> str:
        return grid_label(self.rows, self.cols, self.spacing)

    @property
    def n_points(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class HyperparamsGrid:
    length_scales: tuple[float, ...]
    sigma_fs: tuple[float, ...]
    sigma_ns: tuple[float, ...]

    def combos(self) -> tuple[Hyperparams, ...]:
        return tuple(
            Hyperparams(ls, sf, sn)
            for ls, sf, sn in product(self.length_scales, self.sigma_fs, self.sigma_ns)
        )


@dataclass(frozen=True)
class SolverConfig:
    """How QUBO cells are solved during the sweep."""

    method: str = "constrained"
    budget: int = SUBSET_BUDGET_DEFAULT
    gray_cap: int = GRAY_CAP_DEFAULT
    anneal_restarts: int = 10
    anneal_seed: int = 0
    anneal_t_initial: float | None = None
    anneal_t_final: float | None = None
    anneal_cooling: float | None = None
    anneal_sweeps: int | None = None

    def __post_init__(self):
        if self.method not in ("constrained", "gray", "anneal"):
            raise MalformedInputError(f"unknown solver method {self.method!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridSpec
    hyperparams_grid: HyperparamsGrid
    k_range: tuple[int, int]
    w_values: tuple[float, ...]
    random_trials: int
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: str | None = None
    jobs: int = 1

    def __post_init__(self):
        n = self.grid.n_points
        kmin, kmax = self.k_range
        if not (2 <= kmin <= kmax <= n - 1):
            raise MalformedInputError(
                f"K range [{kmin}, {kmax}] must lie within [2, {n - 1}] for {n} points"
            )
        for w in self.w_values:
            if not 0 < w <= 1:
                raise MalformedInputError(f"w values must lie in (0, 1], got {w}")
        if not self.w_values:
            raise MalformedInputError("w_values must be non-empty")
        if self.random_trials < 0:
            raise MalformedInputError("random_trials must be non-negative")
        if self.jobs < 1:
            raise MalformedInputError("jobs must be at least 1")
        self.hyperparams_grid.combos()  # validates the hyperparameters

    def k_values(self) -> range:
        return range(self.k_range[0], self.k_range[1] + 1)


def default_w_values() -> tuple[float, ...]:
    """The 19-step sweep 0.10, 0.15, ..., 1.00; w = 1 is the standard model."""
    return tuple(round(0.10 + 0.05 * i, 2) for i in range(19))


# The hyperparameter grid spans short/long correlation, low/high signal and
# low/high noise on unit-spaced lattices, which exercises both branches of
# the penalty bound and both the near and far edge-value regimes.
DEFAULT_LENGTH_SCALES = (0.8, 1.6)
DEFAULT_SIGMA_FS = (1.0, 2.0)
DEFAULT_SIGMA_NS = (0.1, 0.5)


def default_config(
    rows: int,
    cols: int,
    output: str | None = None,
    k_range: tuple[int, int] = (2, 7),
    random_trials: int = 100,
    jobs: int = 1,
) -> ExperimentConfig:
    return ExperimentConfig(
        grid=GridSpec(rows=rows, cols=cols, spacing=1.0),
        hyperparams_grid=HyperparamsGrid(
            length_scales=DEFAULT_LENGTH_SCALES,
            sigma_fs=DEFAULT_SIGMA_FS,
            sigma_ns=DEFAULT_SIGMA_NS,
        ),
        k_range=k_range,
        w_values=default_w_values(),
        random_trials=random_trials,
        solver=SolverConfig(),
        output=output,
        jobs=jobs,
    )


@dataclass(frozen=True)
class RunRecord:
    """One experiment row; `remaining_variance` is J of the chosen set."""

    grid: str
    n_points: int
    length_scale: float
    sigma_f: float
    sigma_n: float
    K: int
    method: str
    w: float | None
    seed: int | None
    remaining_variance: float
    selection: tuple[int, ...]
    wall_time_ms: float


def _sort_key(r: RunRecord):
    return (
        r.grid,
        r.n_points,
        r.length_scale,
        r.sigma_f,
        r.sigma_n,
        r.K,
        r.method,
        -1.0 if r.w is None else r.w,
        -1 if r.seed is None else r.seed,
    )


def _solve_qubo_cell(q, solver: SolverConfig) -> SolveReport:
    if solver.method == "constrained":
        return solve_exact_constrained(q, budget=solver.budget)
    if solver.method == "gray":
        return solve_exact_gray(q, cap=solver.gray_cap)
    sched = AnnealSchedule.default_for(q, restarts=solver.anneal_restarts)
    overrides = {}
    if solver.anneal_t_initial is not None:
        overrides["t_initial"] = solver.anneal_t_initial
    if solver.anneal_t_final is not None:
        overrides["t_final"] = solver.anneal_t_final
    if solver.anneal_cooling is not None:
        overrides["cooling"] = solver.anneal_cooling
    if solver.anneal_sweeps is not None:
        overrides["sweeps"] = solver.anneal_sweeps
    if overrides:
        sched = replace(sched, **overrides)
    return solve_anneal(q, schedule=sched, seed=solver.anneal_seed)


def run_experiment(config: ExperimentConfig) -> list[RunRecord]:
    """Execute the full protocol; returns records sorted by all key fields.

    Per (hyperparams, K) cell: one greedy run, `random_trials` seeded random
    selections, one QUBO build+solve per w, and the exhaustive oracle when
    its subset count fits the solver budget. Solver capacity errors are
    logged and the cell skipped; the sweep never aborts. Cells may run on a
    thread pool (`config.jobs`); the output is scheduling-independent.
    """
    domain = make_grid(config.grid.rows, config.grid.cols, config.grid.spacing)
    label = config.grid.label
    n = len(domain)
    combos = config.hyperparams_grid.combos()
    tables = {h: compute_tables(domain, h) for h in combos}

    def base(h: Hyperparams, K: int, **kw) -> RunRecord:
        return RunRecord(
            grid=label,
            n_points=n,
            length_scale=h.length_scale,
            sigma_f=h.sigma_f,
            sigma_n=h.sigma_n,
            K=K,
            **kw,
        )

    def greedy_cell(h: Hyperparams, K: int) -> list[RunRecord]:
        start = time.perf_counter()
        result = greedy_select(domain, h, K)
        elapsed = (time.perf_counter() - start) * 1e3
        return [
            base(
                h,
                K,
                method=METHOD_GREEDY,
                w=None,
                seed=None,
                remaining_variance=result.trajectory[-1],
                selection=result.selection.indices,
                wall_time_ms=elapsed,
            )
        ]

    def random_cell(h: Hyperparams, K: int) -> list[RunRecord]:
        out = []
        for seed in range(config.random_trials):
            start = time.perf_counter()
            sel = random_select(domain, K, seed)
            j_val = total_variance(sel, domain, h)
            elapsed = (time.perf_counter() - start) * 1e3
            out.append(
                base(
                    h,
                    K,
                    method=METHOD_RANDOM,
                    w=None,
                    seed=seed,
                    remaining_variance=j_val,
                    selection=sel.indices,
                    wall_time_ms=elapsed,
                )
            )
        return out

    def qubo_cell(h: Hyperparams, K: int, w: float) -> list[RunRecord]:
        gen = {
            "hyperparams": {
                "length_scale": h.length_scale,
                "sigma_f": h.sigma_f,
                "sigma_n": h.sigma_n,
            },
            "grid": {
                "rows": config.grid.rows,
                "cols": config.grid.cols,
                "spacing": config.grid.spacing,
            },
        }
        start = time.perf_counter()
        try:
            q = build_from_tables(tables[h], K, w, generator=gen)
            report = _solve_qubo_cell(q, config.solver)
        except CapacityError as exc:
            logger.warning("skipping qubo cell (h=%s, K=%d, w=%s): %s", h, K, w, exc)
            return []
        j_val = total_variance(report.best_selection, domain, h)
        elapsed = (time.perf_counter() - start) * 1e3
        return [
            base(
                h,
                K,
                method=METHOD_QUBO,
                w=w,
                seed=report.seed,
                remaining_variance=j_val,
                selection=report.best_selection.indices,
                wall_time_ms=elapsed,
            )
        ]

    def oracle_cell(h: Hyperparams, K: int) -> list[RunRecord]:
        if comb(n, K) > config.solver.budget:
            logger.info("oracle skipped for K=%d: C(%d,%d) over budget", K, n, K)
            return []
        start = time.perf_counter()
        sel = oracle_best_subset(domain, h, K, budget=config.solver.budget)
        j_val = total_variance(sel, domain, h)
        elapsed = (time.perf_counter() - start) * 1e3
        return [
            base(
                h,
                K,
                method=METHOD_ORACLE,
                w=None,
                seed=None,
                remaining_variance=j_val,
                selection=sel.indices,
                wall_time_ms=elapsed,
            )
        ]

    cells: list[Callable[[], list[RunRecord]]] = []
    for h in combos:
        for K in config.k_values():
            cells.append(lambda h=h, K=K: greedy_cell(h, K))
            cells.append(lambda h=h, K=K: random_cell(h, K))
            for w in config.w_values:
                cells.append(lambda h=h, K=K, w=w: qubo_cell(h, K, w))
            cells.append(lambda h=h, K=K: oracle_cell(h, K))

    if config.jobs == 1:
        chunks = [cell() for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            chunks = list(pool.map(lambda cell: cell(), cells))
    records = [rec for chunk in chunks for rec in chunk]
    records.sort(key=_sort_key)
    return records


@dataclass(frozen=True)
class SummaryRow:
    """One aggregate point: a curve value at one K (natural log included
    because the comparison plots use log scale)."""

    grid: str
    curve: str
    K: int
    mean_remaining_variance: float
    ln_mean_remaining_variance: float


def _mean(values: Sequence[float]) -> float:
    return float(sum(values) / len(values))


def aggregate(records: Iterable[RunRecord]) -> list[SummaryRow]:
    """Per (K, method[, w]) mean remaining variance, plus the best-w curve.

    Random is averaged over seeds within each hyperparameter combo first,
    then across combos; the best-w curve takes the minimum over w per
    (combo, K) before averaging across combos.
    """
    recs = list(records)
    if not recs:
        raise MalformedInputError("cannot aggregate an empty record list")
    rows: list[SummaryRow] = []
    grids = sorted({r.grid for r in recs})
    for grid in grids:
        grecs = [r for r in recs if r.grid == grid]
        combos = sorted({(r.length_scale, r.sigma_f, r.sigma_n) for r in grecs})
        ks = sorted({r.K for r in grecs})

        def combo_recs(combo, K, method):
            return [
                r
                for r in grecs
                if (r.length_scale, r.sigma_f, r.sigma_n) == combo
                and r.K == K
                and r.method == method
            ]

        for K in ks:
            for method in (METHOD_GREEDY, METHOD_ORACLE):
                vals = []
                for combo in combos:
                    cell = combo_recs(combo, K, method)
                    if cell:
                        vals.append(cell[0].remaining_variance)
                if vals:
                    m = _mean(vals)
                    rows.append(SummaryRow(grid, method, K, m, math.log(m)))
            rand_means = []
            for combo in combos:
                cell = combo_recs(combo, K, METHOD_RANDOM)
                if cell:
                    rand_means.append(_mean([r.remaining_variance for r in cell]))
            if rand_means:
                m = _mean(rand_means)
                rows.append(SummaryRow(grid, METHOD_RANDOM, K, m, math.log(m)))
            ws = sorted({r.w for r in grecs if r.method == METHOD_QUBO and r.K == K})
            for w in ws:
                vals = []
                for combo in combos:
                    cell = [r for r in combo_recs(combo, K, METHOD_QUBO) if r.w == w]
                    if cell:
                        vals.append(cell[0].remaining_variance)
                if vals:
                    m = _mean(vals)
                    rows.append(SummaryRow(grid, f"qubo_w={w:.2f}", K, m, math.log(m)))
            if ws:
                best_vals = []
                for combo in combos:
                    cell = combo_recs(combo, K, METHOD_QUBO)
                    if cell:
                        best_vals.append(min(r.remaining_variance for r in cell))
                if best_vals:
                    m = _mean(best_vals)
                    rows.append(SummaryRow(grid, "qubo_best_w", K, m, math.log(m)))
    rows.sort(key=lambda r: (r.grid, r.curve, r.K))
    return rows


def _fmt_float(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def _fmt_int(x: int | None) -> str:
    return "" if x is None else str(int(x))


def record_to_row(r: RunRecord) -> list[str]:
    return [
        r.grid,
        str(r.n_points),
        _fmt_float(r.length_scale),
        _fmt_float(r.sigma_f),
        _fmt_float(r.sigma_n),
        str(r.K),
        r.method,
        _fmt_float(r.w),
        _fmt_int(r.seed),
        _fmt_float(r.remaining_variance),
        ";".join(str(i) for i in r.selection),
        _fmt_float(r.wall_time_ms),
    ]


def record_from_row(row: Sequence[str]) -> RunRecord:
    if len(row) != 12:
        raise MalformedInputError(f"CSV row has {len(row)} fields, expected 12")
    try:
        return RunRecord(
            grid=row[0],
            n_points=int(row[1]),
            length_scale=float(row[2]),
            sigma_f=float(row[3]),
            sigma_n=float(row[4]),
            K=int(row[5]),
            method=row[6],
            w=float(row[7]) if row[7] else None,
            seed=int(row[8]) if row[8] else None,
            remaining_variance=float(row[9]),
            selection=tuple(int(t) for t in row[10].split(";")) if row[10] else (),
            wall_time_ms=float(row[11]),
        )
    except ValueError as exc:
        raise MalformedInputError(f"unparseable CSV row {row!r}: {exc}") from exc


def records_to_csv_text(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for r in records:
        writer.writerow(record_to_row(r))
    return buf.getvalue()


def write_records_csv(records: Iterable[RunRecord], path) -> None:
    Path(path).write_text(records_to_csv_text(records), encoding="utf-8")


def read_records_csv(path) -> list[RunRecord]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER.split(","):
            raise MalformedInputError(f"unexpected CSV header: {header}")
        return [record_from_row(row) for row in reader]


def summary_to_tsv_text(rows: Iterable[SummaryRow]) -> str:
    lines = ["grid\tcurve\tK\tmean_remaining_variance\tln_mean_remaining_variance"]
    for r in rows:
        lines.append(
            f"{r.grid}\t{r.curve}\t{r.K}\t"
            f"{_fmt_float(r.mean_remaining_variance)}\t{_fmt_float(r.ln_mean_remaining_variance)}"
        )
    return "\n".join(lines) + "\n"


def write_summary_tsv(rows: Iterable[SummaryRow], path) -> None:
    Path(path).write_text(summary_to_tsv_text(rows), encoding="utf-8")


def verify_records(records: Iterable[RunRecord], tol: float = 1e-9) -> list[str]:
    """Recompute J from each record's selection; returns a list of problems.

    Empty result means every record is internally consistent at the given
    tolerance (absolute or relative, whichever is looser).
    """
    problems = []
    domains: dict[str, Domain] = {}
    for i, r in enumerate(records):
        try:
            if r.grid not in domains:
                rows, cols, spacing = parse_grid_label(r.grid)
                domains[r.grid] = make_grid(rows, cols, spacing)
            domain = domains[r.grid]
            if len(domain) != r.n_points:
                problems.append(f"record {i}: n_points {r.n_points} != grid size {len(domain)}")
                continue
            h = Hyperparams(r.length_scale, r.sigma_f, r.sigma_n)
            j_val = total_variance(Selection(r.selection), domain, h)
            err = abs(j_val - r.remaining_variance)
            if err > tol * max(1.0, abs(j_val)):
                problems.append(
                    f"record {i}: remaining_variance {r.remaining_variance!r} "
                    f"!= recomputed {j_val!r}"
                )
        except MalformedInputError as exc:
            problems.append(f"record {i}: {exc}")
    return problems


def config_to_dict(config: ExperimentConfig) -> dict[str, Any]:
    return {
        "grid": {
            "rows": config.grid.rows,
            "cols": config.grid.cols,
            "spacing": config.grid.spacing,
        },
        "hyperparams_grid": {
            "length_scales": list(config.hyperparams_grid.length_scales),
            "sigma_fs": list(config.hyperparams_grid.sigma_fs),
            "sigma_ns": list(config.hyperparams_grid.sigma_ns),
        },
        "K_range": list(config.k_range),
        "w_values": list(config.w_values),
        "random_trials": config.random_trials,
        "solver": {
            "method": config.solver.method,
            "budget": config.solver.budget,
            "gray_cap": config.solver.gray_cap,
            "anneal": {
                "restarts": config.solver.anneal_restarts,
                "seed": config.solver.anneal_seed,
                "t_initial": config.solver.anneal_t_initial,
                "t_final": config.solver.anneal_t_final,
                "cooling": config.solver.anneal_cooling,
                "sweeps": config.solver.anneal_sweeps,
            },
        },
        "output": config.output,
        "jobs": config.jobs,
    }


def config_from_dict(d: dict[str, Any]) -> ExperimentConfig:
    known = {
        "grid",
        "hyperparams_grid",
        "K_range",
        "w_values",
        "random_trials",
        "solver",
        "output",
        "jobs",
    }
    extra = set(d) - known
    if extra:
        raise MalformedInputError(f"unknown config keys: {sorted(extra)}")
    try:
        grid = GridSpec(
            rows=int(d["grid"]["rows"]),
            cols=int(d["grid"]["cols"]),
            spacing=float(d["grid"].get("spacing", 1.0)),
        )
        hg = d["hyperparams_grid"]
        hgrid = HyperparamsGrid(
            length_scales=tuple(float(v) for v in hg["length_scales"]),
            sigma_fs=tuple(float(v) for v in hg["sigma_fs"]),
            sigma_ns=tuple(float(v) for v in hg["sigma_ns"]),
        )
        solver = SolverConfig()
        if "solver" in d:
            s = d["solver"]
            anneal = s.get("anneal", {})
            solver = SolverConfig(
                method=s.get("method", "constrained"),
                budget=int(s.get("budget", SUBSET_BUDGET_DEFAULT)),
                gray_cap=int(s.get("gray_cap", GRAY_CAP_DEFAULT)),
                anneal_restarts=int(anneal.get("restarts", 10)),
                anneal_seed=int(anneal.get("seed", 0)),
                anneal_t_initial=anneal.get("t_initial"),
                anneal_t_final=anneal.get("t_final"),
                anneal_cooling=anneal.get("cooling"),
                anneal_sweeps=anneal.get("sweeps"),
            )
        return ExperimentConfig(
            grid=grid,
            hyperparams_grid=hgrid,
            k_range=(int(d["K_range"][0]), int(d["K_range"][1])),
            w_values=tuple(float(v) for v in d["w_values"]),
            random_trials=int(d["random_trials"]),
            solver=solver,
            output=d.get("output"),
            jobs=int(d.get("jobs", 1)),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise MalformedInputError(f"malformed experiment config: {exc}") from exc


def run_and_write(config: ExperimentConfig, output_dir) -> dict[str, Path]:
    """Run the experiment and emit records.csv, summary.tsv and metadata.json."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    records = run_experiment(config)
    elapsed = time.perf_counter() - start
    summary = aggregate(records)
    paths = {
        "records": out / "records.csv",
        "summary": out / "summary.tsv",
        "metadata": out / "metadata.json",
    }
    write_records_csv(records, paths["records"])
    write_summary_tsv(summary, paths["summary"])
    from . import __version__
    from .backend import backend_name

    meta = {
        "config": config_to_dict(config),
        "record_count": len(records),
        "backend": backend_name(),
        "package_version": __version__,
        "total_wall_time_s": elapsed,
    }
    paths["metadata"].write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return paths
