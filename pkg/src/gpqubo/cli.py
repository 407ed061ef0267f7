"""Command-line interface.

Subcommands: grid, build-qubo, solve, greedy, random, oracle, experiment,
verify. Results go to stdout (or --output); failures exit nonzero with a
one-line machine-readable JSON object on stderr:

    {"error": "<kind>", "message": "<detail>"}

where kind is one of malformed_input, numerical_degeneracy, capacity, io,
usage, internal.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .backend import backend_name
from .baselines import greedy_select, random_select
from .errors import CapacityError, GpquboError, MalformedInputError, NumericalDegeneracyError
from .gp import Domain, Hyperparams, Selection, total_variance
from .harness import (
    config_from_dict,
    default_config,
    make_grid,
    read_records_csv,
    run_and_write,
    verify_records,
)
from .model import build, load_instance, save_instance
from .solve import (
    GRAY_CAP_DEFAULT,
    SUBSET_BUDGET_DEFAULT,
    AnnealSchedule,
    oracle_best_subset,
    report_to_dict,
    solve_anneal,
    solve_exact_constrained,
    solve_exact_gray,
)


def _emit(payload: dict, output: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def _domain_to_dict(domain: Domain) -> dict:
    d = {"points": [list(p) for p in domain.points]}
    if domain.grid is not None:
        d["grid"] = {
            "rows": domain.grid[0],
            "cols": domain.grid[1],
            "spacing": 1.0 if domain.spacing is None else domain.spacing,
        }
    return d


def _domain_from_file(path: str) -> Domain:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        grid = doc.get("grid")
        return Domain(
            points=doc["points"],
            grid=(grid["rows"], grid["cols"]) if grid else None,
            spacing=grid.get("spacing") if grid else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInputError(f"malformed domain file {path}: {exc}") from exc


_grid_options = [
    click.option("--rows", type=int, required=True, help="Lattice rows."),
    click.option("--cols", type=int, required=True, help="Lattice columns."),
    click.option("--spacing", type=float, default=1.0, show_default=True),
]

_hyper_options = [
    click.option("--length-scale", type=float, required=True, help="Kernel length scale."),
    click.option("--sigma-f", type=float, required=True, help="Signal standard deviation."),
    click.option("--sigma-n", type=float, required=True, help="Noise standard deviation."),
]


def _add_options(opts):
    def wrap(fn):
        for opt in reversed(opts):
            fn = opt(fn)
        return fn

    return wrap


def _resolve_domain(domain_file, rows, cols, spacing) -> Domain:
    if domain_file:
        return _domain_from_file(domain_file)
    if rows is None or cols is None:
        raise MalformedInputError("provide either --domain or both --rows and --cols")
    return make_grid(rows, cols, spacing)


@click.group()
@click.version_option(version=__version__, message="%(prog)s %(version)s (backend: " + backend_name() + ")")
def cli():
    """Sampling-location optimization for GP variance via QUBO."""


@cli.command("grid")
@_add_options(_grid_options)
@click.option("--output", "-o", type=click.Path(), default=None, help="Write JSON here.")
def grid_cmd(rows, cols, spacing, output):
    """Emit a lattice domain as JSON."""
    _emit(_domain_to_dict(make_grid(rows, cols, spacing)), output)


@cli.command("build-qubo")
@click.option("--domain", "domain_file", type=click.Path(exists=True), default=None,
              help="Domain JSON from the grid subcommand.")
@click.option("--rows", type=int, default=None)
@click.option("--cols", type=int, default=None)
@click.option("--spacing", type=float, default=1.0, show_default=True)
@_add_options(_hyper_options)
@click.option("--k", "k_value", type=int, required=True, help="Target cardinality K.")
@click.option("--w", "w_value", type=float, default=1.0, show_default=True,
              help="Edge weight in (0, 1]; 1 is the standard model.")
@click.option("--output", "-o", type=click.Path(), required=True, help="Instance JSON path.")
def build_qubo_cmd(domain_file, rows, cols, spacing, length_scale, sigma_f, sigma_n,
                   k_value, w_value, output):
    """Compile a domain + hyperparameters into a QUBO instance JSON."""
    domain = _resolve_domain(domain_file, rows, cols, spacing)
    h = Hyperparams(length_scale, sigma_f, sigma_n)
    save_instance(build(domain, h, k_value, w_value), output)
    click.echo(f"wrote {output}")


@cli.command("solve")
@click.argument("instance", type=click.Path(exists=True))
@click.option("--method", type=click.Choice(["gray", "constrained", "anneal"]),
              default="constrained", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Annealing seed.")
@click.option("--budget", type=int, default=SUBSET_BUDGET_DEFAULT, show_default=True,
              help="Subset budget for the constrained solver.")
@click.option("--gray-cap", type=int, default=GRAY_CAP_DEFAULT, show_default=True)
@click.option("--restarts", type=int, default=10, show_default=True)
@click.option("--sweeps", type=int, default=None, help="Override annealing sweep count.")
@click.option("--output", "-o", type=click.Path(), default=None)
def solve_cmd(instance, method, seed, budget, gray_cap, restarts, sweeps, output):
    """Minimize a QUBO instance JSON; emits a solve report JSON."""
    q = load_instance(instance)
    if method == "gray":
        report = solve_exact_gray(q, cap=gray_cap)
    elif method == "constrained":
        report = solve_exact_constrained(q, budget=budget)
    else:
        sched = AnnealSchedule.default_for(q, restarts=restarts)
        if sweeps is not None:
            from dataclasses import replace

            sched = replace(sched, sweeps=sweeps)
        report = solve_anneal(q, schedule=sched, seed=seed)
    _emit(report_to_dict(report), output)


@cli.command("greedy")
@click.option("--domain", "domain_file", type=click.Path(exists=True), default=None)
@click.option("--rows", type=int, default=None)
@click.option("--cols", type=int, default=None)
@click.option("--spacing", type=float, default=1.0)
@_add_options(_hyper_options)
@click.option("--k", "k_value", type=int, required=True)
@click.option("--output", "-o", type=click.Path(), default=None)
def greedy_cmd(domain_file, rows, cols, spacing, length_scale, sigma_f, sigma_n, k_value, output):
    """Submodular greedy forward selection."""
    domain = _resolve_domain(domain_file, rows, cols, spacing)
    h = Hyperparams(length_scale, sigma_f, sigma_n)
    result = greedy_select(domain, h, k_value)
    _emit(
        {
            "selection": list(result.selection.indices),
            "remaining_variance": result.trajectory[-1],
            "trajectory": list(result.trajectory),
        },
        output,
    )


@cli.command("random")
@click.option("--domain", "domain_file", type=click.Path(exists=True), default=None)
@click.option("--rows", type=int, default=None)
@click.option("--cols", type=int, default=None)
@click.option("--spacing", type=float, default=1.0)
@click.option("--k", "k_value", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--length-scale", type=float, default=None,
              help="Optional: also report J for these hyperparameters.")
@click.option("--sigma-f", type=float, default=None)
@click.option("--sigma-n", type=float, default=None)
@click.option("--output", "-o", type=click.Path(), default=None)
def random_cmd(domain_file, rows, cols, spacing, k_value, seed, length_scale, sigma_f, sigma_n, output):
    """Uniform random selection (deterministic per seed)."""
    domain = _resolve_domain(domain_file, rows, cols, spacing)
    sel = random_select(domain, k_value, seed)
    payload = {"selection": list(sel.indices), "seed": seed}
    if length_scale is not None and sigma_f is not None and sigma_n is not None:
        h = Hyperparams(length_scale, sigma_f, sigma_n)
        payload["remaining_variance"] = total_variance(sel, domain, h)
    _emit(payload, output)


@cli.command("oracle")
@click.option("--domain", "domain_file", type=click.Path(exists=True), default=None)
@click.option("--rows", type=int, default=None)
@click.option("--cols", type=int, default=None)
@click.option("--spacing", type=float, default=1.0)
@_add_options(_hyper_options)
@click.option("--k", "k_value", type=int, required=True)
@click.option("--budget", type=int, default=SUBSET_BUDGET_DEFAULT, show_default=True)
@click.option("--output", "-o", type=click.Path(), default=None)
def oracle_cmd(domain_file, rows, cols, spacing, length_scale, sigma_f, sigma_n, k_value, budget, output):
    """Exhaustive minimizer of the true objective over cardinality-K subsets."""
    domain = _resolve_domain(domain_file, rows, cols, spacing)
    h = Hyperparams(length_scale, sigma_f, sigma_n)
    sel = oracle_best_subset(domain, h, k_value, budget=budget)
    _emit(
        {
            "selection": list(sel.indices),
            "remaining_variance": total_variance(sel, domain, h),
        },
        output,
    )


@cli.command("experiment")
@click.option("--config", "config_file", type=click.Path(exists=True), default=None,
              help="ExperimentConfig JSON; omit to use the default protocol.")
@click.option("--rows", type=int, default=5, show_default=True,
              help="Grid rows for the default protocol (ignored with --config).")
@click.option("--cols", type=int, default=5, show_default=True)
@click.option("--jobs", type=int, default=None, help="Worker threads (overrides config).")
@click.option("--output", "-o", type=click.Path(), default=None,
              help="Output directory (overrides config).")
def experiment_cmd(config_file, rows, cols, jobs, output):
    """Run the full sweep; writes records.csv, summary.tsv, metadata.json."""
    from dataclasses import replace

    if config_file:
        doc = json.loads(Path(config_file).read_text(encoding="utf-8"))
        config = config_from_dict(doc)
    else:
        config = default_config(rows, cols)
    if jobs is not None:
        config = replace(config, jobs=jobs)
    out_dir = output or config.output
    if not out_dir:
        raise MalformedInputError("no output directory: pass --output or set it in the config")
    paths = run_and_write(config, out_dir)
    for name, p in paths.items():
        click.echo(f"{name}: {p}")


@cli.command("verify")
@click.argument("records_csv", type=click.Path(exists=True))
@click.option("--tol", type=float, default=1e-9, show_default=True)
def verify_cmd(records_csv, tol):
    """Re-check record consistency of an emitted CSV."""
    records = read_records_csv(records_csv)
    problems = verify_records(records, tol=tol)
    if problems:
        raise MalformedInputError(
            f"{len(problems)} of {len(records)} records inconsistent: " + "; ".join(problems[:5])
        )
    click.echo(f"ok: {len(records)} records consistent at tol {tol}")


_ERROR_KINDS = (
    (MalformedInputError, "malformed_input"),
    (NumericalDegeneracyError, "numerical_degeneracy"),
    (CapacityError, "capacity"),
    (GpquboError, "internal"),
    (OSError, "io"),
)


def _error_kind(exc: BaseException) -> str:
    for cls, kind in _ERROR_KINDS:
        if isinstance(exc, cls):
            return kind
    return "internal"


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        return 130
    except click.UsageError as exc:
        print(json.dumps({"error": "usage", "message": str(exc)}), file=sys.stderr)
        return 2
    except (GpquboError, OSError) as exc:
        print(json.dumps({"error": _error_kind(exc), "message": str(exc)}), file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - last-resort contract
        print(json.dumps({"error": "internal", "message": f"{type(exc).__name__}: {exc}"}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
