"""Compilation of the variance-minimization problem into a QUBO instance.

The instance is a complete weighted graph over the |X| candidate locations.
Each node i carries the (negative) single-point variance reduction

    alpha_i = J({x_i}) - J(empty)

and each edge (i, j) carries the (positive) pairwise redundancy

    beta_ij = w * (J({x_i, x_j}) - J({x_i}) - J({x_j}) + J(empty)),

with w in (0, 1] shrinking edges to compensate for higher-order variance
interactions the pairwise model cannot represent. A uniform cardinality
penalty is then added so that minimizers select exactly K variables:

    a_i = alpha_i - B*K + B/2        (node values)
    b_ij = beta_ij + B               (edge values)

The penalty scale B must strictly exceed max(2*|min alpha|, 2*K*max beta);
`penalty_bound` applies a 1.01 multiplicative margin to the bound core so
the strict inequality holds by a documented, deterministic amount. Over the
feasible set (exactly K ones) the penalty contributes the constant -B*K^2/2,
leaving the alpha/beta terms to discriminate between feasible selections.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import MalformedInputError
from .gp import Domain, Hyperparams, Selection, kernel_matrix

__all__ = [
    "QuboInstance",
    "VarianceTables",
    "alpha",
    "beta",
    "compute_tables",
    "penalty_bound",
    "build",
    "build_from_tables",
    "evaluate",
    "constraint_energy",
    "constraint_only_instance",
    "validate_instance",
    "instance_to_dict",
    "instance_from_dict",
    "save_instance",
    "load_instance",
]

PENALTY_MARGIN = 1.01


@dataclass(frozen=True, eq=False)
class QuboInstance:
    """A compiled QUBO over n binary variables.

    `linear` holds the node values a_i; `quadratic` is a dense (n, n) array
    with b_ij in the strict upper triangle and zeros elsewhere (the graph is
    complete, so no sparsity machinery). `alpha`/`beta` retain the raw node
    and (weighted) edge values for diagnostics and bound audits; they are
    None for instances loaded from JSON or built by the constraint-only
    test hook.
    """

    n: int
    linear: np.ndarray
    quadratic: np.ndarray
    K: int
    B: float
    w: float
    alpha: np.ndarray | None = None
    beta: np.ndarray | None = None
    generator: dict[str, Any] | None = None

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=np.float64).copy()
        quad = np.asarray(self.quadratic, dtype=np.float64).copy()
        if lin.shape != (self.n,):
            raise MalformedInputError(f"linear must have shape ({self.n},), got {lin.shape}")
        if quad.shape != (self.n, self.n):
            raise MalformedInputError(f"quadratic must have shape ({self.n}, {self.n})")
        if np.any(np.tril(quad) != 0.0):
            raise MalformedInputError("quadratic must be strictly upper-triangular")
        lin.flags.writeable = False
        quad.flags.writeable = False
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", quad)
        for name in ("alpha", "beta"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=np.float64).copy()
                arr.flags.writeable = False
                object.__setattr__(self, name, arr)

    def dense_symmetric(self) -> np.ndarray:
        """b_ij mirrored onto both triangles; used by solver kernels."""
        return self.quadratic + self.quadratic.T

    def pair(self, i: int, j: int) -> float:
        if i == j:
            raise MalformedInputError("no diagonal terms in a QUBO quadratic")
        lo, hi = (i, j) if i < j else (j, i)
        return float(self.quadratic[lo, hi])


@dataclass(frozen=True)
class VarianceTables:
    """Raw alpha/beta values for one (domain, hyperparams) pair.

    `beta_base` holds the unweighted edge values in the strict upper
    triangle; instances for any (K, w) assemble from one table, which is
    how the experiment harness shares GP work across its sweep.
    """

    alpha: np.ndarray
    beta_base: np.ndarray
    j_empty: float

    @property
    def n(self) -> int:
        return self.alpha.shape[0]


def _check_w(w: float) -> None:
    if not (0.0 < w <= 1.0):
        raise MalformedInputError(f"w must lie in (0, 1], got {w}")


def compute_tables(domain: Domain, h: Hyperparams) -> VarianceTables:
    """All alpha_i and unweighted beta_ij for one hyperparameter combo.

    alpha_i equals J({x_i}) - J(empty) and beta_ij equals
    J({x_i,x_j}) - J({x_i}) - J({x_j}) + J(empty), but both are computed
    through the algebraically equivalent one- and two-sample posterior
    closed forms

        alpha_i = -sum_x k(x, x_i)^2 / d,          d = sigma_f^2 + sigma_n^2
        beta_ij = k_ij / (d^2 - k_ij^2)
                  * sum_x [2 c_i(x) c_j(x) - (k_ij / d)(c_i(x)^2 + c_j(x)^2)]

    rather than as differences of J values. The difference form cancels
    catastrophically for weakly coupled pairs (true beta can sit many
    orders of magnitude below the rounding noise of J ~ n sigma_f^2,
    flipping its sign), while the product form preserves the sign and
    relative accuracy down to the underflow limit. Tests cross-check both
    forms where the difference form is numerically meaningful.
    """
    kf = kernel_matrix(domain.points, domain.points, h)
    d = h.sigma_f**2 + h.sigma_n**2
    k2 = kf @ kf
    s = np.diag(k2).copy()
    avec = -s / d
    n = len(domain)
    bmat = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    if iu[0].size:
        kf_u = kf[iu]
        bracket = 2.0 * k2[iu] - (kf_u / d) * (s[iu[0]] + s[iu[1]])
        bmat[iu] = (kf_u / (d * d - kf_u**2)) * bracket
    return VarianceTables(alpha=avec, beta_base=bmat, j_empty=n * h.sigma_f**2)


def alpha(i: int, domain: Domain, h: Hyperparams) -> float:
    """Node value J({x_i}) - J(empty); strictly negative."""
    n = len(domain)
    if not 0 <= i < n:
        raise MalformedInputError(f"index {i} out of range for domain of size {n}")
    return float(compute_tables(domain, h).alpha[i])


def beta(i: int, j: int, w: float, domain: Domain, h: Hyperparams) -> float:
    """Weighted edge value w*(J({x_i,x_j}) - J({x_i}) - J({x_j}) + J(empty)).

    Strictly positive for any distinct pair and w > 0, and symmetric in
    (i, j). Linear in w, so halving w exactly halves the value.
    """
    if i == j:
        raise MalformedInputError("beta requires two distinct indices")
    n = len(domain)
    if not (0 <= i < n and 0 <= j < n):
        raise MalformedInputError(f"pair ({i}, {j}) out of range for domain of size {n}")
    _check_w(w)
    lo, hi = (i, j) if i < j else (j, i)
    return w * float(compute_tables(domain, h).beta_base[lo, hi])


def penalty_bound(alphas, betas, K: int, margin: float = PENALTY_MARGIN) -> float:
    """Feasible penalty scale B = margin * max(2*|min alpha|, 2*K*max beta).

    The bound core is the proved strict lower bound on B; the margin keeps
    the returned value strictly above it. `betas` must be the values
    actually placed on the edges (weighted, if a w variant is in use).
    """
    avec = np.asarray(list(alphas), dtype=np.float64).ravel()
    bvec = np.asarray(list(betas), dtype=np.float64).ravel()
    if avec.size == 0 or bvec.size == 0:
        raise MalformedInputError("penalty_bound requires non-empty alpha and beta collections")
    if not np.all(avec < 0):
        raise MalformedInputError("all alpha values must be negative")
    if not np.all(bvec > 0):
        raise MalformedInputError("all beta values must be positive")
    if not 1 <= K < avec.size:
        raise MalformedInputError(f"need 1 <= K < n = {avec.size}, got K = {K}")
    core = max(2.0 * abs(avec.min()), 2.0 * K * bvec.max())
    return margin * core


def build_from_tables(
    tables: VarianceTables,
    K: int,
    w: float,
    generator: dict[str, Any] | None = None,
) -> QuboInstance:
    """Assemble the complete instance for one (K, w) from precomputed tables."""
    n = tables.n
    if not 2 <= K <= n - 1:
        raise MalformedInputError(f"need 2 <= K <= n-1 = {n - 1}, got K = {K}")
    _check_w(w)
    iu = np.triu_indices(n, k=1)
    beta_w = np.zeros((n, n))
    beta_w[iu] = w * tables.beta_base[iu]
    B = penalty_bound(tables.alpha, beta_w[iu], K)
    lin = tables.alpha - B * K + B / 2
    quad = np.zeros((n, n))
    quad[iu] = beta_w[iu] + B
    inst = QuboInstance(
        n=n,
        linear=lin,
        quadratic=quad,
        K=K,
        B=B,
        w=w,
        alpha=tables.alpha,
        beta=beta_w,
        generator=generator,
    )
    validate_instance(inst)
    return inst


def build(domain: Domain, h: Hyperparams, K: int, w: float = 1.0) -> QuboInstance:
    """Compile (domain, hyperparams, K, w) into the complete QUBO instance."""
    gen: dict[str, Any] = {
        "hyperparams": {
            "length_scale": h.length_scale,
            "sigma_f": h.sigma_f,
            "sigma_n": h.sigma_n,
        }
    }
    if domain.grid is not None:
        gen["grid"] = {
            "rows": domain.grid[0],
            "cols": domain.grid[1],
            "spacing": 1.0 if domain.spacing is None else domain.spacing,
        }
    return build_from_tables(compute_tables(domain, h), K, w, generator=gen)


def validate_instance(q: QuboInstance) -> None:
    """Check the compiled-instance invariants; raises on violation.

    Requires the raw alpha/beta diagnostics, so it applies to instances
    produced by `build` (not to JSON-loaded or constraint-only ones).
    """
    if q.alpha is None or q.beta is None:
        raise MalformedInputError("validate_instance needs the raw alpha/beta diagnostics")
    iu = np.triu_indices(q.n, k=1)
    if not np.all(q.alpha < 0):
        raise MalformedInputError("instance invariant violated: some alpha >= 0")
    if not np.all(q.beta[iu] > 0):
        raise MalformedInputError("instance invariant violated: some beta <= 0")
    if not np.array_equal(q.linear, q.alpha - q.B * q.K + q.B / 2):
        raise MalformedInputError("instance invariant violated: a != alpha - B*K + B/2")
    expected = np.zeros((q.n, q.n))
    expected[iu] = q.beta[iu] + q.B
    if not np.array_equal(q.quadratic, expected):
        raise MalformedInputError("instance invariant violated: b != beta + B")
    core = max(2.0 * abs(q.alpha.min()), 2.0 * q.K * q.beta[iu].max())
    if not q.B > core:
        raise MalformedInputError(f"instance invariant violated: B = {q.B} <= bound core {core}")


def evaluate(q: QuboInstance, s: Selection) -> float:
    """QUBO objective: sum of selected node values plus selected edge values."""
    if s.indices and s.indices[-1] >= q.n:
        raise MalformedInputError(
            f"selection index {s.indices[-1]} out of range for instance with n = {q.n}"
        )
    if not s.indices:
        return 0.0
    idx = np.fromiter(s.indices, dtype=np.intp)
    return float(q.linear[idx].sum() + q.quadratic[np.ix_(idx, idx)].sum())


def constraint_energy(n_selected: int, K: int, B: float) -> float:
    """Penalty-only objective B*n^2/2 - B*K*n at a given selection count.

    Over integers its minimum sits at n = K with value -B*K^2/2, and the
    excess at n = K +/- l is exactly B*l^2/2.
    """
    if n_selected < 0:
        raise MalformedInputError("n_selected must be non-negative")
    return B * n_selected**2 / 2.0 - B * K * n_selected


def constraint_only_instance(n: int, K: int, B: float) -> QuboInstance:
    """Test hook: the pure cardinality penalty with alpha and beta zeroed.

    Every node carries -B*K + B/2 and every edge carries B, so the minimum
    over assignments sits exactly at cardinality K with value -B*K^2/2.
    """
    if n < 2:
        raise MalformedInputError("constraint graph needs n >= 2")
    if not B > 0:
        raise MalformedInputError("B must be positive")
    lin = np.full(n, -B * K + B / 2)
    quad = np.zeros((n, n))
    quad[np.triu_indices(n, k=1)] = B
    return QuboInstance(n=n, linear=lin, quadratic=quad, K=K, B=B, w=1.0)


def instance_to_dict(q: QuboInstance) -> dict[str, Any]:
    """JSON-ready form: n, K, B, w, linear, quadratic triples, generator."""
    iu = np.triu_indices(q.n, k=1)
    quads = [[int(i), int(j), float(q.quadratic[i, j])] for i, j in zip(*iu)]
    return {
        "n": q.n,
        "K": q.K,
        "B": q.B,
        "w": q.w,
        "linear": [float(v) for v in q.linear],
        "quadratic": quads,
        "generator": q.generator,
    }


def instance_from_dict(d: dict[str, Any]) -> QuboInstance:
    try:
        n = int(d["n"])
        quad = np.zeros((n, n))
        for i, j, v in d["quadratic"]:
            if not 0 <= i < j < n:
                raise MalformedInputError(f"quadratic entry ({i}, {j}) is not upper-triangular")
            quad[i, j] = v
        return QuboInstance(
            n=n,
            linear=np.asarray(d["linear"], dtype=np.float64),
            quadratic=quad,
            K=int(d["K"]),
            B=float(d["B"]),
            w=float(d["w"]),
            generator=d.get("generator"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MalformedInputError):
            raise
        raise MalformedInputError(f"malformed QUBO instance document: {exc}") from exc


def save_instance(q: QuboInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(q), fh, indent=2)
        fh.write("\n")


def load_instance(path) -> QuboInstance:
    with open(path, "r", encoding="utf-8") as fh:
        return instance_from_dict(json.load(fh))
