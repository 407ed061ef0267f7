"""Exact Gaussian-process posterior-variance computations on a finite domain.

The selection objective used throughout the package is the total remaining
variance

    J(S) = sum over x in X of  sigma^2(x | S),

where sigma^2(x | S) is the posterior variance of a zero-mean GP with the
squared-exponential kernel after conditioning on noisy observations at the
locations indexed by S. Posterior variance depends only on the sampled
locations, never on the observed values, which is what makes J a pure
set function of S.

Every operation here is a pure function of its arguments; the data types
are immutable and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.spatial.distance import cdist

from .errors import MalformedInputError, NumericalDegeneracyError

__all__ = [
    "Hyperparams",
    "Domain",
    "Selection",
    "kernel_eval",
    "kernel_matrix",
    "posterior_variance",
    "posterior_mean",
    "variance_profile",
    "total_variance",
    "total_variance_many",
    "variance_reduction",
]

# Diagonal jitter ladder: first attempt is unmodified, then escalate.
# Needed only when sigma_n = 0 and sample locations nearly coincide.
_JITTERS = (0.0, 1e-10, 1e-8, 1e-6)


@dataclass(frozen=True)
class Hyperparams:
    """Squared-exponential kernel parameters.

    length_scale: horizontal scale of correlation decay (same units as the
        domain coordinates), > 0.
    sigma_f: signal standard deviation, > 0.
    sigma_n: observation-noise standard deviation, >= 0.
    """

    length_scale: float
    sigma_f: float
    sigma_n: float

    def __post_init__(self):
        if not (self.length_scale > 0):
            raise MalformedInputError(f"length_scale must be > 0, got {self.length_scale}")
        if not (self.sigma_f > 0):
            raise MalformedInputError(f"sigma_f must be > 0, got {self.sigma_f}")
        if not (self.sigma_n >= 0):
            raise MalformedInputError(f"sigma_n must be >= 0, got {self.sigma_n}")


@dataclass(frozen=True, eq=False)
class Domain:
    """Ordered finite set of candidate sampling points in R^d.

    The point order is fixed at construction and defines the index space
    used by selections, QUBO variables and experiment records. `grid` and
    `spacing` are optional provenance set by `harness.make_grid`.
    """

    points: np.ndarray
    grid: tuple[int, int] | None = field(default=None)
    spacing: float | None = field(default=None)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise MalformedInputError("domain points must form a non-empty 2-D array (m, d)")
        if len({tuple(row) for row in pts}) != pts.shape[0]:
            raise MalformedInputError("domain points must be distinct")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class Selection:
    """A subset of domain indices, canonicalized to a sorted tuple.

    Construction deduplicates, so duplicate indices are structurally
    impossible; equality and ordering are those of the sorted tuple.
    """

    indices: tuple[int, ...] = ()

    def __post_init__(self):
        canon = tuple(sorted({int(i) for i in self.indices}))
        if canon and canon[0] < 0:
            raise MalformedInputError(f"negative domain index in selection: {canon[0]}")
        object.__setattr__(self, "indices", canon)

    @classmethod
    def of(cls, indices: Iterable[int]) -> "Selection":
        return cls(tuple(indices))

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i: int) -> bool:
        return i in self.indices


def _check_indices(samples: Selection, domain: Domain) -> None:
    if samples.indices and samples.indices[-1] >= len(domain):
        raise MalformedInputError(
            f"selection index {samples.indices[-1]} out of range for domain of size {len(domain)}"
        )


def kernel_eval(a: Sequence[float], b: Sequence[float], h: Hyperparams) -> float:
    """Squared-exponential kernel sigma_f^2 * exp(-|a-b|^2 / (2 l^2))."""
    av = np.asarray(a, dtype=np.float64).ravel()
    bv = np.asarray(b, dtype=np.float64).ravel()
    if av.shape != bv.shape:
        raise MalformedInputError(f"coordinate dimensions differ: {av.shape[0]} vs {bv.shape[0]}")
    d2 = float(np.dot(av - bv, av - bv))
    return h.sigma_f**2 * float(np.exp(-d2 / (2.0 * h.length_scale**2)))


def kernel_matrix(a: np.ndarray, b: np.ndarray, h: Hyperparams) -> np.ndarray:
    """Kernel evaluated on the cross product of two point arrays."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    d2 = cdist(a, b, metric="sqeuclidean")
    return h.sigma_f**2 * np.exp(-d2 / (2.0 * h.length_scale**2))


def _cholesky_with_jitter(mat: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, retrying with the jitter ladder on failure.

    Accepts a stack (..., k, k); the jitter escalation applies to the whole
    stack so results do not depend on batch composition order.
    """
    k = mat.shape[-1]
    eye = np.eye(k)
    for jit in _JITTERS:
        try:
            return np.linalg.cholesky(mat + jit * eye if jit else mat)
        except np.linalg.LinAlgError:
            continue
    raise NumericalDegeneracyError(
        f"covariance factorization failed after jitter ladder {_JITTERS[1:]}"
    )


def variance_profile(
    samples: Selection, domain: Domain, h: Hyperparams, query: np.ndarray | None = None
) -> np.ndarray:
    """Posterior variance at each query point (default: every domain point).

    sigma^2(x) = k(x, x) - k_*^T (K + sigma_n^2 I)^{-1} k_* computed through
    a Cholesky factorization of the sampled-location covariance; the explicit
    inverse is never formed.
    """
    _check_indices(samples, domain)
    q = domain.points if query is None else np.atleast_2d(np.asarray(query, dtype=np.float64))
    if q.shape[1] != domain.dim:
        raise MalformedInputError(f"query dimension {q.shape[1]} != domain dimension {domain.dim}")
    prior = np.full(q.shape[0], h.sigma_f**2)
    if not samples.indices:
        return prior
    sample_pts = domain.points[list(samples.indices)]
    cov = kernel_matrix(sample_pts, sample_pts, h) + h.sigma_n**2 * np.eye(len(samples))
    cross = kernel_matrix(sample_pts, q, h)
    chol = _cholesky_with_jitter(cov)
    v = solve_triangular(chol, cross, lower=True)
    return prior - np.einsum("sq,sq->q", v, v)


def posterior_variance(
    x_star: Sequence[float], samples: Selection, domain: Domain, h: Hyperparams
) -> float:
    """Posterior variance at a single test point given the sampled locations."""
    x = np.asarray(x_star, dtype=np.float64).reshape(1, -1)
    return float(variance_profile(samples, domain, h, query=x)[0])


def posterior_mean(
    x_star: Sequence[float],
    samples: Selection,
    observations: Sequence[float],
    domain: Domain,
    h: Hyperparams,
) -> float:
    """Posterior mean k_*^T (K + sigma_n^2 I)^{-1} y under a zero-mean prior.

    Utility only: the selection objective never consults observed values.
    """
    _check_indices(samples, domain)
    y = np.asarray(observations, dtype=np.float64).ravel()
    if y.shape[0] != len(samples):
        raise MalformedInputError(
            f"got {y.shape[0]} observations for {len(samples)} sampled locations"
        )
    if not samples.indices:
        return 0.0
    x = np.asarray(x_star, dtype=np.float64).reshape(1, -1)
    if x.shape[1] != domain.dim:
        raise MalformedInputError(f"query dimension {x.shape[1]} != domain dimension {domain.dim}")
    sample_pts = domain.points[list(samples.indices)]
    cov = kernel_matrix(sample_pts, sample_pts, h) + h.sigma_n**2 * np.eye(len(samples))
    chol = _cholesky_with_jitter(cov)
    alpha = cho_solve((chol, True), y)
    cross = kernel_matrix(sample_pts, x, h).ravel()
    return float(np.dot(cross, alpha))


def total_variance(samples: Selection, domain: Domain, h: Hyperparams) -> float:
    """J(S): posterior variance summed over every domain point."""
    return float(variance_profile(samples, domain, h).sum())


def total_variance_many(subsets: np.ndarray, domain: Domain, h: Hyperparams) -> np.ndarray:
    """J evaluated for many equal-size subsets at once.

    `subsets` is an (M, k) integer array of domain indices (rows need not be
    sorted). Uses stacked Cholesky factorizations; the jitter ladder applies
    batch-wide. Intended for argmin scans - record values should be
    recomputed through `total_variance` for the canonical summation order.
    """
    idx = np.asarray(subsets, dtype=np.intp)
    if idx.ndim != 2:
        raise MalformedInputError("subsets must be a 2-D (M, k) index array")
    if idx.size and (idx.min() < 0 or idx.max() >= len(domain)):
        raise MalformedInputError("subset index out of range for domain")
    m, k = idx.shape
    n = len(domain)
    prior_total = n * h.sigma_f**2
    if k == 0:
        return np.full(m, prior_total)
    kfull = kernel_matrix(domain.points, domain.points, h)
    noise = h.sigma_n**2 * np.eye(k)
    out = np.empty(m)
    step = max(1, 8_388_608 // max(1, k * n))  # ~64 MB of float64 per chunk
    for lo in range(0, m, step):
        hi = min(lo + step, m)
        block = idx[lo:hi]
        cov = kfull[block[:, :, None], block[:, None, :]] + noise
        cross = kfull[block]  # (chunk, k, n)
        chol = _cholesky_with_jitter(cov)
        v = np.linalg.solve(chol, cross)
        out[lo:hi] = prior_total - np.einsum("mkn,mkn->m", v, v)
    return out


def variance_reduction(
    x: Sequence[float], selected: Selection, domain: Domain, h: Hyperparams
) -> float:
    """Drop in posterior variance at x due to observing `selected`.

    Zero for the empty set; non-negative and submodular in `selected`.
    """
    base = kernel_eval(x, x, h)
    if not selected.indices:
        return 0.0
    return base - posterior_variance(x, selected, domain, h)
