# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled solver kernels: exhaustive scans and Metropolis annealing.

Interface-identical to `_pykernels`. The annealer replays the same
SplitMix64 stream and accumulation order as the Python fallback, so the
two backends are bit-compatible for a given seed. Tie-breaking matches the
fallback: values within tie_eps of the running minimum count as equal and
the lexicographically smallest index set wins.
"""

from libc.math cimport INFINITY, exp
from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport free, malloc

import numpy as np


cdef inline uint64_t _mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline uint64_t _next_u64(uint64_t* state) nogil:
    state[0] = state[0] + <uint64_t>0x9E3779B97F4A7C15
    return _mix64(state[0])


cdef inline double _uniform(uint64_t* state) nogil:
    return <double>(_next_u64(state) >> 11) * (1.0 / 9007199254740992.0)


cdef inline uint64_t _below(uint64_t* state, uint64_t n) nogil:
    # Rejection of the short tail keeps the draw exactly uniform; the
    # threshold (2^64 - n) % n equals 2^64 mod n, matching the Python side.
    cdef uint64_t tail = (0 - n) % n
    cdef uint64_t u
    while True:
        u = _next_u64(state)
        if u >= tail:
            return u % n


cdef inline bint _lex_less(int64_t* a, int ka, int64_t* b, int kb) nogil:
    cdef int t, m = ka if ka < kb else kb
    for t in range(m):
        if a[t] != b[t]:
            return a[t] < b[t]
    return ka < kb


cdef inline void _consider(double val, char* z, int n, int count, double tie_eps,
                           double* best_val, int64_t* best, int* best_count,
                           int64_t* cur) nogil:
    # Mirrors the fallback's record-tracking branch structure exactly.
    cdef int i, j
    if val > best_val[0] + tie_eps:
        return
    j = 0
    for i in range(n):
        if z[i]:
            cur[j] = i
            j += 1
    if val < best_val[0] - tie_eps or best_count[0] < 0 or _lex_less(cur, count, best, best_count[0]):
        best_count[0] = count
        for i in range(count):
            best[i] = cur[i]
    if val < best_val[0]:
        best_val[0] = val


def gray_scan(linear, quad_upper, double tie_eps):
    """Scan all 2^n assignments in Gray-code order with incremental deltas."""
    cdef const double[::1] lin = np.ascontiguousarray(linear, dtype=np.float64)
    sym_arr = np.asarray(quad_upper, dtype=np.float64)
    sym_arr = np.ascontiguousarray(sym_arr + sym_arr.T)
    cdef const double[:, ::1] sym = sym_arr
    cdef int n = lin.shape[0]
    if n > 62:
        raise ValueError("gray_scan supports at most 62 variables")
    cdef uint64_t total = (<uint64_t>1) << n
    cdef uint64_t m, mm
    cdef int bit, j, count = 0, best_count = -1
    cdef double s, val = 0.0, best_val = INFINITY
    cdef char* z = <char*>malloc((n if n else 1) * sizeof(char))
    cdef int64_t* best = <int64_t*>malloc((n if n else 1) * sizeof(int64_t))
    cdef int64_t* cur = <int64_t*>malloc((n if n else 1) * sizeof(int64_t))
    if z == NULL or best == NULL or cur == NULL:
        free(z); free(best); free(cur)
        raise MemoryError()
    try:
        with nogil:
            for j in range(n):
                z[j] = 0
            _consider(val, z, n, count, tie_eps, &best_val, best, &best_count, cur)
            for m in range(1, total):
                mm = m
                bit = 0
                while not (mm & 1):
                    mm >>= 1
                    bit += 1
                s = lin[bit]
                for j in range(n):
                    if z[j]:
                        s += sym[bit, j]
                if z[bit]:
                    z[bit] = 0
                    val -= s
                    count -= 1
                else:
                    z[bit] = 1
                    val += s
                    count += 1
                _consider(val, z, n, count, tie_eps, &best_val, best, &best_count, cur)
        mask = 0
        for j in range(best_count):
            mask |= 1 << best[j]
        return mask, best_val, int(total)
    finally:
        free(z)
        free(best)
        free(cur)


def combo_scan(linear, quad_upper, int k, double tie_eps):
    """Scan all cardinality-k subsets in lexicographic successor order.

    Objective values come from prefix partial sums, so each visited value
    equals a from-scratch evaluation in canonical order.
    """
    cdef const double[::1] lin = np.ascontiguousarray(linear, dtype=np.float64)
    sym_arr = np.asarray(quad_upper, dtype=np.float64)
    sym_arr = np.ascontiguousarray(sym_arr + sym_arr.T)
    cdef const double[:, ::1] sym = sym_arr
    cdef int n = lin.shape[0]
    if k == 0:
        return np.empty(0, dtype=np.int64), 0.0, 1
    cdef int64_t* c = <int64_t*>malloc(k * sizeof(int64_t))
    cdef int64_t* best = <int64_t*>malloc(k * sizeof(int64_t))
    cdef double* prefix = <double*>malloc((k + 1) * sizeof(double))
    if c == NULL or best == NULL or prefix == NULL:
        free(c); free(best); free(prefix)
        raise MemoryError()
    cdef double acc, best_val = INFINITY
    cdef int j, t, s, have_best = 0
    cdef int64_t visited = 0
    try:
        with nogil:
            for t in range(k):
                c[t] = t
            prefix[0] = 0.0
            for t in range(k):
                acc = lin[c[t]]
                for s in range(t):
                    acc += sym[c[s], c[t]]
                prefix[t + 1] = prefix[t] + acc
            while True:
                visited += 1
                if prefix[k] <= best_val + tie_eps:
                    # Lex scan order: earlier hits are lex-smaller, so only
                    # a strict-enough improvement replaces the incumbent.
                    if prefix[k] < best_val - tie_eps or not have_best:
                        for t in range(k):
                            best[t] = c[t]
                        have_best = 1
                    if prefix[k] < best_val:
                        best_val = prefix[k]
                j = k - 1
                while j >= 0 and c[j] == n - k + j:
                    j -= 1
                if j < 0:
                    break
                c[j] += 1
                for t in range(j + 1, k):
                    c[t] = c[t - 1] + 1
                for t in range(j, k):
                    acc = lin[c[t]]
                    for s in range(t):
                        acc += sym[c[s], c[t]]
                    prefix[t + 1] = prefix[t] + acc
        out = np.empty(k, dtype=np.int64)
        for t in range(k):
            out[t] = best[t]
        return out, best_val, int(visited)
    finally:
        free(c)
        free(best)
        free(prefix)


def anneal_run(linear, quad_upper, double t_initial, double cooling,
               int sweeps, int restarts, uint64_t seed, double tie_eps):
    """Single-flip Metropolis annealing; bit-compatible with the fallback."""
    cdef const double[::1] lin = np.ascontiguousarray(linear, dtype=np.float64)
    sym_arr = np.asarray(quad_upper, dtype=np.float64)
    sym_arr = np.ascontiguousarray(sym_arr + sym_arr.T)
    cdef const double[:, ::1] sym = sym_arr
    cdef int n = lin.shape[0]
    trace_arr = np.empty(restarts * sweeps, dtype=np.float64)
    cdef double[::1] trace = trace_arr
    cdef char* z = <char*>malloc((n if n else 1) * sizeof(char))
    cdef int64_t* best = <int64_t*>malloc((n if n else 1) * sizeof(int64_t))
    cdef int64_t* cur = <int64_t*>malloc((n if n else 1) * sizeof(int64_t))
    if z == NULL or best == NULL or cur == NULL:
        free(z); free(best); free(cur)
        raise MemoryError()
    cdef uint64_t state
    cdef double val, s, delta, t, best_val = INFINITY
    cdef int r, i, j, sweep, flip, count, best_count = -1, step = 0
    cdef int64_t evaluations = 0
    cdef bint accept
    try:
        with nogil:
            for r in range(restarts):
                state = seed + <uint64_t>r
                count = 0
                for i in range(n):
                    z[i] = <char>(_next_u64(&state) & 1)
                    if z[i]:
                        count += 1
                val = 0.0
                for i in range(n):
                    if z[i]:
                        s = lin[i]
                        for j in range(i):
                            if z[j]:
                                s += sym[i, j]
                        val += s
                evaluations += 1
                _consider(val, z, n, count, tie_eps, &best_val, best, &best_count, cur)
                t = t_initial
                for sweep in range(sweeps):
                    for flip in range(n):
                        i = <int>_below(&state, <uint64_t>n)
                        s = lin[i]
                        for j in range(n):
                            if z[j]:
                                s += sym[i, j]
                        delta = -s if z[i] else s
                        evaluations += 1
                        accept = delta <= 0.0
                        if not accept:
                            accept = _uniform(&state) < exp(-delta / t)
                        if accept:
                            if z[i]:
                                z[i] = 0
                                count -= 1
                            else:
                                z[i] = 1
                                count += 1
                            val += delta
                            _consider(val, z, n, count, tie_eps, &best_val, best, &best_count, cur)
                    trace[step] = best_val
                    step += 1
                    t = t * cooling
        out = np.empty(best_count, dtype=np.int64)
        for i in range(best_count):
            out[i] = best[i]
        return out, best_val, int(evaluations), trace_arr
    finally:
        free(z)
        free(best)
        free(cur)
