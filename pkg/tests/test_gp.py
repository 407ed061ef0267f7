"""Gaussian-process core: kernel, posteriors, total variance, reductions."""

import math

import numpy as np
import pytest

from gpqubo import (
    Domain,
    Hyperparams,
    MalformedInputError,
    NumericalDegeneracyError,
    Selection,
    kernel_eval,
    make_grid,
    posterior_mean,
    posterior_variance,
    total_variance,
    variance_reduction,
)
from gpqubo.gp import _cholesky_with_jitter, total_variance_many, variance_profile

from .conftest import random_domain, random_hyperparams
from .oracles import posterior_mean_inv, posterior_variance_inv


class TestTypes:
    def test_hyperparams_validation(self):
        Hyperparams(1.0, 1.0, 0.0)  # sigma_n = 0 is legal
        with pytest.raises(MalformedInputError):
            Hyperparams(0.0, 1.0, 0.1)
        with pytest.raises(MalformedInputError):
            Hyperparams(1.0, -1.0, 0.1)
        with pytest.raises(MalformedInputError):
            Hyperparams(1.0, 1.0, -0.1)

    def test_domain_rejects_duplicates(self):
        with pytest.raises(MalformedInputError):
            Domain(points=[[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]])

    def test_domain_rejects_empty(self):
        with pytest.raises(MalformedInputError):
            Domain(points=np.empty((0, 2)))

    def test_domain_points_are_frozen(self, grid3):
        with pytest.raises(ValueError):
            grid3.points[0, 0] = 99.0

    def test_selection_canonicalizes(self):
        assert Selection((3, 1, 2, 1)).indices == (1, 2, 3)
        assert Selection() == Selection(())
        with pytest.raises(MalformedInputError):
            Selection((-1, 2))


class TestKernel:
    def test_same_point_gives_signal_variance(self):
        h = Hyperparams(2.0, 1.3, 0.1)
        assert kernel_eval([0.7, -1.2], [0.7, -1.2], h) == pytest.approx(1.69, abs=1e-15)

    def test_unit_lengthscale_at_sqrt2(self):
        h = Hyperparams(1.0, 1.0, 0.0)
        assert kernel_eval([0.0, 0.0], [1.0, 1.0], h) == pytest.approx(math.exp(-1.0), rel=1e-14)

    def test_monotone_decay_to_negligible(self):
        h = Hyperparams(0.5, 1.0, 0.0)
        assert kernel_eval([0.0], [5.0], h) < 1e-12

    def test_symmetry_and_bounds(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            h = random_hyperparams(rng)
            a = rng.uniform(-3, 3, size=3)
            b = rng.uniform(-3, 3, size=3)
            kab = kernel_eval(a, b, h)
            assert kab == kernel_eval(b, a, h)
            assert 0.0 < kab <= h.sigma_f**2

    def test_dimension_mismatch(self):
        with pytest.raises(MalformedInputError):
            kernel_eval([0.0, 1.0], [0.0], Hyperparams(1.0, 1.0, 0.1))


class TestPosteriorVariance:
    def test_empty_selection_is_prior(self, grid5, h_default):
        assert posterior_variance([2.0, 2.0], Selection(), grid5, h_default) == 1.0

    def test_single_self_sample_closed_form(self, grid5, h_default):
        # 1x1 case: sigma_f^2 - sigma_f^4 / (sigma_f^2 + sigma_n^2)
        x = grid5.points[12]
        got = posterior_variance(x, Selection((12,)), grid5, h_default)
        assert got == pytest.approx(1.0 - 1.0 / 1.01, rel=1e-12)

    def test_two_samples_match_dense_inverse(self, grid5, h_default):
        samples = Selection((3, 17))
        coords = [grid5.points[3], grid5.points[17]]
        for x in grid5.points[::4]:
            want = posterior_variance_inv(x, coords, h_default)
            got = posterior_variance(x, samples, grid5, h_default)
            assert got == pytest.approx(want, abs=1e-10)

    def test_random_instances_match_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            domain = random_domain(rng)
            h = random_hyperparams(rng)
            k = int(rng.integers(0, min(8, len(domain)) + 1))
            sel = Selection(tuple(rng.choice(len(domain), size=k, replace=False)))
            coords = [domain.points[i] for i in sel]
            x = rng.uniform(0.0, 4.0, size=domain.dim)
            want = posterior_variance_inv(x, coords, h)
            got = posterior_variance(x, sel, domain, h)
            assert got == pytest.approx(want, abs=1e-10)

    def test_bounds(self, grid5, h_default):
        rng = np.random.default_rng(3)
        for _ in range(50):
            k = int(rng.integers(0, 9))
            sel = Selection(tuple(rng.choice(25, size=k, replace=False)))
            prof = variance_profile(sel, grid5, h_default)
            assert np.all(prof >= -1e-9)
            assert np.all(prof <= h_default.sigma_f**2 + 1e-9)

    def test_out_of_range_selection(self, grid3, h_default):
        with pytest.raises(MalformedInputError):
            posterior_variance([0.0, 0.0], Selection((9,)), grid3, h_default)


class TestPosteriorMean:
    def test_empty_selection_zero_mean_prior(self, grid3, h_default):
        assert posterior_mean([1.0, 1.0], Selection(), [], grid3, h_default) == 0.0

    def test_noiseless_single_point_interpolates(self, grid3):
        h = Hyperparams(1.0, 1.0, 0.0)
        x = grid3.points[4]
        got = posterior_mean(x, Selection((4,)), [2.5], grid3, h)
        assert got == pytest.approx(2.5, rel=1e-12)

    def test_two_samples_match_dense_inverse(self, grid3, h_default):
        rng = np.random.default_rng(5)
        for _ in range(20):
            y = rng.normal(size=2)
            sel = Selection((1, 7))
            coords = [grid3.points[1], grid3.points[7]]
            x = rng.uniform(0, 2, size=2)
            want = posterior_mean_inv(x, coords, y, h_default)
            got = posterior_mean(x, sel, y, grid3, h_default)
            assert got == pytest.approx(want, abs=1e-10)

    def test_observation_count_mismatch(self, grid3, h_default):
        with pytest.raises(MalformedInputError):
            posterior_mean([0, 0], Selection((1, 2)), [1.0], grid3, h_default)


class TestTotalVariance:
    def test_empty_25_points(self, grid5, h_default):
        assert total_variance(Selection(), grid5, h_default) == 25.0

    def test_empty_36_points_sigma2(self):
        domain = make_grid(6, 6)
        h = Hyperparams(1.0, 2.0, 0.1)
        assert total_variance(Selection(), domain, h) == 144.0

    def test_order_independence(self, grid5, h_default):
        a = total_variance(Selection((9, 3, 21)), grid5, h_default)
        b = total_variance(Selection((21, 9, 3)), grid5, h_default)
        assert a == b

    def test_monotone_under_inclusion_exhaustive(self, grid3, h_default):
        n = len(grid3)
        j = {}
        for mask in range(1 << n):
            sel = Selection(tuple(i for i in range(n) if (mask >> i) & 1))
            j[mask] = total_variance(sel, grid3, h_default)
        for big in range(1 << n):
            sub = big
            while True:
                assert j[big] <= j[sub] + 1e-9
                if sub == 0:
                    break
                sub = (sub - 1) & big

    def test_batch_matches_single(self, grid5, h_default):
        rng = np.random.default_rng(17)
        subsets = np.array([sorted(rng.choice(25, size=4, replace=False)) for _ in range(64)])
        batch = total_variance_many(subsets, grid5, h_default)
        for row, val in zip(subsets, batch):
            single = total_variance(Selection(tuple(int(i) for i in row)), grid5, h_default)
            assert val == pytest.approx(single, rel=1e-11)


class TestVarianceReduction:
    def test_empty_set_no_reduction(self, grid3, h_default):
        assert variance_reduction(grid3.points[0], Selection(), grid3, h_default) == 0.0

    def test_self_sample_closed_form(self, grid3, h_default):
        x = grid3.points[4]
        got = variance_reduction(x, Selection((4,)), grid3, h_default)
        assert got == pytest.approx(1.0 - (1.0 - 1.0 / 1.01), rel=1e-12)

    def test_diminishing_returns_exhaustive(self, grid3, grid3_profiles_weak):
        # For all A subset of B and v outside B, the marginal reduction at
        # every evaluation point shrinks as the base set grows.
        n = len(grid3)
        prof = grid3_profiles_weak
        for big in range(1 << n):
            sub = big
            while True:
                for v in range(n):
                    if (big >> v) & 1:
                        continue
                    gain_sub = prof[sub] - prof[sub | (1 << v)]
                    gain_big = prof[big] - prof[big | (1 << v)]
                    assert np.all(gain_sub >= gain_big - 1e-9)
                if sub == 0:
                    break
                sub = (sub - 1) & big

    def test_diminishing_returns_needs_weak_coupling(self, grid3, h_default):
        # Documented counterexample: with unit length-scale the marginal
        # reduction at the corner grows when {3} joins the base set {4},
        # so pointwise diminishing returns is conditional, not universal.
        x = grid3.points[0]

        def gain(base, v):
            before = variance_reduction(x, Selection(base), grid3, h_default)
            after = variance_reduction(x, Selection(base + (v,)), grid3, h_default)
            return after - before

        violation = gain((3, 4), 6) - gain((4,), 6)
        assert violation > 0.01


class TestNumerics:
    def test_near_duplicate_points_survive_via_jitter(self):
        domain = Domain(points=[[0.0, 0.0], [1e-12, 0.0], [1.0, 1.0]])
        h = Hyperparams(1.0, 1.0, 0.0)
        prof = variance_profile(Selection((0, 1)), domain, h)
        assert np.all(np.isfinite(prof))
        assert np.all(prof <= 1.0 + 1e-6)

    def test_jitter_ladder_rescues_singular_psd(self):
        mat = np.array([[1.0, 1.0], [1.0, 1.0]])
        chol = _cholesky_with_jitter(mat)
        assert np.all(np.isfinite(chol))

    def test_indefinite_matrix_raises_degeneracy(self):
        mat = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3 and -1
        with pytest.raises(NumericalDegeneracyError):
            _cholesky_with_jitter(mat)
