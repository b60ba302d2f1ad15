import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxinfer.max_stats import (
    ABSOLUTE_MAX,
    SIGNED_MAX,
    BootstrapConfig,
    MaxStatKind,
    MaxStatVariant,
    QuantileEstimate,
    compute_max_stat,
    compute_w0,
    covariance_gap,
    empirical_bootstrap_quantile,
    empirical_bootstrap_stat,
    ks_distance,
    levy_concentration,
    multiplier_bootstrap_quantile,
    simulate_gaussian_max,
    smooth_max,
)
from maxinfer.rng import SeededRng

PHI_INV_975 = 1.9599639845400542
PHI_INV_95 = 1.6448536269514727


class TestMaxStat:
    def test_single_row_signed(self):
        assert compute_max_stat([[3.0, -5.0]], SIGNED_MAX) == 3.0

    def test_single_row_absolute(self):
        assert compute_max_stat([[3.0, -5.0]], ABSOLUTE_MAX) == 5.0

    def test_column_of_ones(self):
        data = np.ones((4, 1))
        assert compute_max_stat(data, SIGNED_MAX) == pytest.approx(2.0)

    def test_studentized_divides(self):
        variant = MaxStatVariant(MaxStatKind.STUDENTIZED, studentizer=np.array([2.0, 1.0]))
        assert compute_max_stat([[4.0, 1.0]], variant) == pytest.approx(2.0)

    def test_studentizer_validation(self):
        with pytest.raises(ValueError):
            MaxStatVariant(MaxStatKind.STUDENTIZED)
        with pytest.raises(ValueError):
            MaxStatVariant(MaxStatKind.STUDENTIZED, studentizer=np.array([1.0, -1.0]))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            compute_max_stat([[np.nan, 1.0]])


class TestW0:
    def test_zero_multipliers(self):
        data = np.random.default_rng(0).standard_normal((5, 3))
        assert compute_w0(data, np.zeros(5), SIGNED_MAX) == 0.0

    def test_unit_multipliers_reduce_to_max_stat(self):
        data = np.random.default_rng(1).standard_normal((20, 7))
        assert compute_w0(data, np.ones(20), ABSOLUTE_MAX) == compute_max_stat(data, ABSOLUTE_MAX)

    def test_small_case(self):
        assert compute_w0([[1.0], [2.0]], [1.0, -1.0], SIGNED_MAX) == pytest.approx(-1 / math.sqrt(2))

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            compute_w0(np.ones((3, 2)), np.ones(4))


class TestMultiplierBootstrap:
    def test_constant_column_signed_quantile(self):
        # conditional on the data, the multiplier stat is exactly N(0, c^2)
        c = 2.0
        data = np.full((50, 1), c)
        est = multiplier_bootstrap_quantile(data, 0.975, BootstrapConfig(100_000, 7, SIGNED_MAX))
        assert est.value == pytest.approx(PHI_INV_975 * c, abs=0.03 * c)

    def test_constant_column_absolute_quantile(self):
        c = 3.0
        data = np.full((20, 1), c)
        est = multiplier_bootstrap_quantile(data, 0.95, BootstrapConfig(100_000, 7, ABSOLUTE_MAX))
        assert est.value == pytest.approx(PHI_INV_975 * c, abs=0.03 * c)

    def test_single_replication(self):
        data = np.random.default_rng(3).standard_normal((10, 4))
        est = multiplier_bootstrap_quantile(data, 0.5, BootstrapConfig(1, 9, SIGNED_MAX))
        assert est.value == est.replicate_values[0]

    def test_deterministic(self):
        data = np.random.default_rng(4).standard_normal((30, 5))
        cfg = BootstrapConfig(500, 21, ABSOLUTE_MAX)
        a = multiplier_bootstrap_quantile(data, 0.9, cfg)
        b = multiplier_bootstrap_quantile(data, 0.9, cfg)
        assert np.array_equal(a.replicate_values, b.replicate_values)
        assert a.value == b.value

    def test_batching_does_not_change_replicates(self):
        # replications keyed by absolute index: splitting into batches is invisible
        import maxinfer.max_stats as ms

        data = np.random.default_rng(5).standard_normal((11, 3))
        cfg = BootstrapConfig(300, 13, SIGNED_MAX)
        full = multiplier_bootstrap_quantile(data, 0.8, cfg)
        old = ms._BATCH
        try:
            ms._BATCH = 17
            batched = multiplier_bootstrap_quantile(data, 0.8, cfg)
        finally:
            ms._BATCH = old
        assert np.array_equal(full.replicate_values, batched.replicate_values)

    def test_scale_equivariance_power_of_two(self):
        data = np.random.default_rng(6).standard_normal((25, 4))
        cfg = BootstrapConfig(400, 3, ABSOLUTE_MAX)
        base = multiplier_bootstrap_quantile(data, 0.9, cfg)
        scaled = multiplier_bootstrap_quantile(2.0 * data, 0.9, cfg)
        assert np.array_equal(scaled.replicate_values, 2.0 * base.replicate_values)
        assert scaled.value == 2.0 * base.value

    def test_scale_equivariance_general(self):
        data = np.random.default_rng(7).standard_normal((25, 4))
        cfg = BootstrapConfig(400, 3, SIGNED_MAX)
        base = multiplier_bootstrap_quantile(data, 0.6, cfg)
        scaled = multiplier_bootstrap_quantile(3.7 * data, 0.6, cfg)
        assert scaled.value == pytest.approx(3.7 * base.value, rel=1e-12)

    def test_quantile_monotone_in_level(self):
        data = np.random.default_rng(8).standard_normal((15, 6))
        cfg = BootstrapConfig(1000, 17, SIGNED_MAX)
        values = [
            multiplier_bootstrap_quantile(data, level, cfg).value
            for level in (0.1, 0.5, 0.9, 0.99)
        ]
        assert values == sorted(values)


class TestQuantileEstimate:
    def test_value_matches_definition(self):
        reps = np.array([3.0, 1.0, 2.0])
        est = QuantileEstimate.from_replicates(reps, 0.5)
        assert est.value == 2.0
        assert np.array_equal(est.replicate_values, np.sort(reps))

    def test_length_invariant(self):
        with pytest.raises(ValueError):
            QuantileEstimate(level=0.5, value=1.0, replications=3, replicate_values=np.ones(2))


class TestGaussianAnalog:
    def test_identity_covariance_quantile(self):
        est = simulate_gaussian_max(0.95, replications=100_000, seed=3, cov=np.eye(1))
        assert est.value == pytest.approx(PHI_INV_95, abs=0.03)

    def test_covariance_scaling_exact(self):
        a = simulate_gaussian_max(0.9, replications=2000, seed=5, cov=np.eye(1))
        b = simulate_gaussian_max(0.9, replications=2000, seed=5, cov=4.0 * np.eye(1))
        assert np.array_equal(b.replicate_values, 2.0 * a.replicate_values)

    def test_design_path_absolute(self):
        est = simulate_gaussian_max(
            0.95,
            replications=100_000,
            seed=11,
            variant=ABSOLUTE_MAX,
            design=np.ones((40, 1)),
            scale=1.0,
        )
        assert est.value == pytest.approx(PHI_INV_975, abs=0.03)

    def test_requires_exactly_one_source(self):
        with pytest.raises(ValueError):
            simulate_gaussian_max(0.9, replications=10, seed=1)
        with pytest.raises(ValueError):
            simulate_gaussian_max(
                0.9, replications=10, seed=1, design=np.ones((2, 1)), cov=np.eye(1)
            )

    def test_design_and_cov_paths_agree(self):
        # for a fixed design, the analog covariance is the Gram matrix
        gen = np.random.default_rng(9)
        z = gen.standard_normal((60, 3))
        a = simulate_gaussian_max(
            0.9, replications=60_000, seed=2, variant=ABSOLUTE_MAX, design=z
        )
        b = simulate_gaussian_max(
            0.9, replications=60_000, seed=4, variant=ABSOLUTE_MAX, cov=z.T @ z / z.shape[0]
        )
        assert a.value == pytest.approx(b.value, abs=0.05)


class TestEmpiricalBootstrap:
    def test_identical_rows_give_zero(self):
        data = np.tile([1.5, -2.0, 0.25], (40, 1))
        assert empirical_bootstrap_stat(data, SeededRng(3)) == 0.0

    def test_deterministic(self):
        data = np.random.default_rng(10).standard_normal((30, 3))
        a = empirical_bootstrap_stat(data, SeededRng(8, 4))
        b = empirical_bootstrap_stat(data, SeededRng(8, 4))
        assert a == b

    def test_bootstrap_variance_consistency(self):
        # resampled sums have conditional variance E_n[x^2] per coordinate
        gen = np.random.default_rng(11)
        data = gen.standard_normal((200, 1))
        est = empirical_bootstrap_quantile(data, 0.5, BootstrapConfig(10_000, 13, SIGNED_MAX))
        centered = data[:, 0] - data[:, 0].mean()
        target = float((centered**2).mean())
        ratio = est.replicate_values.var() / target
        assert 0.9 < ratio < 1.1

    def test_quantile_engine_matches_single_stat(self):
        data = np.random.default_rng(12).standard_normal((25, 4))
        est = empirical_bootstrap_quantile(data, 0.5, BootstrapConfig(64, 5, ABSOLUTE_MAX))
        singles = [
            empirical_bootstrap_stat(data, SeededRng(5, r), ABSOLUTE_MAX) for r in range(64)
        ]
        assert np.array_equal(est.replicate_values, np.sort(singles))


class TestSmoothMax:
    def test_two_zeros(self):
        assert smooth_max([0.0, 0.0], 1.0) == pytest.approx(math.log(2.0), abs=1e-12)

    def test_singleton(self):
        for beta in (0.1, 1.0, 50.0):
            assert smooth_max([5.0], beta) == pytest.approx(5.0, abs=1e-12)

    def test_bracket(self):
        val = smooth_max([1.0, 2.0, 3.0], 10.0)
        assert 3.0 <= val <= 3.0 + math.log(3.0) / 10.0

    @given(
        st.lists(st.floats(-100, 100), min_size=1, max_size=30),
        st.floats(0.01, 100.0),
    )
    @settings(max_examples=300, deadline=None)
    def test_sandwich(self, z, beta):
        val = smooth_max(z, beta)
        top = max(z)
        assert val >= top - 1e-12
        assert val <= top + math.log(len(z)) / beta + 1e-12

    def test_errors(self):
        with pytest.raises(ValueError):
            smooth_max([], 1.0)
        with pytest.raises(ValueError):
            smooth_max([1.0], 0.0)


def ks_brute_force(a, b):
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    worst = 0.0
    for t in np.concatenate([a, b]):
        fa = np.mean(a <= t)
        fb = np.mean(b <= t)
        worst = max(worst, abs(fa - fb))
    return worst


class TestKsDistance:
    def test_identical(self):
        assert ks_distance([1, 2, 3], [1, 2, 3]) == 0.0

    def test_disjoint(self):
        assert ks_distance([0, 0], [1, 1]) == 1.0

    def test_quarter(self):
        assert ks_distance([1, 2, 3, 4], [1, 2, 3, 5]) == pytest.approx(0.25)

    def test_matches_brute_force(self):
        gen = np.random.default_rng(14)
        for _ in range(50):
            a = gen.standard_normal(gen.integers(1, 30))
            b = gen.standard_normal(gen.integers(1, 30)) + gen.uniform(-1, 1)
            assert ks_distance(a, b) == pytest.approx(ks_brute_force(a, b), abs=1e-12)

    @given(
        st.lists(st.floats(-50, 50), min_size=1, max_size=25),
        st.lists(st.floats(-50, 50), min_size=1, max_size=25),
    )
    @settings(max_examples=100, deadline=None)
    def test_symmetric_and_bounded(self, a, b):
        d = ks_distance(a, b)
        assert d == ks_distance(b, a)
        assert 0.0 <= d <= 1.0

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            ks_distance([], [1.0])


class TestLevyConcentration:
    def test_all_equal(self):
        assert levy_concentration([2.0, 2.0, 2.0], 0.01) == 1.0

    def test_two_points(self):
        assert levy_concentration([1.0, 2.0], 0.4) == 0.5

    def test_normal_density_oracle(self):
        x = SeededRng(15).generator().standard_normal(100_000)
        # window mass at the mode ~ 2 * width * phi(0)
        assert levy_concentration(x, 0.1) == pytest.approx(0.0797884560802865, abs=0.008)

    def test_width_scaling_diagnostic(self):
        x = SeededRng(16).generator().standard_normal(50_000)
        small = levy_concentration(x, 0.05)
        large = levy_concentration(x, 0.1)
        assert small < large <= 2.4 * small


class TestCovarianceGap:
    def test_zero_against_empirical(self):
        data = np.random.default_rng(17).standard_normal((20, 3))
        assert covariance_gap(data).delta == 0.0

    def test_against_reference(self):
        data = np.ones((10, 2))
        gap = covariance_gap(data, np.eye(2))
        assert gap.delta == pytest.approx(1.0)


def test_union_bound_domination_quick():
    # simulated analog quantile never beats the per-coordinate union bound
    # by more than Monte Carlo noise
    from mc_oracles import quantile_mc_se

    gen = np.random.default_rng(18)
    n, p, reps = 100, 50, 20_000
    z = gen.standard_normal((n, p))
    z /= np.sqrt((z * z).mean(axis=0))
    alpha = 0.05
    est = simulate_gaussian_max(
        1 - alpha, replications=reps, seed=51, variant=ABSOLUTE_MAX, design=z
    )
    from maxinfer.stat_core import normal_quantile

    canonical = normal_quantile(1 - alpha / (2 * p))
    se = quantile_mc_se(est.replicate_values, 1 - alpha)
    assert est.value <= canonical + 3 * se
