import math

import numpy as np
import pytest

from mc_oracles import quantile_mc_se

from maxinfer.max_stats import (
    ABSOLUTE_MAX,
    SIGNED_MAX,
    BootstrapConfig,
    multiplier_bootstrap_quantile,
)
from maxinfer.stepdown import (
    MhtProblem,
    means_problem,
    run_stepdown,
    stepdown_critical_value,
)

PHI_INV_95 = 1.6448536269514727


class TestCriticalValue:
    def test_single_constant_column(self):
        c = 2.5
        infl = np.full((50, 1), c)
        crit = stepdown_critical_value(infl, [0], 0.05, BootstrapConfig(100_000, 7))
        assert crit == pytest.approx(PHI_INV_95 * c, abs=0.03 * c)

    def test_subset_monotone_under_shared_draws(self):
        gen = np.random.default_rng(1)
        infl = gen.standard_normal((80, 6))
        cfg = BootstrapConfig(5000, 11)
        full = stepdown_critical_value(infl, range(6), 0.05, cfg)
        for sub in ([0], [1, 3], [0, 2, 4], [1, 2, 3, 4, 5]):
            assert stepdown_critical_value(infl, sub, 0.05, cfg) <= full

    def test_deterministic(self):
        gen = np.random.default_rng(2)
        infl = gen.standard_normal((40, 4))
        cfg = BootstrapConfig(2000, 5)
        assert stepdown_critical_value(infl, [0, 1], 0.1, cfg) == stepdown_critical_value(
            infl, [0, 1], 0.1, cfg
        )

    def test_empty_active_set(self):
        with pytest.raises(ValueError):
            stepdown_critical_value(np.ones((5, 2)), [], 0.05, BootstrapConfig(100, 1))


class TestRunStepdown:
    def test_no_rejections_single_step(self):
        gen = np.random.default_rng(3)
        z = gen.standard_normal((100, 8)) - 5.0  # deep under the nulls
        problem = means_problem(z, np.zeros(8))
        result = run_stepdown(problem, 0.05, BootstrapConfig(2000, 9))
        assert result.steps == 1
        assert not result.rejected.any()
        assert all(step is None for step in result.rejection_step)

    def test_dominant_coordinate_rejected_first(self):
        gen = np.random.default_rng(4)
        z = gen.standard_normal((100, 5))
        z[:, 2] += 50.0
        problem = means_problem(z, np.zeros(5))
        result = run_stepdown(problem, 0.05, BootstrapConfig(2000, 13))
        assert result.rejected[2]
        assert result.rejection_step[2] == 1
        if result.steps >= 2:
            assert result.critical_values[1] <= result.critical_values[0]

    def test_critical_values_nonincreasing(self):
        gen = np.random.default_rng(5)
        z = gen.standard_normal((150, 10))
        z[:, :4] += np.array([4.0, 3.0, 2.0, 1.0]) / math.sqrt(150) * 15
        problem = means_problem(z, np.zeros(10))
        result = run_stepdown(problem, 0.05, BootstrapConfig(3000, 17))
        for a, b in zip(result.critical_values, result.critical_values[1:]):
            assert b <= a

    def test_p1_reduces_to_plain_bootstrap_test(self):
        gen = np.random.default_rng(6)
        z = gen.standard_normal((60, 1)) + 0.3
        problem = means_problem(z, np.zeros(1))
        cfg = BootstrapConfig(4000, 21)
        result = run_stepdown(problem, 0.05, cfg)
        infl = z - z.mean(axis=0)
        crit = multiplier_bootstrap_quantile(infl, 0.95, cfg).value
        t = math.sqrt(60) * z.mean()
        assert bool(result.rejected[0]) == bool(t > crit)
        assert result.critical_values[0] == pytest.approx(crit, abs=1e-12)

    def test_monotone_in_shift(self):
        # raising one estimate never un-rejects anything
        gen = np.random.default_rng(7)
        z = gen.standard_normal((80, 6))
        z[:, 0] += 0.5
        problem = means_problem(z, np.zeros(6))
        cfg = BootstrapConfig(2000, 23)
        before = run_stepdown(problem, 0.05, cfg)
        shifted = MhtProblem(
            beta_hat=problem.beta_hat + np.array([1.0, 0, 0, 0, 0, 0]),
            beta_null=problem.beta_null,
            influence=problem.influence,
            two_sided=False,
        )
        after = run_stepdown(shifted, 0.05, cfg)
        assert np.all(after.rejected[before.rejected])

    def test_two_sided_uses_absolute_values(self):
        gen = np.random.default_rng(8)
        z = gen.standard_normal((100, 3))
        z[:, 1] -= 40.0  # strongly negative: only a two-sided test sees it
        one = run_stepdown(means_problem(z, np.zeros(3)), 0.05, BootstrapConfig(1000, 3))
        two = run_stepdown(
            means_problem(z, np.zeros(3), two_sided=True), 0.05, BootstrapConfig(1000, 3)
        )
        assert not one.rejected[1]
        assert two.rejected[1]

    def test_deterministic_full_run(self):
        gen = np.random.default_rng(9)
        z = gen.standard_normal((50, 4)) + 0.2
        problem = means_problem(z, np.zeros(4))
        cfg = BootstrapConfig(1500, 31)
        a = run_stepdown(problem, 0.05, cfg)
        b = run_stepdown(problem, 0.05, cfg)
        assert np.array_equal(a.rejected, b.rejected)
        assert a.critical_values == b.critical_values
        assert a.steps == b.steps


class TestValidation:
    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            MhtProblem(np.zeros(3), np.zeros(2), np.ones((5, 3)))

    def test_alpha_domain(self):
        problem = means_problem(np.random.default_rng(0).standard_normal((10, 2)), np.zeros(2))
        with pytest.raises(ValueError):
            run_stepdown(problem, 1.5, BootstrapConfig(10, 1))
