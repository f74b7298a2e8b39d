import math
from fractions import Fraction

import numpy as np
import pytest

from blockboot import (
    BlockPlan,
    HilbertSample,
    GridFunction,
    block_length_schedule,
    bootstrap_distribution,
    bootstrap_mean_statistic,
    bootstrap_quantile,
    bootstrap_replicate,
    draw_bootstrap_sample,
    long_run_covariance_projection,
    long_run_variance_estimate,
    two_sample_test,
)
from blockboot.bootstrap import (
    MeanNormStatistic,
    MeanStatistic,
    block_counts_per_replicate,
    counts_from_indices,
    empirical_quantile,
)
from blockboot.exceptions import (
    EmptyInputError,
    PlanMismatchError,
    UnsupportedStatisticError,
)
from blockboot.generators import ProcessConfig, generate_real
from blockboot.rng import derive_stream
from oracles import (
    all_block_selections,
    ar1_long_run_variance,
    exact_bootstrap_mean_law,
    exact_centered_mean_law,
)


def scalar_sample(values):
    return HilbertSample.from_scalars(np.asarray(values, dtype=np.float64))


class TestBlockLengthSchedule:
    def test_smallest_case(self):
        plan = block_length_schedule(1)
        assert (plan.p, plan.k) == (1, 1)

    def test_cube_root_rule_at_1000(self):
        plan = block_length_schedule(1000, exponent=1.0 / 3.0)
        assert (plan.p, plan.k) == (10, 100)

    def test_dyadic_freeze_at_5(self):
        # 4 < 5 <= 8, so the rule is evaluated at 8: floor(8**(1/3)) = 2
        plan = block_length_schedule(5, exponent=1.0 / 3.0, dyadic_freeze=True)
        assert (plan.p, plan.k) == (2, 2)

    @pytest.mark.parametrize("freeze", [False, True])
    def test_schedule_is_nondecreasing(self, freeze):
        previous = 0
        for n in range(1, 10001):
            p = block_length_schedule(n, dyadic_freeze=freeze).p
            assert p >= previous
            previous = p

    def test_blocks_partition_leading_range(self):
        plan = block_length_schedule(103, exponent=0.4)
        covered = []
        for block in plan.blocks:
            covered.extend(block)
        assert covered == list(range(plan.kp))
        assert plan.kp <= plan.n

    def test_zero_length_rejected(self):
        with pytest.raises(EmptyInputError):
            block_length_schedule(0)

    def test_large_exponent_is_capped_at_n(self):
        plan = block_length_schedule(9, exponent=0.9, dyadic_freeze=True)
        assert 1 <= plan.p <= plan.n and plan.k >= 1


class TestDrawBootstrapSample:
    def test_single_block_returns_leading_slice(self):
        s = scalar_sample(np.arange(10.0))
        plan = BlockPlan(n=10, p=10)
        rng = derive_stream(1)
        for _ in range(5):
            star = draw_bootstrap_sample(s, plan, rng)
            assert np.array_equal(star.values, s.values[:10])

    def test_outputs_are_original_blocks(self):
        rng = derive_stream(2)
        s = scalar_sample(rng.standard_normal(20))
        plan = BlockPlan(n=20, p=4)
        original_blocks = {s.values[b.start : b.stop].tobytes() for b in plan.blocks}
        star = draw_bootstrap_sample(s, plan, derive_stream(3))
        for i in range(plan.k):
            assert star.values[i * 4 : (i + 1) * 4].tobytes() in original_blocks

    def test_uniform_block_frequencies(self):
        # oracle: with k = 2 the four outcome pairs are equally likely
        s = scalar_sample([10.0, 11.0, 20.0, 21.0])
        plan = BlockPlan(n=4, p=2)
        rng = derive_stream(4)
        counts = {}
        draws = 100000
        for _ in range(draws):
            star = draw_bootstrap_sample(s, plan, rng)
            key = (star.values[0, 0], star.values[2, 0])
            counts[key] = counts.get(key, 0) + 1
        assert len(counts) == 4
        chi_square = 0.0
        for count in counts.values():
            assert abs(count / draws - 0.25) < 0.01
            chi_square += (count - draws / 4) ** 2 / (draws / 4)
        # chi-square with 3 degrees of freedom; 1e-6 tail is about 30.66
        assert chi_square < 30.66

    def test_fixed_stream_is_deterministic(self):
        s = scalar_sample(np.arange(12.0))
        plan = BlockPlan(n=12, p=3)
        a = draw_bootstrap_sample(s, plan, derive_stream(9, 5))
        b = draw_bootstrap_sample(s, plan, derive_stream(9, 5))
        assert np.array_equal(a.values, b.values)

    def test_plan_mismatch(self):
        s = scalar_sample(np.arange(10.0))
        with pytest.raises(PlanMismatchError):
            draw_bootstrap_sample(s, BlockPlan(n=8, p=2), derive_stream(0))


class TestBootstrapMeanStatistic:
    def test_identity_draw_gives_zero(self):
        s = scalar_sample(np.arange(1.0, 9.0))
        plan = BlockPlan(n=8, p=8)
        star = HilbertSample(s.grid, s.weights, s.values[: plan.kp])
        assert np.all(bootstrap_mean_statistic(s, star, plan).values == 0.0)

    def test_dyadic_scaling_is_exact(self):
        rng = derive_stream(5)
        s = scalar_sample(rng.standard_normal(12))
        plan = BlockPlan(n=12, p=3)
        star = draw_bootstrap_sample(s, plan, derive_stream(6))
        scaled = HilbertSample(s.grid, s.weights, 2.0 * s.values)
        star2 = HilbertSample(s.grid, s.weights, 2.0 * star.values)
        lhs = bootstrap_mean_statistic(scaled, star2, plan).values
        rhs = 2.0 * bootstrap_mean_statistic(s, star, plan).values
        assert np.array_equal(lhs, rhs)

    def test_exact_conditional_law_matches_enumeration(self):
        # oracle: exhaustive k**k enumeration in exact rational arithmetic
        data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
        s = scalar_sample(data)
        plan = BlockPlan(n=6, p=2)
        oracle = sorted(float(v) * math.sqrt(6.0) for v in exact_centered_mean_law(data, 2))
        got = []
        for pick in all_block_selections(plan.k):
            rows = np.concatenate([np.arange(b * 2, b * 2 + 2) for b in pick])
            star = HilbertSample(s.grid, s.weights, s.values[rows])
            got.append(float(bootstrap_mean_statistic(s, star, plan).values[0]))
        got.sort()
        assert got == pytest.approx(oracle, abs=1e-12)

    def test_length_mismatch(self):
        s = scalar_sample(np.arange(6.0))
        plan = BlockPlan(n=6, p=2)
        with pytest.raises(PlanMismatchError):
            bootstrap_mean_statistic(s, scalar_sample([1.0, 2.0]), plan)


class TestCenteringIdentity:
    @pytest.mark.parametrize("data,p", [
        ([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 2),
        ([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], 2),
        ([3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0], 3),
    ])
    def test_enumerated_mean_of_bootstrap_means_is_leading_mean(self, data, p):
        # The identity is exact, so the enumeration averages the machinery's
        # resampled values in exact rational arithmetic; float summation
        # order can then neither mask nor fake it.
        s = scalar_sample(data)
        plan = BlockPlan(n=len(data), p=p)
        total = Fraction(0)
        count = 0
        for pick in all_block_selections(plan.k):
            rows = np.concatenate([np.arange(b * p, b * p + p) for b in pick])
            star_values = s.values[rows, 0]
            total += sum((Fraction(float(v)) for v in star_values), Fraction(0)) / plan.kp
            count += 1
        xbar_kp = sum((Fraction(float(v)) for v in data[: plan.kp]), Fraction(0)) / plan.kp
        assert total / count == xbar_kp


class TestBootstrapDistribution:
    def test_constant_statistic(self):
        s = scalar_sample(np.arange(5.0))
        plan = BlockPlan(n=5, p=2)
        dist = bootstrap_distribution(s, plan, 16, lambda a, b, c: 3.25, seed=0)
        assert np.all(dist.replicates == 3.25)

    def test_single_block_mean_statistic_is_degenerate(self):
        s = scalar_sample(np.arange(7.0))
        plan = BlockPlan(n=7, p=7)
        dist = bootstrap_distribution(s, plan, 32, MeanNormStatistic(), seed=1)
        assert np.all(dist.replicates == 0.0)

    def test_law_matches_enumeration(self):
        # oracle: the 27-point exact law; Kolmogorov distance must be small
        from oracles import discrete_law
        from blockboot.harness import ks_sample_vs_discrete

        data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
        s = scalar_sample(data)
        plan = BlockPlan(n=6, p=2)
        dist = bootstrap_distribution(s, plan, 20000, MeanStatistic(), seed=99)
        exact = [float(v) * math.sqrt(6.0) for v in exact_centered_mean_law(data, 2)]
        support, probs = discrete_law(exact, tol=1e-12)
        d = ks_sample_vs_discrete(dist.replicates[:, 0], support, probs)
        assert d < 0.02

    def test_replicates_independent_of_evaluation_order(self):
        rng = derive_stream(7)
        s = scalar_sample(rng.standard_normal(30))
        plan = BlockPlan(n=30, p=5)
        stat = MeanNormStatistic()
        dist = bootstrap_distribution(s, plan, 64, stat, seed=42)
        for r in (0, 13, 63):
            assert dist.replicates[r] == bootstrap_replicate(s, plan, stat, 42, r)

    def test_bound_path_matches_generic_path(self):
        rng = derive_stream(8)
        s = scalar_sample(rng.standard_normal(24))
        plan = BlockPlan(n=24, p=4)
        fast = bootstrap_distribution(s, plan, 50, MeanNormStatistic(), seed=5)
        slow = bootstrap_distribution(
            s, plan, 50,
            lambda a, b, c: float(np.sqrt(np.sum(
                bootstrap_mean_statistic(a, b, c).values ** 2 * a.weights))),
            seed=5,
        )
        assert np.array_equal(fast.replicates, slow.replicates)

    def test_statistic_errors_carry_replicate_index(self):
        s = scalar_sample(np.arange(6.0))
        plan = BlockPlan(n=6, p=2)

        def broken(sample, star, pl):
            raise ValueError("boom")

        with pytest.raises(ValueError, match=r"replicate 0: boom"):
            bootstrap_distribution(s, plan, 4, broken, seed=0)

    def test_counts_helper_matches_streams(self):
        plan = BlockPlan(n=40, p=5)
        counts = block_counts_per_replicate(plan, seed=11, B=20)
        assert counts.shape == (20, plan.k)
        assert np.all(counts.sum(axis=1) == plan.k)
        idx7 = derive_stream(11, 7).integers(0, plan.k, size=plan.k)
        assert np.array_equal(counts[7], counts_from_indices(idx7, plan.k)[0])


class TestBootstrapQuantile:
    def test_order_statistic_definition(self):
        dist = _scalar_dist([1.0, 2.0, 3.0, 4.0])
        assert bootstrap_quantile(dist, 0.5) == 2.0

    def test_boundary_below_one_over_b(self):
        dist = _scalar_dist([5.0, 1.0, 3.0, 9.0])
        assert bootstrap_quantile(dist, 0.2) == 1.0

    def test_uniform_quantile_oracle(self):
        values = derive_stream(12).uniform(0, 1, 100000)
        assert empirical_quantile(values, 0.9) == pytest.approx(0.9, abs=0.01)

    def test_vector_replicates_unsupported(self):
        s = scalar_sample(np.arange(6.0))
        plan = BlockPlan(n=6, p=2)
        dist = bootstrap_distribution(s, plan, 8, MeanStatistic(), seed=3)
        with pytest.raises(UnsupportedStatisticError):
            bootstrap_quantile(dist, 0.5)

    def test_level_bounds(self):
        dist = _scalar_dist([1.0, 2.0])
        with pytest.raises(ValueError):
            bootstrap_quantile(dist, 1.0)


def _scalar_dist(values):
    from blockboot.bootstrap import BootstrapDistribution

    return BootstrapDistribution(np.asarray(values, dtype=np.float64),
                                 B=len(values), seed=0, statistic_id="test")


class TestLongRunVariance:
    def test_constant_sample_gives_zero(self):
        s = scalar_sample(np.full(60, 2.5))
        assert long_run_variance_estimate(s, BlockPlan(n=60, p=5)) == 0.0

    def test_iid_normal_matches_unit_variance(self):
        cfg = ProcessConfig(kind="iid", seed=31)
        s = generate_real(cfg, 100000)
        est = long_run_variance_estimate(s, BlockPlan(n=100000, p=10))
        assert est == pytest.approx(1.0, abs=0.05)

    def test_ar1_matches_autocovariance_sum_oracle(self):
        cfg = ProcessConfig(kind="ar1-real", phi=0.5, seed=32)
        s = generate_real(cfg, 100000)
        plan = block_length_schedule(100000)
        est = long_run_variance_estimate(s, plan)
        target = ar1_long_run_variance(0.5)
        assert abs(est - target) / target < 0.10

    def test_shift_invariance_is_exact_for_representable_shifts(self):
        # dyadic data, dyadic shift, power-of-two kp: every step is exact
        rng = derive_stream(33)
        values = rng.integers(-8, 8, 1024) * 0.25
        s = scalar_sample(values)
        shifted = scalar_sample(values + 3.5)
        plan = BlockPlan(n=1024, p=8)
        assert long_run_variance_estimate(s, plan) == long_run_variance_estimate(shifted, plan)


class TestLongRunCovarianceProjection:
    def test_zero_direction(self):
        rng = derive_stream(34)
        s = scalar_sample(rng.standard_normal(50))
        plan = BlockPlan(n=50, p=5)
        zero = GridFunction.scalar(0.0)
        one = GridFunction.scalar(1.0)
        assert long_run_covariance_projection(s, plan, zero, one) == 0.0

    def test_diagonal_is_nonnegative_and_symmetric(self):
        rng = derive_stream(35)
        grid = np.linspace(0, 1, 8)
        from blockboot import trapezoid_weights

        w = trapezoid_weights(grid)
        s = HilbertSample(grid, w, rng.standard_normal((40, 8)))
        plan = BlockPlan(n=40, p=4)
        x = GridFunction(grid, rng.standard_normal(8), w)
        y = GridFunction(grid, rng.standard_normal(8), w)
        assert long_run_covariance_projection(s, plan, x, x) >= 0.0
        assert long_run_covariance_projection(s, plan, x, y) == \
            long_run_covariance_projection(s, plan, y, x)

    def test_scalar_unit_direction_reduces_to_variance_estimate(self):
        rng = derive_stream(36)
        s = scalar_sample(rng.standard_normal(60))
        plan = BlockPlan(n=60, p=6)
        one = GridFunction.scalar(1.0)
        assert long_run_covariance_projection(s, plan, one, one) == \
            long_run_variance_estimate(s, plan)


class TestTwoSampleTest:
    def test_identical_samples_never_reject(self):
        rng = derive_stream(37)
        s = scalar_sample(rng.standard_normal(48))
        plan = BlockPlan(n=48, p=4)
        result = two_sample_test(s, s, plan, plan, B=64, seed=2, level=0.05)
        assert result["statistic"] == 0.0
        assert result["reject"] is False

    def test_obvious_shift_rejects(self):
        rng = derive_stream(38)
        x = scalar_sample(rng.standard_normal(200))
        y = scalar_sample(rng.standard_normal(200) + 10.0)
        plan = BlockPlan(n=200, p=5)
        result = two_sample_test(x, y, plan, plan, B=200, seed=3, level=0.05)
        assert result["reject"] is True
        assert result["p_value"] <= 1.0 / 201.0 + 1e-12
