import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pcekit.sampling import (
    empirical_distribution,
    latin_hypercube,
    percentile_values,
    rmse,
    rrmse,
    summarize,
    write_cdf_csv,
    write_histogram_csv,
    write_samples_csv,
)


def stratum_of(x, n):
    return min(int((x + 1.0) / 2.0 * n), n - 1)


class TestLatinHypercube:
    def test_total_point_count(self):
        design = latin_hypercube(10, 4, repeats=300, seed=1)
        assert design.points.shape == (3000, 4)
        assert np.all(design.points >= -1.0) and np.all(design.points < 1.0)

    def test_single_point_design(self):
        design = latin_hypercube(1, 3, repeats=1, seed=5)
        assert design.points.shape == (1, 3)
        assert np.all(np.abs(design.points) <= 1.0)

    def test_each_stratum_occupied_exactly_once(self):
        design = latin_hypercube(10, 4, repeats=7, seed=2)
        for r in range(7):
            block = design.points[r * 10:(r + 1) * 10]
            for j in range(4):
                occupancy = np.bincount(
                    [stratum_of(x, 10) for x in block[:, j]], minlength=10
                )
                assert occupancy.tolist() == [1] * 10

    @given(st.integers(min_value=0, max_value=2**63 - 1))
    def test_stratification_for_arbitrary_seeds(self, seed):
        design = latin_hypercube(8, 3, repeats=2, seed=seed)
        for r in range(2):
            block = design.points[r * 8:(r + 1) * 8]
            for j in range(3):
                cells = sorted(stratum_of(x, 8) for x in block[:, j])
                assert cells == list(range(8))

    def test_seed_determinism(self):
        a = latin_hypercube(16, 5, repeats=3, seed=99)
        b = latin_hypercube(16, 5, repeats=3, seed=99)
        assert np.array_equal(a.points, b.points)
        c = latin_hypercube(16, 5, repeats=3, seed=100)
        assert not np.array_equal(a.points, c.points)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            latin_hypercube(0, 2)
        with pytest.raises(ValueError):
            latin_hypercube(2, 0)
        with pytest.raises(ValueError):
            latin_hypercube(2, 2, repeats=0)


class TestErrorMetrics:
    def test_identical_vectors(self):
        assert rmse([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0
        assert rrmse([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_constant_offset(self):
        truths = np.array([5.0, -2.0, 9.0])
        assert rmse(truths + 0.75, truths) == pytest.approx(0.75)
        assert rmse(truths - 0.75, truths) == pytest.approx(0.75)

    def test_hand_computed_value(self):
        assert rmse([1.0, 2.0, 3.0], [2.0, 2.0, 5.0]) == pytest.approx(math.sqrt(5 / 3))

    def test_uniform_relative_error(self):
        truths = np.array([3.0, -7.0, 0.5])
        assert rrmse(1.1 * truths, truths) == pytest.approx(0.1, abs=1e-13)

    def test_single_pair(self):
        assert rrmse([2.0], [4.0]) == pytest.approx(0.5)

    def test_zero_truth_names_index(self):
        with pytest.raises(ValueError, match="index 1"):
            rrmse([1.0, 2.0], [1.0, 0.0])

    def test_shape_errors(self):
        with pytest.raises(ValueError, match="mismatch"):
            rmse([1.0], [1.0, 2.0])
        with pytest.raises(ValueError, match="empty"):
            rmse([], [])
        with pytest.raises(ValueError):
            rrmse([], [])

    @given(
        st.lists(st.floats(min_value=-100, max_value=100), min_size=1, max_size=20),
        st.floats(min_value=0.1, max_value=50).filter(lambda c: abs(c) > 1e-3),
    )
    def test_rrmse_scale_invariance(self, values, scale):
        predictions = np.asarray(values)
        truths = predictions + 1.5
        if np.any(np.abs(truths) < 1e-6):
            return
        assert rrmse(scale * predictions, scale * truths) == pytest.approx(
            rrmse(predictions, truths), abs=1e-14, rel=1e-12
        )

    def test_rmse_is_positive_unless_equal(self):
        rng = np.random.Generator(np.random.PCG64(0))
        a = rng.normal(size=40)
        b = a.copy()
        b[13] += 1e-9
        assert rmse(a, b) > 0.0


class TestSummaries:
    def test_median_by_interpolation(self):
        stats = summarize(np.arange(1.0, 101.0))
        assert stats.p50 == pytest.approx(50.5)
        assert stats.p10 == pytest.approx(10.9)  # h = 99 * 0.1 + 1

    def test_constant_samples(self):
        stats = summarize(np.full(25, 3.5))
        assert stats.std_dev == 0.0
        assert stats.p10 == stats.p90 == stats.sample_min == stats.sample_max == 3.5

    def test_analytic_substitution_is_tagged(self):
        samples = np.array([1.0, 2.0, 3.0, 4.0])
        stats = summarize(samples, analytic_mean=2.5, analytic_std=1.0)
        assert stats.mean == 2.5 and stats.std_dev == 1.0
        assert stats.derivations["mean"] == "analytic"
        assert stats.derivations["p50"] == "empirical"
        empirical = summarize(samples)
        assert empirical.derivations["mean"] == "empirical"
        assert empirical.std_dev == pytest.approx(np.std(samples, ddof=1))

    def test_percentiles_are_monotone(self):
        rng = np.random.Generator(np.random.PCG64(21))
        for _ in range(20):
            stats = summarize(rng.normal(size=101))
            ordered = [
                stats.sample_min, stats.p10, stats.p25, stats.p50,
                stats.p75, stats.p90, stats.sample_max,
            ]
            assert ordered == sorted(ordered)

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            summarize([1.0])

    def test_percentile_helper_matches_convention(self):
        samples = np.array([10.0, 20.0, 30.0, 40.0])
        # h = (4 - 1) * 0.5 + 1 = 2.5 -> halfway between 20 and 30
        assert percentile_values(samples, [50])[0] == pytest.approx(25.0)


class TestEmpiricalDistribution:
    def test_two_bins(self):
        dist = empirical_distribution([0.0, 1.0], bins=2)
        assert dist.counts.tolist() == [1, 1]
        assert dist.bin_edges[0] == 0.0 and dist.bin_edges[-1] == 1.0

    def test_cdf_ends_at_one(self):
        dist = empirical_distribution([3.0, 1.0, 2.0], bins=3)
        assert dist.values.tolist() == [1.0, 2.0, 3.0]
        assert dist.cumulative[-1] == 1.0
        assert dist.counts.sum() == 3

    def test_degenerate_samples(self):
        dist = empirical_distribution([2.0, 2.0, 2.0], bins=4)
        assert dist.counts.sum() == 3

    def test_guards(self):
        with pytest.raises(ValueError):
            empirical_distribution([], bins=2)
        with pytest.raises(ValueError):
            empirical_distribution([1.0], bins=0)


class TestCsvExports:
    def test_samples_csv(self):
        buffer = io.StringIO()
        write_samples_csv(
            buffer,
            ["a", "b"],
            np.array([[1.0, 2.0], [3.0, 4.0]]),
            ["y"],
            np.array([[10.0], [20.0]]),
            comments=["seed=1"],
        )
        lines = buffer.getvalue().strip().splitlines()
        assert lines[0] == "# seed=1"
        assert lines[1] == "a,b,y"
        assert lines[2].split(",") == ["1", "2", "10"]

    def test_cdf_csv(self):
        buffer = io.StringIO()
        dist = empirical_distribution([4.0, 2.0], bins=2)
        write_cdf_csv(buffer, {"y": dist})
        lines = buffer.getvalue().strip().splitlines()
        assert lines[0] == "y_value,y_cumulative_probability"
        assert lines[1].split(",") == ["2", "0.5"]
        assert lines[2].split(",") == ["4", "1"]

    def test_histogram_csv(self):
        buffer = io.StringIO()
        dist = empirical_distribution([0.0, 0.25, 1.0], bins=2)
        write_histogram_csv(buffer, {"y": dist})
        lines = buffer.getvalue().strip().splitlines()
        assert lines[0] == "output,bin_left,bin_right,count"
        assert len(lines) == 3
        assert lines[1].startswith("y,0,0.5,2")
