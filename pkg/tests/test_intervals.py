"""Tests for bias budgets and the naive, honest and k-snooping interval constructors."""

from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lib.errors import ConfigurationError, DomainError, ExtrapolationError
from lib.intervals import (
    BiasBudget, bias_bound, bias_functional, honest_ci_index, honest_ci_quantile, naive_ci_index,
    naive_ci_quantile, naive_z, rule_of_thumb_budget, snooping_ci_index, snooping_ci_quantile,
    snooping_grid, worst_case_bias,
)
from lib.tail_estimators import Sample, hill, weissman_quantile


class TestBiasBound:

    def test_examples(self):
        assert bias_bound(1.0, 1.0) == 0.5
        assert bias_bound(0.0, 3.0) == 0.0

    def test_nonpositive_rho(self):
        with pytest.raises(DomainError, match="rho"):
            bias_bound(1.0, 0.0)

    def test_negative_scale(self):
        with pytest.raises(DomainError):
            bias_bound(-1.0, 1.0)

    def test_supremum_attained_at_one(self):
        r = np.linspace(1e-5, 1.0, 100_000)
        brute = np.max(np.sqrt(r) * 2.0 * r ** 0.5 / 1.5)
        assert abs(brute - bias_bound(2.0, 0.5)) < 1e-6

    @pytest.mark.parametrize("A, rho", [(1.0, 1.0), (2.0, 0.5), (0.5, 2.0)])
    @pytest.mark.parametrize("r", [0.25, 0.5, 1.0])
    def test_bias_functional_matches_closed_form(self, A, rho, r):
        numeric = bias_functional(r, lambda v: A * v ** rho)
        assert_allclose(numeric, worst_case_bias(r, A, rho), rtol=1e-4)


class TestRuleOfThumb:

    def test_examples(self):
        budget = rule_of_thumb_budget(1.0, 100)
        assert (budget.A, budget.rho, budget.bound) == pytest.approx((3.0, 2.0, 1.0))
        budget = rule_of_thumb_budget(0.5, 400)
        assert (budget.A, budget.rho, budget.bound) == pytest.approx((2.0, 1.0, 1.0))
        assert budget.provenance == "rule-of-thumb"

    def test_bound_is_ten_percent(self):
        for xi, k in [(0.3, 17), (1.7, 250), (2.5, 999)]:
            assert_allclose(rule_of_thumb_budget(xi, k).bound / math.sqrt(k), 0.1 * xi, rtol=1e-12)

    def test_nonpositive_estimate(self):
        with pytest.raises(DomainError):
            rule_of_thumb_budget(0.0, 100)


class TestNaiveZ:

    def test_rounded_normal_quantile(self):
        assert naive_z(0.05) == 1.96
        assert naive_z(0.10) == 1.64
        assert naive_z(0.01) == 2.58

    def test_invalid_level(self):
        with pytest.raises(ConfigurationError):
            naive_z(1.0)


class TestIndexIntervals:

    def test_naive_formula(self, pareto_grid):
        xi = hill(pareto_grid, 100).xi_hat
        interval = naive_ci_index(pareto_grid, 100)
        assert_allclose([interval.lo, interval.hi], [xi - 0.196 * xi, xi + 0.196 * xi], rtol=1e-12)
        assert interval.method == "HN"

    def test_naive_point_interval_for_zero_estimate(self):
        interval = naive_ci_index(Sample.from_values([1, 2, 5, 5, 5]), 2)
        assert interval.lo == interval.hi == 0.0

    def test_naive_width_halves_when_k_quadruples(self, pareto_grid):
        narrow = naive_ci_index(pareto_grid, 400)
        wide = naive_ci_index(pareto_grid, 100)
        xi_ratio = hill(pareto_grid, 400).xi_hat / hill(pareto_grid, 100).xi_hat
        assert_allclose(narrow.length / wide.length, 0.5 * xi_ratio, rtol=1e-12)

    def test_zero_bias_reduction(self, pareto_sample):
        naive = naive_ci_index(pareto_sample, 150, z=1.96)
        honest = honest_ci_index(pareto_sample, 150, 1.96, BiasBudget.zero())
        assert_allclose([honest.lo, honest.hi], [naive.lo, naive.hi], rtol=1e-12)

    def test_honest_formula(self, pareto_grid):
        xi = hill(pareto_grid, 100).xi_hat
        interval = honest_ci_index(pareto_grid, 100, 1.96, BiasBudget.from_parameters(2.0, 1.0))
        half = (xi * 1.96 + 1.0) / 10.0
        assert_allclose([interval.lo, interval.hi], [xi - half, xi + half], rtol=1e-12)

    def test_honest_contains_naive(self, pareto_sample):
        budget = rule_of_thumb_budget(hill(pareto_sample, 200).xi_hat, 200)
        honest = honest_ci_index(pareto_sample, 200, 2.54, budget)
        naive = naive_ci_index(pareto_sample, 200, z=2.54)
        assert honest.lo <= naive.lo and naive.hi <= honest.hi

    def test_honest_needs_positive_critical_value(self, pareto_sample):
        with pytest.raises(DomainError):
            honest_ci_index(pareto_sample, 100, 0.0, BiasBudget.zero())

    def test_scale_invariance(self, pareto_sample):
        base = honest_ci_index(pareto_sample, 200, 1.96, BiasBudget.from_parameters(1.0, 1.0))
        scaled = honest_ci_index(pareto_sample.scaled(250.0), 200, 1.96, BiasBudget.from_parameters(1.0, 1.0))
        assert_allclose([scaled.lo, scaled.hi], [base.lo, base.hi], rtol=1e-12)


class TestSnoopingIndex:

    def test_grid(self):
        assert snooping_grid(10, 0.5) == [5, 6, 7, 8, 9, 10]
        assert snooping_grid(9, 1 / 3) == [3, 4, 5, 6, 7, 8, 9]
        assert snooping_grid(7, 1.0) == [7]

    def test_grid_rejects_bad_lower_end(self):
        with pytest.raises(ConfigurationError):
            snooping_grid(10, 0.0)

    def test_unit_lower_end_equals_honest(self, pareto_sample):
        snoop = snooping_ci_index(pareto_sample, 300, 1.0, 1.96)
        budget = rule_of_thumb_budget(hill(pareto_sample, 300).xi_hat, 300)
        honest = honest_ci_index(pareto_sample, 300, 1.96, budget)
        assert (snoop.lo, snoop.hi) == (honest.lo, honest.hi)
        assert snoop.k_range == (300, 300)

    def test_subset_of_every_member(self, pareto_sample):
        snoop = snooping_ci_index(pareto_sample, 200, 0.5, 2.54)
        assert not snoop.is_empty
        assert snoop.k_range == (100, 200)
        for k in range(100, 201):
            member = honest_ci_index(pareto_sample, k, 2.54, rule_of_thumb_budget(hill(pareto_sample, k).xi_hat, k))
            assert member.lo <= snoop.lo and snoop.hi <= member.hi
        assert snoop.length <= min(
            honest_ci_index(pareto_sample, k, 2.54, rule_of_thumb_budget(hill(pareto_sample, k).xi_hat, k)).length
            for k in range(100, 201))

    def test_pareto_grid_nonempty(self, pareto_grid):
        snoop = snooping_ci_index(pareto_grid, 500, 0.5, 2.54)
        assert not snoop.is_empty
        assert snoop.contains(1.0)
        assert "rule_of_thumb_per_k" in snoop.flags

    def test_empty_intersection_is_flagged(self, pareto_grid):
        snoop = snooping_ci_index(pareto_grid, 500, 0.5, 1e-9, budget=BiasBudget.zero())
        assert snoop.is_empty
        assert "empty" in snoop.flags
        assert snoop.length == 0.0
        assert not snoop.contains(1.0)
        record = snoop.to_record()
        assert record["lo"] is None and record["k_range"] == [250, 500]


class TestQuantileIntervals:

    def test_naive_formula_at_unit_log_ratio(self, pareto_grid):
        k = 100
        p = k / (pareto_grid.n * math.e)
        estimate = weissman_quantile(pareto_grid, k, p)
        interval = naive_ci_quantile(pareto_grid, k, p)
        rel = 1.96 * estimate.xi_source.xi_hat / 10.0
        assert_allclose([interval.lo, interval.hi], [estimate.q_hat * (1 - rel), estimate.q_hat * (1 + rel)],
                        rtol=1e-12)

    def test_naive_relative_width_scales_with_log_ratio(self, pareto_grid):
        k = 100
        first = naive_ci_quantile(pareto_grid, k, k / (pareto_grid.n * math.e))
        second = naive_ci_quantile(pareto_grid, k, k / (pareto_grid.n * math.e ** 3))
        assert_allclose(second.length / second.estimate, 3.0 * first.length / first.estimate, rtol=1e-12)

    def test_naive_extrapolation_direction(self, pareto_sample):
        with pytest.raises(ExtrapolationError):
            naive_ci_quantile(pareto_sample, 20, 0.01)

    def test_zero_bias_reduction_at_unit_log_ratio(self, pareto_sample):
        k = 200
        p = k / (pareto_sample.n * math.e)
        honest = honest_ci_quantile(pareto_sample, k, p, 1.96, BiasBudget.zero())
        naive = naive_ci_quantile(pareto_sample, k, p, z=1.96)
        assert_allclose([honest.lo, honest.hi], [naive.lo, naive.hi], rtol=1e-12)

    def test_honest_relative_half_width(self, pareto_sample):
        k = 100
        p = k / (pareto_sample.n * math.e ** 2)
        interval = honest_ci_quantile(pareto_sample, k, p, 1.96, BiasBudget.from_parameters(2.0, 1.0))
        xi = hill(pareto_sample, k).xi_hat
        rel = 2.0 * (xi * 1.96 + 1.0) / 10.0
        assert_allclose((interval.hi - interval.estimate) / interval.estimate, rel, rtol=1e-12)

    def test_lower_endpoint_clamped(self, pareto_sample):
        interval = honest_ci_quantile(pareto_sample, 10, 1e-6, 3.0, BiasBudget.from_parameters(50.0, 1.0))
        assert interval.lo == 0.0
        assert interval.hi > interval.estimate

    def test_extrapolation_direction(self, pareto_sample):
        with pytest.raises(ExtrapolationError):
            honest_ci_quantile(pareto_sample, 20, 0.01, 1.96, BiasBudget.zero())

    def test_scale_equivariance(self, pareto_sample):
        budget = BiasBudget.from_parameters(1.0, 1.0)
        base = honest_ci_quantile(pareto_sample, 200, 0.001, 1.96, budget)
        scaled = honest_ci_quantile(pareto_sample.scaled(3.0), 200, 0.001, 1.96, budget)
        assert_allclose([scaled.lo, scaled.hi], [3.0 * base.lo, 3.0 * base.hi], rtol=1e-12)

    def test_snooping_unit_lower_end(self, pareto_sample):
        snoop = snooping_ci_quantile(pareto_sample, 300, 1.0, 0.001, 1.96)
        honest = honest_ci_quantile(pareto_sample, 300, 0.001, 1.96,
                                    rule_of_thumb_budget(hill(pareto_sample, 300).xi_hat, 300))
        assert (snoop.lo, snoop.hi) == (honest.lo, honest.hi)

    def test_snooping_subset_of_members(self, pareto_sample):
        snoop = snooping_ci_quantile(pareto_sample, 200, 0.5, 0.001, 2.54)
        for k in range(100, 201):
            member = honest_ci_quantile(pareto_sample, k, 0.001, 2.54,
                                        rule_of_thumb_budget(hill(pareto_sample, k).xi_hat, k))
            assert member.lo <= snoop.lo and snoop.hi <= member.hi

    def test_snooping_pareto_grid_covers_truth(self, pareto_grid):
        snoop = snooping_ci_quantile(pareto_grid, 500, 0.5, 0.001, 2.54)
        assert not snoop.is_empty
        assert snoop.contains(1000.0)
        assert snoop.to_record()["target"] == "quantile(0.001)"
