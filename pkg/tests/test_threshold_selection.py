"""Tests for log-spacings, the T_k statistic, the C_k criterion and select_k."""

from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lib.dgp import DgpConfig, draw_sample
from lib.errors import BoundsError, ConfigurationError, DegenerateEstimateError
from lib.tail_estimators import Sample
from lib.threshold_selection import (
    SelectionConfig, c_criterion, criterion_trace, guillou_weights, select_k, selection_bounds,
    spacings, t_statistic,
)


class TestGuillouWeights:

    def test_k_four(self):
        assert list(guillou_weights(4)) == [3.0, 1.0, -1.0, -3.0]

    def test_k_one(self):
        assert list(guillou_weights(1)) == [0.0]

    def test_antisymmetric_and_zero_sum(self):
        for k in range(1, 501):
            w = guillou_weights(k)
            assert w.sum() == 0.0
            assert np.array_equal(w, -w[::-1])

    def test_squared_norm(self):
        for k in (2, 10, 333):
            assert np.dot(guillou_weights(k), guillou_weights(k)) == k * (k * k - 1) / 3


class TestSpacings:

    def test_constant_spacings(self, constant_spacing_sample):
        assert_allclose(spacings(constant_spacing_sample).z, 0.7, rtol=1e-9)

    def test_nan_past_positive_values(self):
        z = spacings(Sample.from_values([8.0, 4.0, 2.0, 0.0, -1.0])).z
        assert np.isfinite(z[:2]).all()
        assert np.isnan(z[2:]).all()


class TestTStatistic:

    def test_constant_spacings_give_zero(self, constant_spacing_sample):
        assert abs(t_statistic(constant_spacing_sample, 50)) < 1e-10

    def test_k_one_is_degenerate(self, pareto_sample):
        with pytest.raises(DegenerateEstimateError):
            t_statistic(pareto_sample, 1)

    def test_vanishing_hill_estimate(self):
        with pytest.raises(DegenerateEstimateError):
            t_statistic(Sample.from_values([5.0, 5.0, 5.0, 1.0]), 2)

    def test_out_of_range(self, pareto_sample):
        with pytest.raises(BoundsError):
            t_statistic(pareto_sample, pareto_sample.n)

    def test_trace_agrees_with_direct_sum(self, pareto_sample):
        trace = criterion_trace(pareto_sample, 2, 400)
        for k in (2, 37, 400):
            assert np.isfinite(t_statistic(pareto_sample, k))
        # a one-point window reproduces |T_k| for k = 2, 3 (l = 1 covers [k-1, k+1] truncated at 2)
        t2, t3 = t_statistic(pareto_sample, 2), t_statistic(pareto_sample, 3)
        assert_allclose(trace.values[0], np.sqrt((t2 ** 2 + t3 ** 2) / 2), rtol=1e-9)

    def test_standard_normal_under_exact_pareto(self):
        rng = np.random.default_rng(31)
        draws = np.array([
            t_statistic(Sample.from_values(1.0 / (1.0 - rng.random(5000))), 200)
            for _ in range(2000)
        ])
        assert abs(draws.mean()) < 0.07
        assert abs(draws.var() - 1.0) < 0.15


class TestCriterion:

    def test_constant_window(self, constant_spacing_sample):
        assert c_criterion(constant_spacing_sample, 100) < 1e-10

    def test_window_average_of_squares(self, pareto_sample):
        k = 20
        ts = np.array([t_statistic(pareto_sample, j) for j in range(k - 10, k + 11)])
        assert_allclose(c_criterion(pareto_sample, k), np.sqrt(np.mean(ts ** 2)), rtol=1e-9)

    def test_trace_length_equals_bracket(self, pareto_sample):
        trace = criterion_trace(pareto_sample, 20, 1979)
        assert len(trace.ks) == len(trace.values) == 1960

    def test_mean_square_near_one_under_exact_pareto(self):
        rng = np.random.default_rng(5)
        squares = [
            c_criterion(Sample.from_values(1.0 / (1.0 - rng.random(1000))), 100) ** 2
            for _ in range(500)
        ]
        assert abs(np.mean(squares) - 1.0) < 0.15


class TestSelectK:

    def test_bounds(self):
        assert selection_bounds(500, SelectionConfig()) == (5, 495)
        assert selection_bounds(100, SelectionConfig()) == (2, 99)

    def test_empty_bracket(self):
        with pytest.raises(ConfigurationError):
            selection_bounds(2, SelectionConfig(k_min_frac=0.6, k_max_frac=0.7))

    @pytest.mark.parametrize("kwargs", [{"c_crit": 1.0}, {"k_min_frac": 0.5, "k_max_frac": 0.4}])
    def test_invalid_config(self, kwargs):
        with pytest.raises(ConfigurationError):
            SelectionConfig(**kwargs)

    def test_fallback_when_rule_never_met(self, constant_spacing_sample):
        choice = select_k(constant_spacing_sample)
        assert choice.fallback
        assert choice.k == choice.k_hi == 396

    def test_rule_holds_on_suffix(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            sample = draw_sample(500, DgpConfig(xi0=1.0, c0=1.0), rng)
            choice = select_k(sample)
            assert 5 <= choice.k <= 495
            assert len(choice.trace.ks) == choice.k_hi - choice.k_lo + 1
            if not choice.fallback:
                index = choice.k - choice.k_lo
                assert (choice.trace.values[index:] > choice.c_crit).all()
                if index > 0:
                    assert choice.trace.values[index - 1] <= choice.c_crit

    def test_positivity_truncation(self):
        values = np.concatenate([1.0 / (1.0 - np.random.default_rng(3).random(150)), -np.ones(50)])
        choice = select_k(Sample.from_values(values))
        assert choice.k_hi == 149

    def test_deterministic(self, pareto_sample):
        first, second = select_k(pareto_sample), select_k(pareto_sample)
        assert first.k == second.k
        assert np.array_equal(first.trace.values, second.trace.values)

    @pytest.mark.slow
    def test_second_order_bias_pulls_threshold_down(self):
        rng = np.random.default_rng(11)
        biased = [select_k(draw_sample(1000, DgpConfig(1.0, 1.0), rng)).k for _ in range(200)]
        pareto = [select_k(draw_sample(1000, DgpConfig(1.0, 0.0), rng)).k for _ in range(200)]
        assert np.median(biased) < np.median(pareto)
