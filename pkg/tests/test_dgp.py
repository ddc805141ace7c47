"""Tests for the simulation family and its sampler."""

from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lib.dgp import DgpConfig, dgp_inverse, draw_sample, true_quantile
from lib.errors import ConfigurationError, DomainError


class TestDgpConfig:

    def test_derived_parameters(self):
        cfg = DgpConfig(xi0=1.0, c0=1.0)
        assert cfg.rho == 2.0
        assert_allclose(cfg.c, 1.0 / 3.0)

    @pytest.mark.parametrize("xi0, c0", [(0.0, 0.0), (-1.0, 0.5), (1.0, -0.1)])
    def test_invalid(self, xi0, c0):
        with pytest.raises(ConfigurationError):
            DgpConfig(xi0=xi0, c0=c0)


class TestInverse:

    def test_unit_probability(self):
        assert dgp_inverse(1.0, DgpConfig(0.7, 1.0)) == 1.0

    def test_pure_pareto(self):
        assert_allclose(dgp_inverse(0.01, DgpConfig(1.0, 0.0)), 100.0, rtol=1e-12)

    def test_second_order_term(self):
        expected = 100.0 * math.exp((1.0 / 3.0) * (1.0 - 1e-4) / 2.0)
        assert_allclose(dgp_inverse(0.01, DgpConfig(1.0, 1.0)), expected, rtol=1e-12)
        assert abs(expected - 118.13) < 0.01

    def test_vectorised(self):
        values = dgp_inverse(np.array([1.0, 0.25]), DgpConfig(0.5, 0.0))
        assert_allclose(values, [1.0, 2.0])

    @pytest.mark.parametrize("t", [0.0, -0.5, 1.5])
    def test_outside_domain(self, t):
        with pytest.raises(DomainError):
            dgp_inverse(t, DgpConfig(1.0))

    def test_true_quantile(self):
        assert_allclose(true_quantile(0.01, DgpConfig(0.5, 0.0)), 10.0, rtol=1e-12)
        assert true_quantile(1.0, DgpConfig(0.5, 1.0)) == 1.0


class TestDrawSample:

    def test_deterministic(self):
        cfg = DgpConfig(1.0, 0.5)
        first = draw_sample(300, cfg, [1, 2, 3])
        second = draw_sample(300, cfg, [1, 2, 3])
        assert np.array_equal(first.values, second.values)

    def test_support_above_one(self):
        sample = draw_sample(5000, DgpConfig(0.5, 1.0), np.random.default_rng(4))
        assert sample.values.min() >= 1.0

    def test_too_small(self):
        with pytest.raises(ConfigurationError):
            draw_sample(1, DgpConfig(1.0), 0)

    def test_large_sample_quantile(self):
        sample = draw_sample(1_000_000, DgpConfig(1.0, 0.0), 123)
        assert abs(np.quantile(sample.values, 0.99) / 100.0 - 1.0) < 0.05

    def test_empirical_cdf_matches(self):
        cfg = DgpConfig(1.0, 1.0)
        values = np.sort(draw_sample(1_000_000, cfg, 321).values)
        grid = np.linspace(0.02, 0.98, 49)
        ecdf = np.searchsorted(values, dgp_inverse(grid, cfg), side="right") / values.size
        assert np.max(np.abs(ecdf - (1.0 - grid))) < 0.01
