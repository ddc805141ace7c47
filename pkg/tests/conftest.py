"""Shared fixtures: deterministic Pareto grids and seeded samples."""

from __future__ import annotations

import numpy as np
import pytest

from lib.tail_estimators import Sample


GRID_N = 10_000


@pytest.fixture(scope="session")
def pareto_grid() -> Sample:
    """Exact Pareto(1) quantile grid Y_i = (n+1)/i, i = 1..n."""
    return Sample.from_values((GRID_N + 1) / np.arange(1, GRID_N + 1))


@pytest.fixture
def pareto_sample() -> Sample:
    """Seeded Pareto(1) draw of size 2000."""
    rng = np.random.default_rng(2024)
    return Sample.from_values(1.0 / (1.0 - rng.random(2000)))


@pytest.fixture(scope="session")
def constant_spacing_sample() -> Sample:
    """Sample whose normalised log-spacings Z_1..Z_{n-1} all equal 0.7."""
    n = 400
    logs = np.zeros(n)
    for j in range(n - 2, -1, -1):
        logs[j] = logs[j + 1] + 0.7 / (j + 1)
    return Sample.from_values(np.exp(logs))


@pytest.fixture
def grid_csv(tmp_path, pareto_grid):
    """The Pareto grid written as a single-column CSV with a header."""
    path = tmp_path / "grid.csv"
    path.write_text("value\n" + "\n".join(repr(float(v)) for v in pareto_grid.values) + "\n")
    return str(path)
