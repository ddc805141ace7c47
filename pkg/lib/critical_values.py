"""
Monte Carlo critical values for the honest and k-snooping intervals.

The limit of the Hill path is G(r) = r^-1 * int_0^r (W(s)/s - W(r)/r) ds for a standard
Wiener process W. On the grid t_i = i/m the left-endpoint sum starting at t_1 reduces to
G(t_i) = (sum_{j<=i} W(t_j)/j - W(t_i)) / t_i, so one cumulative sum per path yields the
whole process and a reversed running maximum yields the supremum over every [r_lower, 1].
"""
from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from lib.data.critical_values import (
    BETAS, MIN_N_SIMS, R_LOWERS, REFERENCE_N_SIMS, REFERENCE_N_STEPS, REFERENCE_QUANTILES,
)
from lib.errors import ConfigurationError, InputError, MissingEntryError, ResolutionError


logger = logging.getLogger(__name__)

RationalLike = Union[Fraction, float, int, str]

BLOCK_SIZE = 250
TABLE_HEADER = "# honest-tail critical values"
SIMULATED = "simulated"
REFERENCE = "reference"


def as_fraction(value: RationalLike) -> Fraction:
    """
    Parse "1/3", 0.5 or Fraction(2, 3) into a Fraction with a bounded denominator.
    """
    try:
        return Fraction(value).limit_denominator(10 ** 6)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigurationError(f"Not a rational number: {value!r}") from exc


def format_fraction(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True, eq=False)
class WienerPath:
    """
    W(t_i) on t_i = i/m, i = 1..m.

    :param seed: Entropy the path's generator was seeded with, if known.
    """
    steps: int
    values: np.ndarray
    seed: Optional[Tuple[int, ...]] = None


@dataclass(frozen=True)
class SupStatistic:
    value: float
    r_lower: float


@dataclass(frozen=True)
class CriticalValueTable:
    """
    Quantiles q(r_lower, beta) with their provenance.

    :param source: "simulated" for a table built here, "reference" for the shipped grid.
    """
    entries: Dict[Tuple[Fraction, float], float]
    n_sims: int
    n_steps: int
    seed: Optional[int]
    source: str = SIMULATED

    def r_lowers(self) -> List[Fraction]:
        return sorted({r for r, _ in self.entries}, reverse=True)

    def betas(self) -> List[float]:
        return sorted({b for _, b in self.entries}, reverse=True)


@dataclass(frozen=True)
class CriticalValue:
    q: float
    r_lower: float
    beta: float
    interpolated: bool = False


def simulate_wiener(m: int, rng: Union[np.random.Generator, int, Sequence[int]],
                    seed: Optional[Tuple[int, ...]] = None) -> WienerPath:
    """
    Cumulative sum of m i.i.d. N(0, 1/m) increments.

    :param m: Number of steps, m >= 2.
    :param rng: Generator, or entropy to seed one with (recorded on the path).
    :param seed: Entropy record to attach when passing a ready Generator.
    :return: WienerPath
    """
    if m < 2:
        raise ConfigurationError(f"A Wiener path needs at least 2 steps, got {m}")
    if not isinstance(rng, np.random.Generator):
        seed = tuple(rng) if isinstance(rng, (list, tuple)) else (int(rng),)
        rng = np.random.default_rng(list(seed))
    increments = rng.standard_normal(m) / math.sqrt(m)
    return WienerPath(steps=m, values=np.cumsum(increments), seed=seed)


def _process_values(path: WienerPath) -> np.ndarray:
    """
    G(t_i) for i = 1..m.
    """
    i = np.arange(1, path.steps + 1)
    running = np.cumsum(path.values / i)
    return (running - path.values) / (i / path.steps)


def gaussian_G(path: WienerPath, r: float) -> float:
    """
    Discretised G(r) at the grid point nearest to r.

    :param path: The simulated Wiener path.
    :param r: Point in (0, 1], not below the first grid point 1/m.
    :return: float
    """
    if not r <= 1:
        raise ResolutionError(f"r must not exceed 1, got {r}")
    if r * path.steps < 1 - 1e-9:
        raise ResolutionError(f"r = {r} lies below the first grid point 1/{path.steps}")
    i = max(1, int(round(r * path.steps)))
    running = np.cumsum(path.values[:i] / np.arange(1, i + 1))[-1]
    return float((running - path.values[i - 1]) / (i / path.steps))


def _first_index(r_lower: RationalLike, m: int) -> int:
    """
    One-based index of the first grid point at or above r_lower.
    """
    fraction = as_fraction(r_lower)
    if not 0 < fraction <= 1:
        raise ConfigurationError(f"r_lower must lie in (0, 1], got {r_lower}")
    index = max(1, math.ceil(fraction * m))
    if index > m:
        raise ResolutionError(f"No grid point of a {m}-step path lies in [{r_lower}, 1]")
    return index


def _nested_sups(path: WienerPath, starts: np.ndarray) -> np.ndarray:
    """
    sup of sqrt(r) G(r) over [t_s, 1] for every one-based start index s.
    """
    grid = np.arange(1, path.steps + 1) / path.steps
    scaled = np.sqrt(grid) * _process_values(path)
    suffix_max = np.maximum.accumulate(scaled[::-1])[::-1]
    return suffix_max[starts - 1]


def sup_statistic(path: WienerPath, r_lower: RationalLike) -> SupStatistic:
    """
    sup_{r in [r_lower, 1]} sqrt(r) G(r) over the path grid.

    :param path: The simulated Wiener path.
    :param r_lower: Lower end of the range, in (0, 1].
    :return: SupStatistic
    """
    start = _first_index(r_lower, path.steps)
    value = _nested_sups(path, np.array([start]))[0]
    return SupStatistic(value=float(value), r_lower=float(as_fraction(r_lower)))


def _sup_block(job: Tuple[int, int, int, int, np.ndarray]) -> np.ndarray:
    first, last, m, seed, starts = job
    out = np.empty((last - first, starts.size))
    for row, draw in enumerate(range(first, last)):
        path = simulate_wiener(m, (seed, draw))
        out[row] = _nested_sups(path, starts)
    return out


def simulate_sups(r_lowers: Sequence[RationalLike], n_sims: int, m: int, seed: int,
                  workers: int = 1, progress: bool = True) -> np.ndarray:
    """
    Draws of the supremum for every r_lower, one row per simulated path.

    Draw i uses a generator seeded with (seed, i), so the result does not depend on
    the number of workers.

    :return: np.ndarray of shape (n_sims, len(r_lowers))
    """
    if n_sims < 1:
        raise ConfigurationError(f"n_sims must be positive, got {n_sims}")
    starts = np.array([_first_index(r, m) for r in r_lowers])
    jobs = [(first, min(first + BLOCK_SIZE, n_sims), m, seed, starts)
            for first in range(0, n_sims, BLOCK_SIZE)]
    logger.info("Simulating %d paths of %d steps with %d worker(s)", n_sims, m, workers)
    with tqdm(total=n_sims, desc="sup draws", unit="path", disable=not progress) as bar:
        blocks = []
        if workers > 1:
            with Pool(workers) as pool:
                for block in pool.imap(_sup_block, jobs):
                    blocks.append(block)
                    bar.update(block.shape[0])
        else:
            for job in jobs:
                block = _sup_block(job)
                blocks.append(block)
                bar.update(block.shape[0])
    return np.vstack(blocks)


def empirical_quantile(draws: np.ndarray, level: float) -> float:
    """
    Order statistic at one-based index ceil(level * n).
    """
    ordered = np.sort(draws)
    index = min(ordered.size, max(1, math.ceil(round(level * ordered.size, 9))))
    return float(ordered[index - 1])


def build_table(r_lowers: Sequence[RationalLike], betas: Sequence[float], n_sims: int, m: int,
                seed: int, workers: int = 1, progress: bool = True) -> CriticalValueTable:
    """
    Tabulate the (1 - beta/2) empirical quantiles of the supremum.

    Every simulated path serves all r_lower rows through the nested suprema.

    :param r_lowers: Rows, each in (0, 1].
    :param betas: Columns, each in (0, 1).
    :param n_sims: Number of paths, at least MIN_N_SIMS.
    :param m: Steps per path.
    :param seed: Master seed.
    :param workers: Worker processes.
    :return: CriticalValueTable
    """
    return build_table_with_draws(r_lowers, betas, n_sims, m, seed, workers, progress)[0]


def build_table_with_draws(r_lowers: Sequence[RationalLike], betas: Sequence[float], n_sims: int, m: int,
                           seed: int, workers: int = 1,
                           progress: bool = True) -> Tuple[CriticalValueTable, np.ndarray]:
    """
    build_table() that also hands back the supremum draws for histograms.
    """
    if n_sims < MIN_N_SIMS:
        raise ConfigurationError(f"n_sims must be at least {MIN_N_SIMS}, got {n_sims}")
    if not r_lowers or not betas:
        raise ConfigurationError("Need at least one r_lower and one beta")
    for beta in betas:
        if not 0 < beta < 1:
            raise ConfigurationError(f"beta must lie in (0, 1), got {beta}")
    rows = [as_fraction(r) for r in r_lowers]
    draws = simulate_sups(rows, n_sims, m, seed, workers=workers, progress=progress)
    return table_from_draws(rows, betas, draws, m, seed), draws


def table_from_draws(r_lowers: Sequence[RationalLike], betas: Sequence[float], draws: np.ndarray,
                     m: int, seed: Optional[int]) -> CriticalValueTable:
    """
    Tabulate quantiles from supremum draws laid out as simulate_sups() returns them.
    """
    rows = [as_fraction(r) for r in r_lowers]
    entries = {
        (row, float(beta)): empirical_quantile(draws[:, col], 1.0 - beta / 2.0)
        for col, row in enumerate(rows) for beta in betas
    }
    return CriticalValueTable(entries=entries, n_sims=draws.shape[0], n_steps=m, seed=seed,
                              source=SIMULATED)


def sup_histogram(draws: np.ndarray, r_lowers: Sequence[RationalLike], bins: int = 50) -> pd.DataFrame:
    """
    Tidy histogram of supremum draws, one block of rows per r_lower.
    """
    frames = []
    for col, r in enumerate(r_lowers):
        counts, edges = np.histogram(draws[:, col], bins=bins)
        frames.append(pd.DataFrame({
            "r_lower": format_fraction(as_fraction(r)),
            "bin_lo": edges[:-1],
            "bin_hi": edges[1:],
            "count": counts,
        }))
    return pd.concat(frames, ignore_index=True)


def _beta_key(table: CriticalValueTable, beta: float) -> Optional[float]:
    for known in table.betas():
        if abs(known - beta) < 1e-12:
            return known
    return None


def _interpolate(points: List[Tuple[float, float]], x: float) -> Optional[float]:
    points = sorted(points)
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        if x0 <= x <= x1:
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    return None


def _column(table: CriticalValueTable, beta: float, interpolate_beta: bool) -> Tuple[Dict[Fraction, float], bool]:
    key = _beta_key(table, beta)
    if key is not None:
        return {r: q for (r, b), q in table.entries.items() if b == key}, False
    if not interpolate_beta:
        raise MissingEntryError(
            f"beta={beta} is not tabulated (available: {table.betas()}); "
            f"build a table with `python main.py cv-table --betas {beta}`")
    column = {}
    for r in table.r_lowers():
        points = [(b, q) for (row, b), q in table.entries.items() if row == r]
        value = _interpolate(points, beta)
        if value is not None:
            column[r] = value
    if not column:
        raise MissingEntryError(f"beta={beta} lies outside the tabulated range {table.betas()}")
    return column, True


def lookup(table: CriticalValueTable, r_lower: RationalLike, beta: float,
           interpolate: bool = True, interpolate_beta: bool = False) -> CriticalValue:
    """
    Critical value for (r_lower, beta): exact entry, or linear interpolation in r_lower.

    Extrapolation beyond the tabulated rows is refused.

    :param table: The table.
    :param r_lower: Row key.
    :param beta: Column key.
    :param interpolate: Allow interpolation between tabulated rows.
    :param interpolate_beta: Allow interpolation between tabulated columns.
    :return: CriticalValue
    """
    row = as_fraction(r_lower)
    column, interpolated = _column(table, beta, interpolate_beta)
    if row in column:
        return CriticalValue(q=column[row], r_lower=float(row), beta=beta, interpolated=interpolated)
    hint = f"build a table with `python main.py cv-table --r-lowers {format_fraction(row)}`"
    if not interpolate:
        raise MissingEntryError(f"r_lower={format_fraction(row)} is not tabulated; {hint}")
    value = _interpolate([(float(r), q) for r, q in column.items()], float(row))
    if value is None:
        raise MissingEntryError(
            f"r_lower={format_fraction(row)} lies outside the tabulated rows; {hint}")
    logger.warning("Interpolated critical value %.4f for r_lower=%s, beta=%g",
                   value, format_fraction(row), beta)
    return CriticalValue(q=value, r_lower=float(row), beta=beta, interpolated=True)


def reference_table() -> CriticalValueTable:
    """
    The shipped grid of twelve r_lower rows and three beta columns.
    """
    entries = {
        (as_fraction(row), beta): q
        for row in R_LOWERS for beta, q in zip(BETAS, REFERENCE_QUANTILES[row])
    }
    return CriticalValueTable(entries=entries, n_sims=REFERENCE_N_SIMS, n_steps=REFERENCE_N_STEPS,
                              seed=None, source=REFERENCE)


def save_table(table: CriticalValueTable, path: str) -> None:
    """
    Write the header block (source, seed, n_steps, n_sims) then r_lower,beta,q rows.
    """
    rows = [
        {"r_lower": format_fraction(r), "beta": beta, "q": table.entries[(r, beta)]}
        for r in table.r_lowers() for beta in table.betas()
        if (r, beta) in table.entries
    ]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(f"{TABLE_HEADER}\n")
        handle.write(f"# source: {table.source}\n")
        handle.write(f"# seed: {'' if table.seed is None else table.seed}\n")
        handle.write(f"# n_steps: {table.n_steps}\n")
        handle.write(f"# n_sims: {table.n_sims}\n")
        pd.DataFrame(rows, columns=["r_lower", "beta", "q"]).to_csv(
            handle, index=False, float_format="%.6f", lineterminator="\n")
    logger.info("Wrote critical-value table to %s", path)


def load_table(path: str) -> CriticalValueTable:
    """
    Read a table written by save_table().
    """
    if not os.path.exists(path):
        raise InputError(f"Critical-value table not found: {path}")
    header: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].partition(":")
            if value:
                header[key.strip()] = value.strip()
    try:
        frame = pd.read_csv(path, comment="#", dtype={"r_lower": str})
        entries = {(as_fraction(r), float(b)): float(q)
                   for r, b, q in zip(frame["r_lower"], frame["beta"], frame["q"])}
        seed = int(header["seed"]) if header.get("seed") else None
        return CriticalValueTable(entries=entries, n_sims=int(header["n_sims"]),
                                  n_steps=int(header["n_steps"]), seed=seed,
                                  source=header.get("source", SIMULATED))
    except (KeyError, ValueError) as exc:
        raise InputError(f"Malformed critical-value table {path}: {exc}") from exc


def load_default_table(path: Optional[str] = None) -> CriticalValueTable:
    """
    The cached table at path when it exists, else the shipped reference grid.
    """
    if path and os.path.exists(path):
        logger.info("Using critical-value table %s", path)
        return load_table(path)
    if path:
        logger.info("No table at %s; using the shipped reference grid", path)
    return reference_table()
