"""
Monte Carlo coverage and length study of the six interval constructors.

Replication j of grid cell i draws from a generator seeded with
(master_seed, i, j), so any cell or replication can be reproduced on its own and
the result does not depend on the number of worker processes.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from multiprocessing import Pool
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from lib.critical_values import CriticalValueTable, as_fraction, format_fraction, lookup, reference_table
from lib.data.study_grids import DEFAULT_BETA, DEFAULT_P, DEFAULT_R_LOWER, INDEX_METHODS, METHODS
from lib.dgp import DgpConfig, draw_sample, true_quantile
from lib.errors import ConfigurationError, HonestTailError
from lib.intervals import (
    Interval, honest_ci_index, honest_ci_quantile, naive_ci_index, naive_ci_quantile, naive_z,
    rule_of_thumb_budget, snooping_ci_index, snooping_ci_quantile,
)
from lib.tail_estimators import Sample, hill
from lib.threshold_selection import SelectionConfig, select_k


logger = logging.getLogger(__name__)

BLOCK_SIZE = 100
CSV_COLUMNS = ["xi0", "c0", "n", "method", "coverage", "avg_length", "n_reps", "failures", "seed"]

GridEntry = Union[Tuple[DgpConfig, int], Mapping[str, Any]]


@dataclass(frozen=True)
class StudyCell:
    cfg: DgpConfig
    n: int


@dataclass(frozen=True)
class StudySettings:
    """
    Everything a replication needs besides its sample, resolved once up front.

    :param z: Naive normal quantile.
    :param q_point: Critical value for intervals at a single k (r_lower = 1).
    :param q_snoop: Critical value for the snooping intervals, None when none are requested.
    """
    methods: Tuple[str, ...]
    p: float
    r_lower: float
    z: float
    q_point: float
    q_snoop: Optional[float]
    selection: SelectionConfig = field(default_factory=SelectionConfig)


@dataclass(frozen=True)
class CellResult:
    xi0: float
    c0: float
    n: int
    method: str
    coverage: float
    avg_length: float
    n_reps: int
    failures: int
    seed: str


@dataclass(frozen=True)
class StudyResult:
    cells: List[CellResult]
    master_seed: int

    def get(self, xi0: float, c0: float, n: int, method: str) -> CellResult:
        for cell in self.cells:
            if (cell.xi0, cell.c0, cell.n, cell.method) == (xi0, c0, n, method):
                return cell
        raise KeyError((xi0, c0, n, method))

    def to_frame(self) -> pd.DataFrame:
        """
        One row per grid cell and method, in the CSV column order.
        """
        return pd.DataFrame([asdict(cell) for cell in self.cells], columns=CSV_COLUMNS)

    def write_csv(self, path: str) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
        logger.info("Wrote study results to %s", path)


def parse_methods(methods: Union[str, Sequence[str]]) -> Tuple[str, ...]:
    """
    Validate method tags, keeping the canonical HN, HO, HS, IN, IO, IS order.

    :param methods: Comma-separated string or sequence of tags.
    :return: Tuple of tags.
    """
    if isinstance(methods, str):
        methods = [m for m in methods.split(",") if m.strip()]
    requested = {m.strip().upper() for m in methods}
    unknown = sorted(requested - set(METHODS))
    if unknown:
        raise ConfigurationError(f"Unknown method tag(s) {unknown}; choose from {METHODS}")
    if not requested:
        raise ConfigurationError("At least one method is required")
    return tuple(m for m in METHODS if m in requested)


def _as_cell(entry: GridEntry) -> StudyCell:
    if isinstance(entry, Mapping):
        try:
            return StudyCell(cfg=DgpConfig(xi0=float(entry["xi0"]), c0=float(entry.get("c0", 0.0))),
                             n=int(entry["n"]))
        except KeyError as exc:
            raise ConfigurationError(f"Grid entry {dict(entry)} lacks {exc}") from exc
    cfg, n = entry
    return StudyCell(cfg=cfg, n=int(n))


def build_interval(sample: Sample, k_bar: int, method: str, settings: StudySettings) -> Interval:
    """
    The interval a method reports at the selected threshold k_bar.

    Single-k honest intervals use the rule-of-thumb budget at xi_hat(n, k_bar); snooping
    intervals re-evaluate the rule of thumb at every k_j.
    """
    if method == "HN":
        return naive_ci_index(sample, k_bar, z=settings.z)
    if method == "IN":
        return naive_ci_quantile(sample, k_bar, settings.p, z=settings.z)
    if method == "HS":
        return snooping_ci_index(sample, k_bar, settings.r_lower, settings.q_snoop)
    if method == "IS":
        return snooping_ci_quantile(sample, k_bar, settings.r_lower, settings.p, settings.q_snoop)
    budget = rule_of_thumb_budget(hill(sample, k_bar).xi_hat, k_bar)
    if method == "HO":
        return honest_ci_index(sample, k_bar, settings.q_point, budget)
    return honest_ci_quantile(sample, k_bar, settings.p, settings.q_point, budget)


def score_replication(sample: Sample, cell: StudyCell, settings: StudySettings) -> np.ndarray:
    """
    Score every requested method on one sample.

    :return: Array of shape (len(methods), 3) holding covered, length and failed per method.
    """
    out = np.zeros((len(settings.methods), 3))
    try:
        k_bar = select_k(sample, settings.selection).k
    except HonestTailError as exc:
        logger.debug("Threshold selection failed: %s", exc)
        out[:, 2] = 1.0
        return out
    xi_truth = cell.cfg.xi0
    q_truth = true_quantile(settings.p, cell.cfg)
    for row, method in enumerate(settings.methods):
        try:
            interval = build_interval(sample, k_bar, method, settings)
        except HonestTailError as exc:
            logger.debug("%s failed at k=%d: %s", method, k_bar, exc)
            out[row, 2] = 1.0
            continue
        truth = xi_truth if method in INDEX_METHODS else q_truth
        out[row, 0] = float(interval.contains(truth))
        out[row, 1] = interval.length
    return out


def _run_block(job: Tuple[int, StudyCell, int, int, int, StudySettings]) -> np.ndarray:
    cell_index, cell, first, last, master_seed, settings = job
    scores = np.empty((last - first, len(settings.methods), 3))
    for row, rep in enumerate(range(first, last)):
        rng = np.random.default_rng([master_seed, cell_index, rep])
        sample = draw_sample(cell.n, cell.cfg, rng)
        scores[row] = score_replication(sample, cell, settings)
    return scores


def _aggregate(cell_index: int, cell: StudyCell, scores: np.ndarray, settings: StudySettings,
               master_seed: int) -> List[CellResult]:
    results = []
    n_reps = scores.shape[0]
    for col, method in enumerate(settings.methods):
        failed = scores[:, col, 2] > 0
        failures = int(failed.sum())
        valid = n_reps - failures
        if failures:
            logger.warning("xi0=%g c0=%g n=%d %s: %d of %d replications failed and were excluded",
                           cell.cfg.xi0, cell.cfg.c0, cell.n, method, failures, n_reps)
        coverage = float(scores[~failed, col, 0].sum() / valid) if valid else float("nan")
        avg_length = float(scores[~failed, col, 1].sum() / valid) if valid else float("nan")
        results.append(CellResult(xi0=cell.cfg.xi0, c0=cell.cfg.c0, n=cell.n, method=method,
                                  coverage=coverage, avg_length=avg_length, n_reps=n_reps,
                                  failures=failures, seed=f"{master_seed}:{cell_index}"))
    return results


def resolve_settings(methods: Union[str, Sequence[str]], p: float = DEFAULT_P,
                     r_lower: Union[str, float] = DEFAULT_R_LOWER, beta: float = DEFAULT_BETA,
                     cv_table: Optional[CriticalValueTable] = None,
                     selection: Optional[SelectionConfig] = None) -> StudySettings:
    """
    Look up the critical values and normal quantile a study needs.
    """
    tags = parse_methods(methods)
    if not 0 < p < 1:
        raise ConfigurationError(f"p must lie in (0, 1), got {p}")
    table = cv_table if cv_table is not None else reference_table()
    q_point = lookup(table, 1, beta).q
    snooping = any(tag in ("HS", "IS") for tag in tags)
    q_snoop = lookup(table, r_lower, beta).q if snooping else None
    return StudySettings(methods=tags, p=p, r_lower=float(as_fraction(r_lower)), z=naive_z(beta),
                         q_point=q_point, q_snoop=q_snoop,
                         selection=selection if selection is not None else SelectionConfig())


def run_study(grid: Sequence[GridEntry], methods: Union[str, Sequence[str]], n_reps: int,
              p: float = DEFAULT_P, master_seed: int = 0, r_lower: Union[str, float] = DEFAULT_R_LOWER,
              beta: float = DEFAULT_BETA, cv_table: Optional[CriticalValueTable] = None,
              selection: Optional[SelectionConfig] = None, workers: int = 1,
              progress: bool = True) -> StudyResult:
    """
    Coverage and average length of each method over a grid of (DGP, n) cells.

    Each replication draws a sample, selects k with select_k() and scores every
    requested interval against xi0 (tail-index methods) or the true (1-p)-quantile.
    Replications where selection or a constructor fails are counted per method and
    left out of that method's averages.

    :param grid: (DgpConfig, n) pairs or {"xi0", "c0", "n"} mappings.
    :param methods: Subset of HN, HO, HS, IN, IO, IS.
    :param n_reps: Replications per cell, >= 1.
    :param p: Tail probability of the quantile target.
    :param master_seed: Root of every replication's seed.
    :param r_lower: Lower end of the snooping range.
    :param beta: One minus the nominal level.
    :param cv_table: Critical values; the shipped reference grid when None.
    :param selection: Threshold-selection settings.
    :param workers: Worker processes.
    :return: StudyResult
    """
    if n_reps < 1:
        raise ConfigurationError(f"n_reps must be at least 1, got {n_reps}")
    cells = [_as_cell(entry) for entry in grid]
    if not cells:
        raise ConfigurationError("The study grid is empty")
    settings = resolve_settings(methods, p=p, r_lower=r_lower, beta=beta, cv_table=cv_table,
                                selection=selection)
    logger.info("Running %d replication(s) over %d cell(s) for %s, r_lower=%s, beta=%g",
                n_reps, len(cells), ",".join(settings.methods),
                format_fraction(as_fraction(r_lower)), beta)
    jobs = [(index, cell, first, min(first + BLOCK_SIZE, n_reps), master_seed, settings)
            for index, cell in enumerate(cells) for first in range(0, n_reps, BLOCK_SIZE)]
    blocks: Dict[int, List[np.ndarray]] = {index: [] for index in range(len(cells))}
    with tqdm(total=n_reps * len(cells), desc="replications", unit="rep", disable=not progress) as bar:
        if workers > 1:
            with Pool(workers) as pool:
                for job, block in zip(jobs, pool.imap(_run_block, jobs)):
                    blocks[job[0]].append(block)
                    bar.update(block.shape[0])
        else:
            for job in jobs:
                block = _run_block(job)
                blocks[job[0]].append(block)
                bar.update(block.shape[0])
    results: List[CellResult] = []
    for index, cell in enumerate(cells):
        logger.debug("Aggregating cell %d: xi0=%g c0=%g n=%d", index, cell.cfg.xi0, cell.cfg.c0, cell.n)
        results.extend(_aggregate(index, cell, np.vstack(blocks[index]), settings, master_seed))
    return StudyResult(cells=results, master_seed=master_seed)
