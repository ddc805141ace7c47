"""
Data-driven choice of the threshold k_bar from normalised log-spacings.

Z_i = i * log(Y_{n:n-i+1} / Y_{n:n-i}) are i.i.d. exponential with mean xi under an
exact Pareto tail. The weighted sum T_k of Z_1..Z_k with antisymmetric weights has
zero mean and unit variance there; a moving root-mean-square C_k of T_k drifting
above c_crit flags the onset of bias.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from lib.errors import BoundsError, ConfigurationError, DegenerateEstimateError, DomainError
from lib.tail_estimators import Sample, hill, hill_values


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SpacingVector:
    """
    z[i] = (i+1) * log(Y_{n:n-i} / Y_{n:n-i-1}) for i = 0..n-2.

    Entries that would take the log of a nonpositive order statistic are NaN.
    """
    z: np.ndarray


@dataclass(frozen=True)
class SelectionConfig:
    c_crit: float = 1.25
    k_min_frac: float = 0.01
    k_max_frac: float = 0.99

    def __post_init__(self) -> None:
        if not self.c_crit > 1:
            raise ConfigurationError(f"c_crit must exceed 1, got {self.c_crit}")
        if not 0 < self.k_min_frac < self.k_max_frac < 1:
            raise ConfigurationError(
                f"Need 0 < k_min_frac < k_max_frac < 1, got {self.k_min_frac}, {self.k_max_frac}")


@dataclass(frozen=True, eq=False)
class CriterionTrace:
    ks: np.ndarray
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class ThresholdChoice:
    """
    Outcome of select_k().

    :param k: The selected threshold.
    :param fallback: True when no k met the rule and the upper bound was returned.
    :param k_lo: Lower end of the search bracket.
    :param k_hi: Upper end of the search bracket.
    :param trace: C_k over the bracket.
    """
    k: int
    fallback: bool
    k_lo: int
    k_hi: int
    c_crit: float
    trace: CriterionTrace


def _positive_count(sample: Sample) -> int:
    return int(np.count_nonzero(sample.sorted_desc > 0))


def _max_valid_k(sample: Sample) -> int:
    """
    Largest k whose statistic only touches positive order statistics.
    """
    return min(sample.n - 1, _positive_count(sample) - 1)


def spacings(sample: Sample) -> SpacingVector:
    """
    Scaled log-spacings of the descending order statistics.

    :param sample: The sample.
    :return: SpacingVector of length n-1.
    """
    y = sample.sorted_desc
    z = np.full(sample.n - 1, np.nan)
    valid = _positive_count(sample) - 1
    if valid > 0:
        i = np.arange(1, valid + 1)
        z[:valid] = i * np.log(y[:valid] / y[1:valid + 1])
    return SpacingVector(z=z)


def guillou_weights(k: int) -> np.ndarray:
    """
    Antisymmetric weights w_j = k - 2j + 1 for j = 1..k.

    :param k: Number of weights, k >= 1.
    :return: np.ndarray
    """
    if k < 1:
        raise BoundsError(f"k must be at least 1, got {k}")
    j = np.arange(1, k + 1, dtype=float)
    return k - 2.0 * j + 1.0


def t_statistic(sample: Sample, k: int) -> float:
    """
    T_k = (sum w_j^2)^(-1/2) * xi_hat(n, k)^(-1) * sum_{j<=k} w_j Z_j.

    :param sample: The sample.
    :param k: Threshold, 2 <= k <= n-1.
    :return: float
    """
    if k == 1:
        raise DegenerateEstimateError("The weight vector is identically zero for k = 1")
    if not 2 <= k <= sample.n - 1:
        raise BoundsError(f"k must lie in [2, {sample.n - 1}], got {k}")
    xi = hill(sample, k).xi_hat
    if xi == 0:
        raise DegenerateEstimateError(f"Hill estimate vanishes at k = {k}")
    weights = guillou_weights(k)
    z = spacings(sample).z[:k]
    return float(np.dot(weights, z) / math.sqrt(np.dot(weights, weights)) / xi)


def _t_path(sample: Sample, k_max: int) -> np.ndarray:
    """
    T_k for k = 2..k_max via prefix sums; entry i holds T_{i+2}.

    A vanishing Hill estimate means Z_1..Z_k are all zero and T_k is set to 0.
    """
    z = spacings(sample).z[:k_max]
    j = np.arange(1, k_max + 1, dtype=float)
    first = np.cumsum(z)
    weighted = np.cumsum(j * z)
    ks = np.arange(2, k_max + 1, dtype=float)
    u = (ks + 1.0) * first[1:] - 2.0 * weighted[1:]
    norm = np.sqrt(ks * (ks * ks - 1.0) / 3.0)
    xi = hill_values(sample, 2, k_max)
    t = np.zeros_like(u)
    np.divide(u, norm * xi, out=t, where=xi > 0)
    return t


def criterion_trace(sample: Sample, k_lo: int, k_hi: int) -> CriterionTrace:
    """
    C_k for every k in [k_lo, k_hi], windows truncated to the valid range of T.

    :param sample: The sample.
    :param k_lo: First threshold, >= 2.
    :param k_hi: Last threshold, within the valid range.
    :return: CriterionTrace
    """
    k_valid = _max_valid_k(sample)
    if k_valid < 2:
        raise DomainError("No valid threshold: fewer than three positive observations")
    if not 2 <= k_lo <= k_hi <= k_valid:
        raise BoundsError(f"Criterion bracket [{k_lo}, {k_hi}] outside [2, {k_valid}]")
    squares = np.zeros(k_valid + 1)
    squares[2:] = _t_path(sample, k_valid) ** 2
    running = np.cumsum(squares)
    ks = np.arange(k_lo, k_hi + 1)
    half = ks // 2
    left = np.maximum(2, ks - half)
    right = np.minimum(k_valid, ks + half)
    mean = (running[right] - running[left - 1]) / (right - left + 1)
    return CriterionTrace(ks=ks, values=np.sqrt(mean))


def c_criterion(sample: Sample, k: int) -> float:
    """
    C_k = ((2l+1)^-1 * sum_{j=-l..l} T_{k+j}^2)^(1/2) with l = floor(k/2).

    :param sample: The sample.
    :param k: Threshold, 2 <= k <= n-1.
    :return: float
    """
    if not 2 <= k <= sample.n - 1:
        raise BoundsError(f"k must lie in [2, {sample.n - 1}], got {k}")
    if k > _max_valid_k(sample):
        raise DomainError(f"C_{k} needs positive order statistics up to index {k}")
    return float(criterion_trace(sample, k, k).values[0])


def selection_bounds(n: int, cfg: SelectionConfig) -> Tuple[int, int]:
    """
    [ceil(k_min_frac * n), floor(k_max_frac * n)] intersected with [2, n-1].
    """
    k_lo = max(2, math.ceil(round(cfg.k_min_frac * n, 9)))
    k_hi = min(n - 1, math.floor(round(cfg.k_max_frac * n, 9)))
    if k_lo > k_hi:
        raise ConfigurationError(f"Empty selection bracket [{k_lo}, {k_hi}] for n = {n}")
    return k_lo, k_hi


def select_k(sample: Sample, cfg: SelectionConfig = SelectionConfig()) -> ThresholdChoice:
    """
    Smallest in-bracket k with C_t > c_crit for every in-bracket t >= k.

    When the rule is never met the upper bound is returned and flagged.

    :param sample: The sample.
    :param cfg: Criterion constant and bracket fractions.
    :return: ThresholdChoice
    """
    k_lo, k_hi = selection_bounds(sample.n, cfg)
    k_valid = _max_valid_k(sample)
    if k_hi > k_valid:
        logger.warning("Selection bracket truncated from %d to %d: nonpositive order statistics",
                       k_hi, k_valid)
        k_hi = k_valid
        if k_lo > k_hi:
            raise ConfigurationError(f"Empty selection bracket [{k_lo}, {k_hi}] after positivity truncation")
    trace = criterion_trace(sample, k_lo, k_hi)
    above = trace.values > cfg.c_crit
    if not above[-1]:
        logger.info("Selection rule never met in [%d, %d]; falling back to k = %d", k_lo, k_hi, k_hi)
        return ThresholdChoice(k=k_hi, fallback=True, k_lo=k_lo, k_hi=k_hi, c_crit=cfg.c_crit, trace=trace)
    failing = np.flatnonzero(~above)
    start = 0 if failing.size == 0 else int(failing[-1]) + 1
    k = int(trace.ks[start])
    logger.debug("Selected k = %d in [%d, %d]", k, k_lo, k_hi)
    return ThresholdChoice(k=k, fallback=False, k_lo=k_lo, k_hi=k_hi, c_crit=cfg.c_crit, trace=trace)
