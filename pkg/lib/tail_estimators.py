"""
Order statistics, Hill's tail-index estimator and Weissman's extreme-quantile estimator.

All functions are pure: a Sample is immutable once built and every estimator
reads only its cached descending order statistics.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, List

import numpy as np

from lib.errors import BoundsError, DomainError, EmptySampleError, ExtrapolationError

if TYPE_CHECKING:
    from lib.intervals import Interval


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Sample:
    """
    A validated vector of finite observations with cached descending order statistics.

    :param values: The observations in input order.
    :param sorted_desc: The same observations sorted in descending order.
    :param dropped: Observations discarded while building the sample (left-tail mode).
    """
    values: np.ndarray
    sorted_desc: np.ndarray = field(repr=False)
    dropped: int = 0

    @classmethod
    def from_values(cls, values: Iterable[float], dropped: int = 0) -> "Sample":
        """
        Build a sample from raw observations.

        Nonpositive values are accepted here; estimators reject them only when
        they fall among the order statistics a computation touches.

        :param values: Finite real observations, at least two of them.
        :param dropped: Number of observations removed upstream.
        :return: Sample
        """
        arr = np.array(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
        arr = arr.ravel()
        if arr.size < 2:
            raise EmptySampleError(f"At least two observations are required, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("Sample contains non-finite values")
        arr.setflags(write=False)
        sorted_desc = np.sort(arr)[::-1].copy()
        sorted_desc.setflags(write=False)
        return cls(values=arr, sorted_desc=sorted_desc, dropped=dropped)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def scaled(self, factor: float) -> "Sample":
        """
        Multiply every observation by a positive constant.

        :param factor: The scale factor, c > 0.
        :return: Sample
        """
        if not factor > 0:
            raise DomainError(f"Scale factor must be positive, got {factor}")
        return Sample.from_values(self.values * factor, dropped=self.dropped)


@dataclass(frozen=True)
class TailIndexEstimate:
    xi_hat: float
    k: int
    n: int


@dataclass(frozen=True)
class QuantileEstimate:
    q_hat: float
    p: float
    k: int
    xi_source: TailIndexEstimate


def _check_k(sample: Sample, k: int) -> None:
    if not 1 <= k <= sample.n - 1:
        raise BoundsError(f"k must lie in [1, {sample.n - 1}], got {k}")


def order_statistic(sample: Sample, j: int) -> float:
    """
    Return Y_{n:n-j}, the (j+1)-th largest observation.

    :param sample: The sample.
    :param j: Zero-based rank from the top, 0 <= j <= n-1.
    :return: float
    """
    if not 0 <= j <= sample.n - 1:
        raise BoundsError(f"Order statistic index must lie in [0, {sample.n - 1}], got {j}")
    return float(sample.sorted_desc[j])


def _log_ratios(sample: Sample, k_hi: int) -> np.ndarray:
    """
    log(Y_{n:n-j} / Y_{n:n}) for j = 0..k_hi.
    """
    top = sample.sorted_desc[:k_hi + 1]
    if top[-1] <= 0:
        raise DomainError(
            f"Order statistic Y(n:n-{k_hi}) = {top[-1]:g} is not positive; "
            f"the top {k_hi + 1} observations must be positive")
    return np.log(top / top[0])


def hill_values(sample: Sample, k_lo: int, k_hi: int) -> np.ndarray:
    """
    Hill estimates for every k in [k_lo, k_hi].

    The prefix sums are sequential, so the entry for k does not depend on k_hi.
    """
    logs = _log_ratios(sample, k_hi)
    prefix = np.cumsum(logs[:k_hi])
    ks = np.arange(k_lo, k_hi + 1)
    xi = prefix[ks - 1] / ks - logs[ks]
    # Descending order guarantees xi >= 0 up to roundoff.
    return np.maximum(xi, 0.0)


def hill(sample: Sample, k: int) -> TailIndexEstimate:
    """
    Hill's estimator (1/k) * sum_{j<k} [log Y_{n:n-j} - log Y_{n:n-k}].

    :param sample: The sample.
    :param k: Number of upper order statistics, 1 <= k <= n-1.
    :return: TailIndexEstimate
    """
    _check_k(sample, k)
    xi = hill_values(sample, k, k)[0]
    return TailIndexEstimate(xi_hat=float(xi), k=k, n=sample.n)


def hill_path(sample: Sample, k_lo: int, k_hi: int) -> List[TailIndexEstimate]:
    """
    Hill estimates for every integer threshold in [k_lo, k_hi].

    Entries are bit-for-bit equal to independent calls of hill().

    :param sample: The sample.
    :param k_lo: Smallest threshold, >= 1.
    :param k_hi: Largest threshold, <= n-1.
    :return: List of TailIndexEstimate ordered by k.
    """
    if k_lo > k_hi:
        raise BoundsError(f"Empty threshold range [{k_lo}, {k_hi}]")
    _check_k(sample, k_lo)
    _check_k(sample, k_hi)
    values = hill_values(sample, k_lo, k_hi)
    return [TailIndexEstimate(xi_hat=float(xi), k=k, n=sample.n)
            for k, xi in zip(range(k_lo, k_hi + 1), values)]


def weissman_quantile(sample: Sample, k: int, p: float) -> QuantileEstimate:
    """
    Weissman's extrapolated (1-p)-quantile Y_{n:n-k} * (k / (n p)) ** xi_hat.

    :param sample: The sample.
    :param k: Threshold count, 1 <= k <= n-1.
    :param p: Tail probability in (0, 1) with n * p < k.
    :return: QuantileEstimate
    """
    if not 0 < p < 1:
        raise DomainError(f"Tail probability must lie in (0, 1), got {p}")
    _check_k(sample, k)
    if sample.n * p >= k:
        raise ExtrapolationError(
            f"Extrapolation requires n*p < k, got n*p = {sample.n * p:g} and k = {k}")
    estimate = hill(sample, k)
    anchor = order_statistic(sample, k)
    q_hat = anchor * (k / (sample.n * p)) ** estimate.xi_hat
    return QuantileEstimate(q_hat=float(q_hat), p=p, k=k, xi_source=estimate)


def left_tail_transform(values: Iterable[float], cutoff: float) -> Sample:
    """
    Map a left tail onto a right tail: keep B_i < T and return T - B_i.

    :param values: Raw observations B_i.
    :param cutoff: The cutoff T.
    :return: Sample with the dropped count recorded.
    """
    if not math.isfinite(cutoff):
        raise DomainError(f"Cutoff must be finite, got {cutoff}")
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("Sample contains non-finite values")
    below = arr < cutoff
    dropped = int(arr.size - np.count_nonzero(below))
    if dropped:
        logger.info("Left-tail transform dropped %d of %d observations at or above %g",
                    dropped, arr.size, cutoff)
    kept = cutoff - arr[below]
    if kept.size == 0:
        raise EmptySampleError(f"No observations below the cutoff {cutoff:g}")
    return Sample.from_values(kept, dropped=dropped)


def restore_left_tail_interval(interval: "Interval", cutoff: float, clamp_at: float = 0.0) -> "Interval":
    """
    Reflect an interval computed on T - B back to the scale of B.

    Returns [max(clamp_at, T - hi), T - lo]; the upper endpoint is also kept at or
    above clamp_at so the result stays ordered.

    :param interval: Interval on the transformed scale.
    :param cutoff: The cutoff T used by left_tail_transform().
    :param clamp_at: Floor for the restored endpoints.
    :return: Interval
    """
    flags = tuple(interval.flags) + ("left_tail_restored",)
    if interval.is_empty:
        return dataclasses.replace(interval, flags=flags, cutoff=cutoff)
    if interval.lo > interval.hi:
        raise DomainError(f"Invalid interval [{interval.lo}, {interval.hi}]")
    lo = max(clamp_at, cutoff - interval.hi)
    hi = max(clamp_at, cutoff - interval.lo)
    estimate = None if interval.estimate is None else cutoff - interval.estimate
    return dataclasses.replace(interval, lo=lo, hi=hi, estimate=estimate, flags=flags, cutoff=cutoff)
