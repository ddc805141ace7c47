"""
Bias budgets and the naive, honest and k-snooping confidence intervals for the
tail index and for extreme quantiles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

from scipy import integrate, stats

from lib.errors import ConfigurationError, DomainError, ExtrapolationError
from lib.tail_estimators import Sample, hill, hill_path, weissman_quantile


NAIVE_Z = 1.96

TAIL_INDEX = "tail_index"
QUANTILE = "quantile"

RULE_OF_THUMB = "rule-of-thumb"
USER = "user"


@dataclass(frozen=True)
class BiasBudget:
    """
    Second-order parameters (A, rho) and the worst-case bias bound A / (1 + rho).

    :param provenance: "user" or "rule-of-thumb".
    :param xi_hat: The estimate the rule of thumb was evaluated at, if any.
    :param k: The threshold the rule of thumb was evaluated at, if any.
    """
    A: float
    rho: float
    bound: float
    provenance: str = USER
    xi_hat: Optional[float] = None
    k: Optional[int] = None

    @classmethod
    def from_parameters(cls, A: float, rho: float) -> "BiasBudget":
        return cls(A=A, rho=rho, bound=bias_bound(A, rho), provenance=USER)

    @classmethod
    def zero(cls) -> "BiasBudget":
        return cls.from_parameters(0.0, 1.0)


@dataclass(frozen=True)
class Interval:
    """
    A closed confidence interval with the provenance needed to re-derive it.

    Empty snooping intersections are represented with empty=True and NaN endpoints.
    """
    lo: float
    hi: float
    method: str
    target: str
    k: Optional[int] = None
    k_range: Optional[Tuple[int, int]] = None
    p: Optional[float] = None
    estimate: Optional[float] = None
    q: Optional[float] = None
    budget: Optional[BiasBudget] = None
    flags: Tuple[str, ...] = ()
    empty: bool = False
    cutoff: Optional[float] = None

    @property
    def is_empty(self) -> bool:
        return self.empty

    @property
    def length(self) -> float:
        return 0.0 if self.empty else self.hi - self.lo

    def contains(self, value: float) -> bool:
        return not self.empty and self.lo <= value <= self.hi

    def to_record(self) -> Dict[str, Any]:
        """
        Serialise to the frozen JSON record layout.

        :return: Dict with method, target, k or k_range, lo, hi, q, A, rho, bound, flags.
        """
        target = self.target if self.p is None else f"{self.target}({self.p:g})"
        record: Dict[str, Any] = {"method": self.method, "target": target}
        if self.k_range is not None:
            record["k_range"] = list(self.k_range)
        else:
            record["k"] = self.k
        record.update({
            "lo": None if self.empty else self.lo,
            "hi": None if self.empty else self.hi,
            "estimate": self.estimate,
            "q": self.q,
            "A": None if self.budget is None else self.budget.A,
            "rho": None if self.budget is None else self.budget.rho,
            "bound": None if self.budget is None else self.budget.bound,
            "flags": list(self.flags),
        })
        if self.cutoff is not None:
            record["cutoff"] = self.cutoff
        return record


def bias_bound(A: float, rho: float) -> float:
    """
    Worst-case bias sup_r sqrt(r) * A r^rho / (1 + rho) = A / (1 + rho).

    :param A: Scale of the admissible deviation, A >= 0.
    :param rho: Decay rate of the admissible deviation, rho > 0.
    :return: float
    """
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho}")
    if A < 0:
        raise DomainError(f"A must be nonnegative, got {A}")
    return A / (1.0 + rho)


def worst_case_bias(r: float, A: float, rho: float) -> float:
    """
    Closed-form bound A r^rho / (1 + rho) on the asymptotic bias at threshold fraction r.
    """
    if not 0 < r <= 1:
        raise DomainError(f"r must lie in (0, 1], got {r}")
    return A * r ** rho / (1.0 + rho)


def naive_z(beta: float) -> float:
    """
    Two-sided normal quantile rounded to two decimals, so beta = 0.05 gives 1.96.
    """
    if not 0 < beta < 1:
        raise ConfigurationError(f"beta must lie in (0, 1), got {beta}")
    return round(float(stats.norm.ppf(1.0 - beta / 2.0)), 2)


def bias_functional(r: float, deviation: Callable[[float], float], epsrel: float = 1e-10) -> float:
    """
    Numerically evaluate r^-1 * int_0^r int_s^r deviation(v) / v dv ds.

    :param r: Threshold fraction in (0, 1].
    :param deviation: The function v -> h(v) - h(0).
    :param epsrel: Relative tolerance handed to scipy.integrate.dblquad.
    :return: float
    """
    if not 0 < r <= 1:
        raise DomainError(f"r must lie in (0, 1], got {r}")
    value, _ = integrate.dblquad(
        lambda v, s: deviation(v) / v,
        0.0, r,
        lambda s: s, lambda s: r,
        epsabs=0.0, epsrel=epsrel,
    )
    return value / r


def rule_of_thumb_budget(xi_hat: float, k: int) -> BiasBudget:
    """
    Student-t reference choice: rho = 2 xi and A = 0.1 xi (1 + 2 xi) sqrt(k),
    so that bound / sqrt(k) = 0.1 xi.

    :param xi_hat: Tail-index estimate standing in for the true index.
    :param k: Threshold count.
    :return: BiasBudget
    """
    if not xi_hat > 0:
        raise DomainError(f"Rule-of-thumb budget needs a positive tail-index estimate, got {xi_hat}")
    if k < 1:
        raise DomainError(f"k must be at least 1, got {k}")
    rho = 2.0 * xi_hat
    A = 0.1 * xi_hat * (1.0 + 2.0 * xi_hat) * math.sqrt(k)
    return BiasBudget(A=A, rho=rho, bound=bias_bound(A, rho), provenance=RULE_OF_THUMB,
                      xi_hat=xi_hat, k=k)


def snooping_grid(k_bar: int, r_lower: float) -> List[int]:
    """
    All integers in [ceil(r_lower * k_bar), k_bar].
    """
    if not 0 < r_lower <= 1:
        raise ConfigurationError(f"r_lower must lie in (0, 1], got {r_lower}")
    lowest = math.ceil(Fraction(r_lower).limit_denominator(10 ** 6) * k_bar)
    grid = list(range(max(lowest, 1), k_bar + 1))
    if not grid:
        raise ConfigurationError(f"Empty snooping grid for k_bar={k_bar}, r_lower={r_lower}")
    return grid


def naive_ci_index(sample: Sample, k: int, z: float = NAIVE_Z) -> Interval:
    """
    H^N: xi_hat +/- z * xi_hat / sqrt(k).
    """
    xi = hill(sample, k).xi_hat
    half = (xi * z) / math.sqrt(k)
    return Interval(lo=xi - half, hi=xi + half, method="HN", target=TAIL_INDEX, k=k,
                    estimate=xi, q=z)


def honest_ci_index(sample: Sample, k: int, q: float, budget: BiasBudget) -> Interval:
    """
    H^O: xi_hat +/- (xi_hat * q + bound) / sqrt(k).

    :param sample: The sample.
    :param k: Integer threshold, the floor of r * k_bar.
    :param q: Critical value from the sup-statistic table.
    :param budget: The bias budget.
    :return: Interval
    """
    if not q > 0:
        raise DomainError(f"Critical value must be positive, got {q}")
    xi = hill(sample, k).xi_hat
    half = (xi * q + budget.bound) / math.sqrt(k)
    return Interval(lo=xi - half, hi=xi + half, method="HO", target=TAIL_INDEX, k=k,
                    estimate=xi, q=q, budget=budget)


def _intersect(parts: List[Interval], method: str, target: str, k_bar: int, grid: List[int],
               q: float, p: Optional[float], budget: Optional[BiasBudget],
               estimate: Optional[float]) -> Interval:
    lo = max(part.lo for part in parts)
    hi = min(part.hi for part in parts)
    flags: Tuple[str, ...] = () if budget is not None else ("rule_of_thumb_per_k",)
    common = dict(method=method, target=target, k=k_bar, k_range=(grid[0], grid[-1]), p=p,
                  estimate=estimate, q=q, budget=budget)
    if lo > hi:
        return Interval(lo=math.nan, hi=math.nan, flags=flags + ("empty",), empty=True, **common)
    return Interval(lo=lo, hi=hi, flags=flags, **common)


def snooping_ci_index(sample: Sample, k_bar: int, r_lower: float, q: float,
                      budget: Optional[BiasBudget] = None) -> Interval:
    """
    H^S: the intersection of H^O(n, k_j) over every integer k_j in [r_lower * k_bar, k_bar].

    Each member uses the rule-of-thumb budget at its own xi_hat(n, k_j) unless a fixed
    budget is supplied. An empty intersection is returned flagged, not raised.
    """
    grid = snooping_grid(k_bar, r_lower)
    path = hill_path(sample, grid[0], grid[-1])
    parts = [
        honest_ci_index(sample, est.k, q,
                        budget if budget is not None else rule_of_thumb_budget(est.xi_hat, est.k))
        for est in path
    ]
    return _intersect(parts, "HS", TAIL_INDEX, k_bar, grid, q, None, budget, path[-1].xi_hat)


def _clamped(center: float, relative_half: float) -> Tuple[float, float]:
    # quantiles of positive data are nonnegative
    return max(0.0, center * (1.0 - relative_half)), center * (1.0 + relative_half)


def _log_base(sample: Sample, k: int, p: float) -> float:
    if not 0 < p < 1:
        raise DomainError(f"Tail probability must lie in (0, 1), got {p}")
    d = k / (sample.n * p)
    if not d > 1:
        raise ExtrapolationError(f"log(k / (n p)) must be positive, got k={k}, n*p={sample.n * p:g}")
    return math.log(d)


def naive_ci_quantile(sample: Sample, k: int, p: float, z: float = NAIVE_Z) -> Interval:
    """
    I^N: Q_hat * (1 -/+ log(k / (n p)) * z * xi_hat / sqrt(k)).

    Same extrapolation factor as I^O; raises ExtrapolationError unless k > n p.
    """
    log_d = _log_base(sample, k, p)
    estimate = weissman_quantile(sample, k, p)
    relative_half = log_d * (estimate.xi_source.xi_hat * z) / math.sqrt(k)
    lo, hi = _clamped(estimate.q_hat, relative_half)
    return Interval(lo=lo, hi=hi, method="IN", target=QUANTILE, k=k, p=p,
                    estimate=estimate.q_hat, q=z)


def honest_ci_quantile(sample: Sample, k: int, p: float, q: float, budget: BiasBudget) -> Interval:
    """
    I^O: Q_hat * (1 -/+ log(k / (n p)) * (xi_hat * q + bound) / sqrt(k)).

    The lower endpoint is clamped at zero.
    """
    if not q > 0:
        raise DomainError(f"Critical value must be positive, got {q}")
    log_d = _log_base(sample, k, p)
    estimate = weissman_quantile(sample, k, p)
    relative_half = log_d * ((estimate.xi_source.xi_hat * q + budget.bound) / math.sqrt(k))
    lo, hi = _clamped(estimate.q_hat, relative_half)
    return Interval(lo=lo, hi=hi, method="IO", target=QUANTILE, k=k, p=p,
                    estimate=estimate.q_hat, q=q, budget=budget)


def snooping_ci_quantile(sample: Sample, k_bar: int, r_lower: float, p: float, q: float,
                         budget: Optional[BiasBudget] = None) -> Interval:
    """
    I^S: the intersection of I^O(n, k_j) over the same grid as snooping_ci_index().
    """
    grid = snooping_grid(k_bar, r_lower)
    path = hill_path(sample, grid[0], grid[-1])
    parts = [
        honest_ci_quantile(sample, est.k, p, q,
                           budget if budget is not None else rule_of_thumb_budget(est.xi_hat, est.k))
        for est in path
    ]
    top = parts[-1].estimate
    return _intersect(parts, "IS", QUANTILE, k_bar, grid, q, p, budget, top)
