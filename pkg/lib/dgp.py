"""
The simulation family F^-1(1-t) = t^-xi0 * exp(c (1 - t^rho) / rho), a Pareto tail
perturbed by a second-order term calibrated to the Student-t case (rho = 2 xi0).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from lib.errors import ConfigurationError, DomainError
from lib.tail_estimators import Sample


SeedLike = Union[int, Sequence[int], np.random.SeedSequence, np.random.Generator]


@dataclass(frozen=True)
class DgpConfig:
    """
    :param xi0: True tail index, > 0.
    :param c0: Deviation scale, >= 0 (the study uses 0, 0.5 and 1).
    """
    xi0: float
    c0: float = 0.0

    def __post_init__(self) -> None:
        if not self.xi0 > 0:
            raise ConfigurationError(f"xi0 must be positive, got {self.xi0}")
        if self.c0 < 0:
            raise ConfigurationError(f"c0 must be nonnegative, got {self.c0}")

    @property
    def rho(self) -> float:
        return 2.0 * self.xi0

    @property
    def c(self) -> float:
        return self.c0 * self.xi0 / (1.0 + 2.0 * self.xi0)


def as_generator(rng: SeedLike) -> np.random.Generator:
    """
    Accept a Generator as is; build one from an integer, entropy tuple or SeedSequence.
    """
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def dgp_inverse(t, cfg: DgpConfig):
    """
    F^-1(1 - t) = t^-xi0 * exp(c (1 - t^rho) / rho) for t in (0, 1].

    :param t: Scalar or array of upper-tail probabilities.
    :param cfg: The distribution parameters.
    :return: float or np.ndarray matching the input.
    """
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr > 0)) or np.any(arr > 1):
        raise DomainError("t must lie in (0, 1]")
    value = arr ** (-cfg.xi0) * np.exp(cfg.c * (1.0 - arr ** cfg.rho) / cfg.rho)
    return float(value) if value.ndim == 0 else value


def true_quantile(p: float, cfg: DgpConfig) -> float:
    """
    The true (1-p)-quantile of the family.
    """
    return dgp_inverse(p, cfg)


def draw_sample(n: int, cfg: DgpConfig, rng: SeedLike) -> Sample:
    """
    Draw Y_i = F^-1(1 - U_i) for n i.i.d. standard uniforms.

    :param n: Sample size, n >= 2.
    :param cfg: The distribution parameters.
    :param rng: Generator or seed; identical seeds give identical samples.
    :return: Sample
    """
    if n < 2:
        raise ConfigurationError(f"n must be at least 2, got {n}")
    generator = as_generator(rng)
    # 1 - U lies in (0, 1], the domain of dgp_inverse
    uniforms = 1.0 - generator.random(n)
    return Sample.from_values(dgp_inverse(uniforms, cfg))
