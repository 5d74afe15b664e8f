"""Conjugate-Beta toolkit.

Moment matching, second-step reshaping of a flat-prior posterior by an
expert Beta prior, and Laplace's rule of succession.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .numerics import beta_logpdf, beta_quantile, reg_inc_beta


@dataclass(frozen=True)
class BetaParams:
    """Shape pair (r, s) of a Beta distribution."""

    r: float
    s: float

    def __post_init__(self):
        if not (self.r > 0 and self.s > 0) or not (math.isfinite(self.r) and math.isfinite(self.s)):
            raise DomainError(f"Beta shapes must be positive and finite, got r={self.r}, s={self.s}")

    @property
    def mean(self) -> float:
        return self.r / (self.r + self.s)

    @property
    def sd(self) -> float:
        return beta_moments(self)[1]

    @property
    def mode(self) -> float:
        """Interior mode; only defined for r > 1 and s > 1."""
        if self.r <= 1 or self.s <= 1:
            if self.r <= 1 < self.s:
                return 0.0
            if self.s <= 1 < self.r:
                return 1.0
            raise DomainError(f"Beta({self.r}, {self.s}) has no unique mode")
        return (self.r - 1.0) / (self.r + self.s - 2.0)

    def pdf(self, x):
        return np.exp(beta_logpdf(x, self.r, self.s))

    def cdf(self, x: float) -> float:
        return reg_inc_beta(x, self.r, self.s)

    def quantile(self, p: float) -> float:
        return beta_quantile(p, self)

    def to_dict(self) -> dict:
        return {"r": self.r, "s": self.s}


def beta_moments(params: BetaParams) -> tuple[float, float]:
    """Mean and standard deviation of Beta(r, s)."""
    r, s = params.r, params.s
    n = r + s
    return r / n, math.sqrt(r * s / ((n + 1.0) * n * n))


def beta_from_moments(mean: float, sd: float) -> BetaParams:
    """Solve the mean/variance equations for (r, s)."""
    if not 0.0 < mean < 1.0:
        raise DomainError(f"mean must lie in (0, 1), got {mean}")
    var = sd * sd
    if not 0.0 < var < mean * (1.0 - mean):
        raise DomainError(f"infeasible Beta moments: sd={sd} with mean={mean} (need 0 < sd^2 < mean*(1-mean))")
    r = (1.0 - mean) * mean * mean / var - mean
    s = r * (1.0 - mean) / mean
    if r <= 0 or s <= 0:
        raise DomainError(f"moment matching gave non-positive shapes ({r}, {s})")
    return BetaParams(r, s)


def fit_posterior(summary) -> BetaParams:
    """Beta with the same mean and sd as a posterior summary (no histogram fit)."""
    return beta_from_moments(summary.mean, summary.sd)


def reshape_with_prior(flat_fit: BetaParams, prior: BetaParams) -> BetaParams:
    """Multiply a flat-prior Beta posterior by a Beta prior.

    Beta(r_F, s_F) x Beta(r_0, s_0) is proportional to
    Beta(r_0 + r_F - 1, s_0 + s_F - 1).
    """
    r = prior.r + flat_fit.r - 1.0
    s = prior.s + flat_fit.s - 1.0
    if r <= 0 or s <= 0:
        raise DomainError(f"reshaped shapes must be positive, got ({r}, {s})")
    return BetaParams(r, s)


def rule_of_succession(successes: int, trials: int) -> float:
    """(x + 1) / (n + 2): probability the next trial succeeds."""
    if successes < 0 or trials < 0 or successes > trials:
        raise DomainError(f"need 0 <= successes <= trials, got {successes} of {trials}")
    return (successes + 1) / (trials + 2)
