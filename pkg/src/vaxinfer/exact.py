"""Exact posterior of the efficacy by marginalizing the model numerically.

With uniform priors on the efficacy and the assault probability, the
assault probability integrates out to a Beta function and the number of
assaulted vaccinees becomes a finite sum:

    f(eps) ~ (1 - eps)^n_vi * sum_k eps^(k - n_vi) / ((k - n_vi)! (n_v - k)!)
                              * B(k + n_pi + 1, n_v - k + n_p - n_pi + 1)

for k = n_vi .. n_v. The sum is evaluated in log space on a uniform grid and
normalized by the trapezoid rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import MomentSummary, TrialCounts
from .numerics import ln_beta, ln_gamma

DEFAULT_GRID = 2001
# terms more than this many log-units below the per-point maximum are dropped
PRUNE_LOG_GAP = 40.0
_CHUNK = 256


@dataclass(frozen=True)
class EfficacyPosterior:
    """Normalized density of the efficacy on a grid over [0, 1]."""

    grid: np.ndarray
    density: np.ndarray
    log_norm: float
    log_density: np.ndarray

    def __post_init__(self):
        g = self.grid
        if g.ndim != 1 or g.size < 3 or g[0] != 0.0 or g[-1] != 1.0 or np.any(np.diff(g) <= 0):
            raise DomainError("grid must be strictly increasing from 0 to 1")
        if np.any(self.density < 0):
            raise DomainError("density must be non-negative")

    @classmethod
    def from_log_density(cls, grid: np.ndarray, log_density: np.ndarray) -> "EfficacyPosterior":
        grid = np.asarray(grid, dtype=float)
        log_density = np.asarray(log_density, dtype=float)
        shift = float(np.max(log_density))
        dens = np.exp(log_density - shift)
        area = float(np.trapezoid(dens, grid))
        log_norm = shift + float(np.log(area))
        return cls(grid, dens / area, log_norm, log_density - log_norm)

    @property
    def mean(self) -> float:
        return float(np.trapezoid(self.grid * self.density, self.grid))

    @property
    def sd(self) -> float:
        m = self.mean
        return float(np.sqrt(np.trapezoid((self.grid - m) ** 2 * self.density, self.grid)))

    def cdf(self) -> np.ndarray:
        steps = 0.5 * (self.density[1:] + self.density[:-1]) * np.diff(self.grid)
        c = np.concatenate([[0.0], np.cumsum(steps)])
        return c / c[-1]

    def quantile(self, p: float) -> float:
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"quantile level must lie in [0, 1], got {p}")
        c = self.cdf()
        # flat stretches of the CDF: take the first point that reaches p
        i = int(np.searchsorted(c, p, side="left"))
        if i == 0:
            return float(self.grid[0])
        c0, c1 = c[i - 1], c[i]
        x0, x1 = self.grid[i - 1], self.grid[i]
        if c1 == c0:
            return float(x1)
        return float(x0 + (p - c0) / (c1 - c0) * (x1 - x0))

    def tail_prob(self, threshold: float) -> float:
        """P(eps >= threshold) from the trapezoid CDF."""
        c = self.cdf()
        return float(1.0 - np.interp(threshold, self.grid, c))

    def mode(self) -> float:
        """Grid argmax refined by a parabola through the neighbouring log-densities."""
        ld = self.log_density
        i = int(np.argmax(ld))
        if i == 0 or i == ld.size - 1:
            return float(self.grid[i])
        y0, y1, y2 = ld[i - 1], ld[i], ld[i + 1]
        denom = y0 - 2.0 * y1 + y2
        if not np.isfinite(denom) or denom >= 0:
            return float(self.grid[i])
        h_lo = self.grid[i] - self.grid[i - 1]
        h_hi = self.grid[i + 1] - self.grid[i]
        if not np.isclose(h_lo, h_hi):
            return float(self.grid[i])
        return float(self.grid[i] + 0.5 * h_lo * (y0 - y2) / denom)


def _assault_weights(counts: TrialCounts) -> tuple[np.ndarray, np.ndarray]:
    """Per-k log weights of the sum, with negligible terms pruned.

    Every point's maximum is at least the k = n_vi term (weight c[0] times
    eps^0), so terms whose eps-free weight is already PRUNE_LOG_GAP below
    c[0] are below every point's maximum by at least that much.
    """
    n_v, n_p, n_vi, n_pi = counts.n_v, counts.n_p, counts.n_vi, counts.n_pi
    k = np.arange(n_vi, n_v + 1, dtype=float)
    c = (
        -ln_gamma(k - n_vi + 1.0)
        - ln_gamma(n_v - k + 1.0)
        + ln_beta(k + n_pi + 1.0, n_v - k + n_p - n_pi + 1.0)
    )
    c = np.atleast_1d(c)
    keep = c >= c[0] - PRUNE_LOG_GAP
    return (k[keep] - n_vi), c[keep]


def _log_posterior_on(eps: np.ndarray, counts: TrialCounts) -> np.ndarray:
    offsets, weights = _assault_weights(counts)
    out = np.empty_like(eps)
    with np.errstate(divide="ignore"):
        log_eps = np.log(eps)
        log_1m = np.log1p(-eps)
    head = np.zeros_like(eps) if counts.n_vi == 0 else counts.n_vi * log_1m
    nonzero = offsets > 0
    for start in range(0, eps.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        le = log_eps[sl, None]
        # 0 * log(0) = 0: at eps = 0 only the k = n_vi term survives
        with np.errstate(invalid="ignore"):
            terms = weights[None, :] + np.where(nonzero[None, :], offsets[None, :] * le, 0.0)
        m = np.max(terms, axis=1)
        out[sl] = m + np.log(np.sum(np.exp(terms - m[:, None]), axis=1))
    return head + out


def unnormalized_log_posterior(eps, counts: TrialCounts):
    """Log posterior density of the efficacy, up to a constant fixed by ``counts``.

    Returns -inf at eps = 1 whenever vaccinated infections were observed.
    """
    arr = np.atleast_1d(np.asarray(eps, dtype=float))
    if np.any((arr < 0) | (arr > 1)):
        raise DomainError("eps must lie in [0, 1]")
    out = _log_posterior_on(arr, counts)
    return float(out[0]) if np.ndim(eps) == 0 else out


def posterior_density(counts: TrialCounts, grid_size: int = DEFAULT_GRID) -> EfficacyPosterior:
    """Normalized posterior of the efficacy on ``grid_size`` uniform points."""
    if grid_size < 101:
        raise DomainError(f"grid_size must be >= 101, got {grid_size}")
    grid = np.linspace(0.0, 1.0, grid_size)
    return EfficacyPosterior.from_log_density(grid, _log_posterior_on(grid, counts))


def posterior_summary(post: EfficacyPosterior, tail_threshold: float = 0.9) -> MomentSummary:
    """Mean, sd, refined mode, central 95% interval and upper-tail probability."""
    return MomentSummary(
        mean=post.mean,
        sd=post.sd,
        mode=post.mode(),
        ci_low=post.quantile(0.025),
        ci_high=post.quantile(0.975),
        tail_prob=min(1.0, max(0.0, post.tail_prob(tail_threshold))),
        tail_threshold=tail_threshold,
    )
