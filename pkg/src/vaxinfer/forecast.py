"""Forecasting infections in a newly vaccinated cohort, and trial design.

The cohort is assumed small relative to its population, so there is no
herd-immunity feedback on the assault probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .beta import BetaParams, beta_from_moments
from .errors import DomainError
from .exact import DEFAULT_GRID, posterior_density
from .model import TrialCounts
from .numerics import RngState

MIN_SAMPLES = 10_000


@dataclass(frozen=True)
class ForecastSpec:
    """Inputs of a cohort forecast.

    ``eps_dist`` is either a point value for the efficacy or a Beta
    describing its uncertainty. ``pA_sd`` of zero means the assault
    probability is known exactly; otherwise it is moment-matched to a Beta.
    """

    n_V_new: int
    pA_mean: float
    pA_sd: float = 0.0
    eps_dist: Union[float, BetaParams] = 0.944
    n_samples: int = 1_000_000
    seed: int = 42

    def __post_init__(self):
        if self.n_V_new < 0:
            raise DomainError("cohort size must be non-negative")
        if not 0.0 < self.pA_mean < 1.0:
            raise DomainError(f"assault probability mean must lie in (0, 1), got {self.pA_mean}")
        if self.pA_sd < 0:
            raise DomainError("assault probability sd must be non-negative")
        if self.pA_sd > 0:
            # raises DomainError when infeasible
            beta_from_moments(self.pA_mean, self.pA_sd)
        if not isinstance(self.eps_dist, BetaParams) and not 0.0 <= float(self.eps_dist) <= 1.0:
            raise DomainError(f"point efficacy must lie in [0, 1], got {self.eps_dist}")
        if self.n_samples < MIN_SAMPLES:
            raise DomainError(f"n_samples must be >= {MIN_SAMPLES}, got {self.n_samples}")

    @property
    def eps_moments(self) -> tuple[float, float]:
        if isinstance(self.eps_dist, BetaParams):
            return self.eps_dist.mean, self.eps_dist.sd
        return float(self.eps_dist), 0.0

    @property
    def is_point(self) -> bool:
        return self.pA_sd == 0 and not isinstance(self.eps_dist, BetaParams)


@dataclass
class ForecastResult:
    mean: float
    sd: float
    histogram: list[tuple[int, int]] = field(default_factory=list)
    p_ov: Optional[float] = None

    @property
    def n_samples(self) -> int:
        return sum(c for _, c in self.histogram)


def forecast_mc(spec: ForecastSpec) -> ForecastResult:
    """Direct Monte Carlo of the number of infected vaccinees in the new cohort."""
    gen = RngState(spec.seed).generator()
    n = spec.n_samples
    if spec.pA_sd > 0:
        pa_beta = beta_from_moments(spec.pA_mean, spec.pA_sd)
        p_a = gen.beta(pa_beta.r, pa_beta.s, size=n)
    else:
        p_a = spec.pA_mean
    if isinstance(spec.eps_dist, BetaParams):
        eps = gen.beta(spec.eps_dist.r, spec.eps_dist.s, size=n)
    else:
        eps = float(spec.eps_dist)
    n_assaulted = gen.binomial(spec.n_V_new, p_a, size=n)
    n_infected = gen.binomial(n_assaulted, 1.0 - np.asarray(eps), size=n)

    counts = np.bincount(n_infected)
    hist = [(int(k), int(c)) for k, c in enumerate(counts) if c]
    p_ov = spec.pA_mean * (1.0 - float(spec.eps_dist)) if spec.is_point else None
    return ForecastResult(
        mean=float(np.mean(n_infected)),
        sd=float(np.std(n_infected, ddof=1)),
        histogram=hist,
        p_ov=p_ov,
    )


def forecast_approx(spec: ForecastSpec) -> tuple[float, float]:
    """Linearized mean and sd of the forecast.

    Binomial variance at the expected parameters, plus each parameter's
    variance propagated to first order.
    """
    eps_mean, eps_sd = spec.eps_moments
    n = spec.n_V_new
    p_ov = spec.pA_mean * (1.0 - eps_mean)
    mean = n * p_ov
    var = (
        n * p_ov * (1.0 - p_ov)
        + (n * (1.0 - eps_mean)) ** 2 * spec.pA_sd ** 2
        + (n * spec.pA_mean) ** 2 * eps_sd ** 2
    )
    return mean, math.sqrt(var)


@dataclass(frozen=True)
class Replication:
    n_vi: int
    n_pi: int
    eps_mean: float
    eps_sd: float


def design_study(
    n_V: int,
    n_P: int,
    true_eps: float,
    true_pA: float,
    n_replications: int = 200,
    seed: int = 42,
    grid_size: int = DEFAULT_GRID,
) -> tuple[float, list[Replication]]:
    """Average posterior sd of the efficacy over simulated trials.

    Each replication draws its own trial from stream ``index`` of ``seed``
    and is analysed with the exact engine.
    """
    if n_replications < 100:
        raise DomainError(f"n_replications must be >= 100, got {n_replications}")
    if not 0.0 <= true_eps <= 1.0 or not 0.0 <= true_pA <= 1.0:
        raise DomainError("true_eps and true_pA must be probabilities")
    reps = []
    for i in range(n_replications):
        gen = RngState(seed, i).generator()
        n_pi = int(gen.binomial(n_P, true_pA))
        n_va = int(gen.binomial(n_V, true_pA))
        n_vi = int(gen.binomial(n_va, 1.0 - true_eps))
        post = posterior_density(TrialCounts(f"rep-{i}", n_V, n_P, n_vi, n_pi), grid_size)
        reps.append(Replication(n_vi, n_pi, post.mean, post.sd))
    return float(np.mean([r.eps_sd for r in reps])), reps


@dataclass(frozen=True)
class AllocationComparison:
    baseline: tuple[int, int]
    reduced: tuple[int, int]
    baseline_sd: float
    reduced_sd: float

    @property
    def ratio(self) -> float:
        return self.reduced_sd / self.baseline_sd


def placebo_reduction_study(
    counts: TrialCounts,
    reduction: float = 2.0 / 3.0,
    true_eps: float = 0.95,
    true_pA: Optional[float] = None,
    n_replications: int = 200,
    seed: int = 42,
    grid_size: int = DEFAULT_GRID,
) -> AllocationComparison:
    """Compare sd(eps) for the real allocation and a smaller placebo arm.

    The total enrolment is held fixed: participants removed from the placebo
    arm join the vaccine arm. ``true_pA`` defaults to n_pi / n_p so that the
    simulated placebo infections match the real trial on average.
    """
    if not 0.0 < reduction < 1.0:
        raise DomainError(f"reduction must lie in (0, 1), got {reduction}")
    p_a = counts.n_pi / counts.n_p if true_pA is None else true_pA
    moved = int(round(counts.n_p * reduction))
    reduced = (counts.n_v + moved, counts.n_p - moved)
    base_sd, _ = design_study(counts.n_v, counts.n_p, true_eps, p_a, n_replications, seed, grid_size)
    red_sd, _ = design_study(*reduced, true_eps, p_a, n_replications, (seed + 1) % 2**64, grid_size)
    return AllocationComparison((counts.n_v, counts.n_p), reduced, base_sd, red_sd)
