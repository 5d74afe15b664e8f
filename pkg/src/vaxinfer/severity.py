"""Severe-disease probabilities per arm.

Once the infected counts are observed, the severity nodes are cut off from
the rest of the network, so each arm's probability of a severe course has
an exact conjugate posterior under a uniform prior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .beta import BetaParams, beta_moments, rule_of_succession
from .errors import DomainError, UnsupportedDataError
from .model import TrialCounts
from .numerics import RngState

MomentPair = tuple[float, float]


@dataclass(frozen=True)
class SeverityPosteriors:
    vaccine_arm: BetaParams
    placebo_arm: BetaParams
    # probability that the next infected vaccinee escapes a severe course
    severe_free_vaccine: float

    def to_dict(self) -> dict:
        out = {}
        for name, params in (("vaccine_arm", self.vaccine_arm), ("placebo_arm", self.placebo_arm)):
            mean, sd = beta_moments(params)
            out[name] = {"r": params.r, "s": params.s, "mean": mean, "sd": sd}
        out["severe_free_vaccine"] = self.severe_free_vaccine
        diff_mean, diff_sd = difference_summary(self.placebo_arm, self.vaccine_arm)
        out["placebo_minus_vaccine"] = {"mean": diff_mean, "sd": diff_sd}
        return out


def severity_posterior(n_infected: int, n_severe: int) -> BetaParams:
    """Beta(n_severe + 1, n_infected - n_severe + 1)."""
    if n_severe < 0 or n_infected < 0 or n_severe > n_infected:
        raise DomainError(f"need 0 <= n_severe <= n_infected, got {n_severe} of {n_infected}")
    return BetaParams(n_severe + 1, n_infected - n_severe + 1)


def severity_report(counts: TrialCounts, vaccine_severe: Optional[int] = None) -> SeverityPosteriors:
    """Both arm posteriors plus the severe-free headline for the vaccine arm.

    ``vaccine_severe`` replaces the observed vaccine-arm severe count, for
    counterfactuals such as one severe case instead of none.
    """
    if not counts.has_severity:
        raise UnsupportedDataError(f"{counts.label}: no severity counts reported")
    n_vis = counts.n_vis if vaccine_severe is None else vaccine_severe
    vaccine = severity_posterior(counts.n_vi, n_vis)
    placebo = severity_posterior(counts.n_pi, counts.n_pis)
    headline = rule_of_succession(counts.n_vi - n_vis, counts.n_vi)
    return SeverityPosteriors(vaccine, placebo, headline)


def _moments(x: Union[BetaParams, MomentPair]) -> MomentPair:
    if isinstance(x, BetaParams):
        return beta_moments(x)
    mean, sd = x
    return float(mean), float(sd)


def difference_summary(a: Union[BetaParams, MomentPair], b: Union[BetaParams, MomentPair]) -> MomentPair:
    """Mean and sd of a - b for independent a and b.

    Arguments are Beta parameters or (mean, sd) pairs.
    """
    mean_a, sd_a = _moments(a)
    mean_b, sd_b = _moments(b)
    return mean_a - mean_b, math.hypot(sd_a, sd_b)


def sample_difference(a: BetaParams, b: BetaParams, n: int = 1_000_000, seed: int = 42, bins: int = 200):
    """Histogram of a - b from independent Beta draws.

    Returns (bin_edges, density, draws).
    """
    gen = RngState(seed).generator()
    draws = gen.beta(a.r, a.s, size=n) - gen.beta(b.r, b.s, size=n)
    density, edges = np.histogram(draws, bins=bins, range=(-1.0, 1.0), density=True)
    return edges, density, draws
