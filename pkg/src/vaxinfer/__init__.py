"""Bayesian inference of vaccine efficacy from trial counts."""

__version__ = "0.1.0"

from .beta import (  # noqa: E402
    BetaParams,
    beta_from_moments,
    beta_moments,
    fit_posterior,
    reshape_with_prior,
    rule_of_succession,
)
from .exact import EfficacyPosterior, posterior_density, posterior_summary  # noqa: E402
from .gibbs import McmcConfig, McmcSamples, diagnostics, run_chains, summarize  # noqa: E402
from .model import MomentSummary, TrialCounts, builtin_dataset, find_builtin, load_dataset  # noqa: E402

__all__ = [
    "BetaParams",
    "EfficacyPosterior",
    "McmcConfig",
    "McmcSamples",
    "MomentSummary",
    "TrialCounts",
    "beta_from_moments",
    "beta_moments",
    "builtin_dataset",
    "diagnostics",
    "find_builtin",
    "fit_posterior",
    "load_dataset",
    "posterior_density",
    "posterior_summary",
    "reshape_with_prior",
    "rule_of_succession",
    "run_chains",
    "summarize",
]
