"""Three-block Gibbs sampler for the vaccine/placebo network.

Model (uniform priors on the assault probability and on 1 - eps)::

    n_pi ~ Binom(n_p, p_a)
    n_va ~ Binom(n_v, p_a)
    n_vi ~ Binom(n_va, 1 - eps)

Full conditionals used in each sweep:

* p_a | n_va        ~ Beta(n_va + n_pi + 1, (n_v - n_va) + (n_p - n_pi) + 1)
* 1 - eps | n_va    ~ Beta(n_vi + 1, n_va - n_vi + 1)
* n_va | p_a, eps   = n_vi + Binom(n_v - n_vi, p_a * eps / (1 - p_a * (1 - eps)))

The last line follows because an uninfected vaccinee was either assaulted
and shielded (probability p_a * eps) or never assaulted (1 - p_a).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .beta import beta_from_moments
from .errors import DiagnosticsError, DomainError
from .model import MomentSummary, TrialCounts
from .numerics import RngState

RHAT_WARN = 1.05
VARIABLES = ("eps", "p_a", "n_va")


@dataclass(frozen=True)
class McmcConfig:
    n_iter: int = 50_000
    burn_in: int = 5_000
    thin: int = 1
    n_chains: int = 4
    seed: int = 42
    tail_threshold: float = 0.9

    def __post_init__(self):
        if self.n_iter <= self.burn_in:
            raise DomainError(f"n_iter ({self.n_iter}) must exceed burn_in ({self.burn_in})")
        if self.burn_in < 0:
            raise DomainError("burn_in must be non-negative")
        if self.thin < 1:
            raise DomainError("thin must be >= 1")
        if self.n_chains < 2:
            raise DomainError("n_chains must be >= 2")
        RngState(self.seed)  # range check

    def to_dict(self) -> dict:
        return {
            "n_iter": self.n_iter, "burn_in": self.burn_in, "thin": self.thin,
            "n_chains": self.n_chains, "seed": self.seed, "tail_threshold": self.tail_threshold,
        }


@dataclass(frozen=True)
class Diagnostic:
    rhat: float
    ess: float
    mcse: float

    def to_dict(self) -> dict:
        return {"rhat": self.rhat, "ess": self.ess, "mcse": self.mcse}


@dataclass
class McmcSamples:
    """Post-burn-in draws, shape (n_chains, n_kept) per variable."""

    eps_draws: np.ndarray
    pA_draws: np.ndarray
    nVA_draws: np.ndarray
    diagnostics: dict[str, Diagnostic] = field(default_factory=dict)

    def draws(self, variable: str) -> np.ndarray:
        try:
            return {"eps": self.eps_draws, "p_a": self.pA_draws, "n_va": self.nVA_draws}[variable]
        except KeyError:
            raise KeyError(f"unknown variable {variable!r}; expected one of {VARIABLES}") from None

    @property
    def n_chains(self) -> int:
        return self.eps_draws.shape[0]

    @property
    def converged(self) -> bool:
        return all(d.rhat <= RHAT_WARN for d in self.diagnostics.values())

    def warnings(self) -> list[str]:
        return [
            f"{name}: rhat {d.rhat:.4f} exceeds {RHAT_WARN}"
            for name, d in self.diagnostics.items()
            if not d.rhat <= RHAT_WARN
        ]


def _initial_nva(counts: TrialCounts, gen: np.random.Generator) -> int:
    p_a = (counts.n_pi + 1) / (counts.n_p + 2)
    # stream-dependent jitter of up to a factor of two either way
    jitter = 2.0 ** gen.uniform(-1.0, 1.0)
    return int(min(counts.n_v, max(counts.n_vi, round(counts.n_v * p_a * jitter))))


def _run_chain(counts: TrialCounts, config: McmcConfig, stream: int):
    gen = RngState(config.seed, stream).generator()
    n_v, n_p, n_vi, n_pi = counts.n_v, counts.n_p, counts.n_vi, counts.n_pi
    n_kept = len(range(config.burn_in, config.n_iter, config.thin))
    eps_out = np.empty(n_kept)
    pa_out = np.empty(n_kept)
    nva_out = np.empty(n_kept, dtype=np.int64)

    beta = gen.beta
    binomial = gen.binomial
    n_va = _initial_nva(counts, gen)
    placebo_free = n_p - n_pi
    free = n_v - n_vi
    j = 0
    for it in range(config.n_iter):
        p_a = beta(n_va + n_pi + 1, (n_v - n_va) + placebo_free + 1)
        eps = 1.0 - beta(n_vi + 1, n_va - n_vi + 1)
        q = p_a * eps / (1.0 - p_a * (1.0 - eps))
        n_va = n_vi + binomial(free, min(1.0, q))
        if it >= config.burn_in and (it - config.burn_in) % config.thin == 0:
            eps_out[j] = eps
            pa_out[j] = p_a
            nva_out[j] = n_va
            j += 1
    return eps_out, pa_out, nva_out


def run_chains(counts: TrialCounts, config: McmcConfig | None = None) -> McmcSamples:
    """Run ``config.n_chains`` independent chains, one Philox stream each.

    Severity counts on ``counts`` are ignored: they are d-separated from the
    efficacy once the infected counts are observed.
    """
    config = config or McmcConfig()
    results = [_run_chain(counts, config, stream) for stream in range(config.n_chains)]
    samples = McmcSamples(
        eps_draws=np.stack([r[0] for r in results]),
        pA_draws=np.stack([r[1] for r in results]),
        nVA_draws=np.stack([r[2] for r in results]),
    )
    samples.diagnostics = diagnostics(samples)
    return samples


def _split(x: np.ndarray) -> np.ndarray:
    half = x.shape[1] // 2
    return np.concatenate([x[:, :half], x[:, half:2 * half]], axis=0)


def split_rhat(chains: np.ndarray) -> float:
    """Split-chain potential scale reduction; 1.0 when all draws are equal."""
    x = _split(np.asarray(chains, dtype=float))
    # shifting by one draw makes constant chains exactly zero, so W == 0 is reliable
    x = x - x.flat[0]
    m, n = x.shape
    if n < 2:
        raise DiagnosticsError("need at least 4 draws per chain for split R-hat")
    w = float(np.mean(np.var(x, axis=1, ddof=1)))
    b_over_n = float(np.var(np.mean(x, axis=1), ddof=1))
    if w == 0.0:
        return 1.0 if b_over_n == 0.0 else float("inf")
    var_plus = (n - 1) / n * w + b_over_n
    return float(np.sqrt(var_plus / w))


def _autocov(x: np.ndarray) -> np.ndarray:
    # biased autocovariance of each row via FFT
    m, n = x.shape
    centered = x - x.mean(axis=1, keepdims=True)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(centered, n=size, axis=1)
    acov = np.fft.irfft(f * np.conj(f), n=size, axis=1)[:, :n]
    return acov / n


def effective_sample_size(chains: np.ndarray) -> float:
    """Multi-chain ESS with Geyer truncation at the first negative pair sum."""
    x = np.asarray(chains, dtype=float)
    x = x - x.flat[0]
    m, n = x.shape
    if n < 4:
        raise DiagnosticsError("need at least 4 draws per chain for ESS")
    acov = _autocov(x)
    w = float(np.mean(acov[:, 0]) * n / (n - 1))
    b_over_n = float(np.var(np.mean(x, axis=1), ddof=1)) if m > 1 else 0.0
    var_plus = (n - 1) / n * w + b_over_n
    if var_plus == 0.0:
        return float(m * n)
    rho = 1.0 - (w - np.mean(acov, axis=0)) / var_plus
    rho[0] = 1.0
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair < 0:
            break
        tau += 2.0 * pair
    return float(m * n / tau)


def diagnostics(samples: McmcSamples) -> dict[str, Diagnostic]:
    """R-hat, ESS and MCSE of the mean for each monitored variable."""
    if samples.n_chains < 2:
        raise DiagnosticsError("convergence diagnostics need at least two chains")
    out = {}
    for name in VARIABLES:
        x = samples.draws(name).astype(float)
        ess = effective_sample_size(x)
        sd = float(np.std(x, ddof=1))
        out[name] = Diagnostic(rhat=split_rhat(x), ess=ess, mcse=sd / np.sqrt(ess) if ess > 0 else float("inf"))
    return out


def summarize(samples: McmcSamples, tail_threshold: float = 0.9, variable: str = "eps") -> MomentSummary:
    """Pooled moments, empirical 95% interval and tail frequency.

    The mode is the mode of the moment-matched Beta, which is less sensitive
    than a histogram peak.
    """
    if variable not in ("eps", "p_a"):
        raise KeyError(f"summarize handles probability variables only, got {variable!r}")
    x = samples.draws(variable).ravel()
    if x.size == 0:
        raise DiagnosticsError("no draws to summarize")
    mean = float(np.mean(x))
    sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    try:
        mode = beta_from_moments(mean, sd).mode
    except DomainError:
        mode = mean
    lo, hi = np.quantile(x, [0.025, 0.975])
    return MomentSummary(
        mean=mean,
        sd=sd,
        mode=float(mode),
        ci_low=float(lo),
        ci_high=float(hi),
        tail_prob=float(np.mean(x >= tail_threshold)),
        tail_threshold=tail_threshold,
    )


def count_moments(samples: McmcSamples, variable: str = "n_va") -> tuple[float, float]:
    """Mean and sd of an integer-valued chain such as the assaulted vaccinees."""
    x = samples.draws(variable).ravel().astype(float)
    return float(np.mean(x)), float(np.std(x, ddof=1))
