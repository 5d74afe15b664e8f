import numpy as np
import pytest

from vaxinfer.exact import posterior_density, posterior_summary
from vaxinfer.gibbs import McmcConfig, run_chains
from vaxinfer.model import TrialCounts, builtin_dataset

LABELS = [t.label for t in builtin_dataset()]
TINY = TrialCounts("tiny", 5, 5, 1, 2)

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def trials():
    return {t.label: t for t in builtin_dataset()}


@pytest.fixture(scope="session")
def exact_posteriors(trials):
    return {label: posterior_density(t, 2001) for label, t in trials.items()}


@pytest.fixture(scope="session")
def exact_summaries(exact_posteriors):
    return {label: posterior_summary(p, 0.9) for label, p in exact_posteriors.items()}


@pytest.fixture(scope="session")
def chains(trials):
    """Default-configuration Gibbs runs (4 x 50k) for every built-in trial."""
    config = McmcConfig(seed=42)
    return {label: run_chains(t, config) for label, t in trials.items()}


def forward_rejection(counts, n_draws, seed, chunk=1_000_000):
    """Forward-simulate the network with uniform priors; keep exact data matches.

    Returns accepted (eps, p_a, n_va) arrays.
    """
    keep_eps, keep_pa, keep_nva = [], [], []
    for i in range(0, n_draws, chunk):
        g = np.random.default_rng([seed, i // chunk])
        m = min(chunk, n_draws - i)
        eps = g.random(m)
        p_a = g.random(m)
        n_pi = g.binomial(counts.n_p, p_a)
        n_va = g.binomial(counts.n_v, p_a)
        n_vi = g.binomial(n_va, 1.0 - eps)
        hit = (n_pi == counts.n_pi) & (n_vi == counts.n_vi)
        keep_eps.append(eps[hit])
        keep_pa.append(p_a[hit])
        keep_nva.append(n_va[hit])
    return np.concatenate(keep_eps), np.concatenate(keep_pa), np.concatenate(keep_nva)


@pytest.fixture(scope="session")
def tiny_rejection():
    return forward_rejection(TINY, 10_000_000, seed=7)


@pytest.fixture
def acceptance():
    """Record one acceptance criterion outcome for the terminal summary."""

    def record(number, name, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        _ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {name} {detail}".rstrip())
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
