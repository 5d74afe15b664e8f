import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vaxinfer.beta import (
    BetaParams,
    beta_from_moments,
    beta_moments,
    fit_posterior,
    reshape_with_prior,
    rule_of_succession,
)
from vaxinfer.errors import DomainError
from vaxinfer.model import MomentSummary

shape = st.floats(0.5, 1e4)
# expert priors are at least as peaked as the uniform
prior_shape = st.floats(1.0, 1e4)


class TestMoments:
    def test_uniform(self):
        mean, sd = beta_moments(BetaParams(1, 1))
        assert mean == 0.5
        assert sd == pytest.approx(math.sqrt(1 / 12), abs=1e-15)

    @pytest.mark.parametrize(
        "r, s, mean, sd",
        [(1, 12, 0.0769, 0.0712), (2, 8, 0.200, 0.1206)],
    )
    def test_severity_arms(self, r, s, mean, sd):
        m, d = beta_moments(BetaParams(r, s))
        assert m == pytest.approx(mean, abs=5e-5)
        assert d == pytest.approx(sd, abs=5e-5)

    def test_invalid_params(self):
        with pytest.raises(DomainError):
            BetaParams(0, 1)


class TestFromMoments:
    @pytest.mark.parametrize(
        "mean, sd, r, s",
        [(0.935, 0.019, 156.47393, 10.87787), (0.861, 0.075, 17.45787, 2.81840)],
    )
    def test_closed_form(self, mean, sd, r, s):
        b = beta_from_moments(mean, sd)
        assert b.r == pytest.approx(r, abs=1e-5)
        assert b.s == pytest.approx(s, abs=1e-5)
        # the fitted Beta reproduces the requested moments
        assert beta_moments(b) == pytest.approx((mean, sd), rel=1e-12)

    @pytest.mark.parametrize(
        "mean, sd, published",
        [(0.935, 0.019, (156, 11)), (0.861, 0.075, (17, 2.8))],
    )
    def test_published_fits_to_two_figures(self, mean, sd, published):
        b = beta_from_moments(mean, sd)
        assert float(f"{b.r:.2g}") == published[0] or round(b.r) == published[0]
        assert float(f"{b.s:.2g}") == published[1]

    def test_uniform_round_trip(self):
        b = beta_from_moments(0.5, math.sqrt(1 / 12))
        assert b.r == pytest.approx(1.0, abs=1e-12)
        assert b.s == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("mean, sd", [(0.5, 0.5), (0.0, 0.1), (1.0, 0.1), (0.3, 0.0)])
    def test_infeasible(self, mean, sd):
        with pytest.raises(DomainError):
            beta_from_moments(mean, sd)

    @given(r=shape, s=shape)
    def test_round_trip(self, r, s):
        b = beta_from_moments(*beta_moments(BetaParams(r, s)))
        assert b.r == pytest.approx(r, rel=1e-9)
        assert b.s == pytest.approx(s, rel=1e-9)


@pytest.mark.parametrize(
    "mean, sd, r, s",
    [(0.944, 0.019, 137.29316, 8.14451), (0.933, 0.028, 73.45828, 5.27514), (0.599, 0.090, 17.16386, 11.49033)],
)
def test_fit_posterior(mean, sd, r, s):
    b = fit_posterior(MomentSummary(mean, sd, mean, mean - 0.1, min(1.0, mean + 0.1), 0.5))
    assert b.r == pytest.approx(r, abs=1e-5)
    assert b.s == pytest.approx(s, abs=1e-5)


class TestReshape:
    def test_flat_prior_is_identity(self):
        f = BetaParams(137.3, 8.14)
        assert reshape_with_prior(f, BetaParams(1, 1)) == f

    def test_arithmetic(self):
        p = reshape_with_prior(BetaParams(137.3, 8.14), BetaParams(9, 3))
        assert p.r == pytest.approx(145.3)
        assert p.s == pytest.approx(10.14)

    @given(r1=prior_shape, s1=prior_shape, r2=prior_shape, s2=prior_shape, rf=shape, sf=shape)
    def test_commutes(self, r1, s1, r2, s2, rf, sf):
        f = BetaParams(rf, sf)
        twice = reshape_with_prior(reshape_with_prior(f, BetaParams(r1, s1)), BetaParams(r2, s2))
        once = reshape_with_prior(f, BetaParams(r1 + r2 - 1, s1 + s2 - 1))
        assert twice.r == pytest.approx(once.r, rel=1e-12)
        assert twice.s == pytest.approx(once.s, rel=1e-12)

    def test_non_positive_result(self):
        with pytest.raises(DomainError):
            reshape_with_prior(BetaParams(0.5, 3), BetaParams(0.4, 3))


class TestSuccession:
    def test_eleven_of_eleven(self):
        assert rule_of_succession(11, 11) == 12 / 13

    def test_no_information(self):
        assert rule_of_succession(0, 0) == 0.5

    def test_thirty(self):
        assert rule_of_succession(30, 30) == 31 / 32

    def test_domain(self):
        with pytest.raises(DomainError):
            rule_of_succession(5, 4)

    @given(n=st.integers(0, 10**6), data=st.data())
    def test_equals_beta_mean(self, n, data):
        x = data.draw(st.integers(0, n))
        assert rule_of_succession(x, n) == beta_moments(BetaParams(x + 1, n - x + 1))[0]


def test_quantile_and_cdf_accessors():
    b = BetaParams(3, 5)
    assert b.cdf(b.quantile(0.3)) == pytest.approx(0.3, abs=1e-10)
    assert b.mode == pytest.approx(2 / 6)
    assert np.isclose(b.pdf(0.5), 105 * 0.5**2 * 0.5**4)


@pytest.mark.parametrize("label", ["Moderna-1", "Moderna-2", "Pfizer"])
def test_fit_quality_against_exact_density(label, exact_posteriors, exact_summaries):
    post = exact_posteriors[label]
    fitted = fit_posterior(exact_summaries[label]).pdf(post.grid)
    assert np.max(np.abs(fitted - post.density)) < 0.05 * post.density.max()


def gibbs_with_eps_prior(counts, prior, n_iter=40_000, burn_in=2_000, n_chains=4, seed=21):
    """Gibbs sweep with a Beta(r0, s0) prior on eps instead of the uniform one."""
    out = np.empty((n_chains, n_iter - burn_in))
    for c in range(n_chains):
        g = np.random.Generator(np.random.Philox(key=[seed, c]))
        n_va = counts.n_vi + (counts.n_v - counts.n_vi) // 100
        for it in range(n_iter):
            p_a = g.beta(n_va + counts.n_pi + 1, counts.n_v - n_va + counts.n_p - counts.n_pi + 1)
            eps = 1.0 - g.beta(counts.n_vi + prior.s, n_va - counts.n_vi + prior.r)
            q = p_a * eps / (1.0 - p_a * (1.0 - eps))
            n_va = counts.n_vi + g.binomial(counts.n_v - counts.n_vi, q)
            if it >= burn_in:
                out[c, it - burn_in] = eps
    return out


@pytest.mark.parametrize("label", ["Moderna-2", "Pfizer"])
def test_reshape_matches_modified_sampler(label, trials, exact_summaries):
    from vaxinfer.gibbs import effective_sample_size

    prior = BetaParams(9, 3)
    draws = gibbs_with_eps_prior(trials[label], prior)
    mcse = draws.std(ddof=1) / np.sqrt(effective_sample_size(draws))
    reshaped = reshape_with_prior(fit_posterior(exact_summaries[label]), prior)
    assert abs(draws.mean() - reshaped.mean) < 3 * mcse
