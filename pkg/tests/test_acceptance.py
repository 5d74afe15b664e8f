"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary
under "acceptance criteria", then asserts.
"""

import math
import time

import numpy as np
import pytest

from conftest import LABELS, TINY
from vaxinfer.beta import BetaParams, beta_from_moments, beta_moments, rule_of_succession
from vaxinfer.exact import posterior_density
from vaxinfer.forecast import ForecastSpec, forecast_approx, forecast_mc, placebo_reduction_study
from vaxinfer.gibbs import McmcConfig, count_moments, run_chains, summarize
from vaxinfer.model import dump_dataset, builtin_dataset, load_dataset
from vaxinfer.severity import difference_summary, severity_posterior, severity_report

# label: (mean, sd, ci_low, ci_high, P(eps >= 0.9))
PUBLISHED_SUMMARIES = {
    "Moderna-1": (0.933, 0.028, 0.866, 0.976, 0.875),
    "Moderna-2": (0.935, 0.019, 0.892, 0.967, 0.951),
    "Pfizer": (0.944, 0.019, 0.900, 0.975, 0.974),
    "AstraZeneca LD-SD": (0.861, 0.075, 0.678, 0.964, 0.349),
    "AstraZeneca SD-SD": (0.599, 0.090, 0.400, 0.750, 0.000),
}
PUBLISHED_EFFICACY = {
    "Moderna-1": 0.945, "Moderna-2": 0.941, "Pfizer": 0.950,
    "AstraZeneca LD-SD": 0.900, "AstraZeneca SD-SD": 0.621,
}
ASSAULTED = {
    "Moderna-1": (89, 13), "Moderna-2": (185, 19), "Pfizer": (160, 18),
    "AstraZeneca LD-SD": (29, 8), "AstraZeneca SD-SD": (70, 12),
}
BETA_SHAPES = {
    "Moderna-1": (73, 5.3), "Moderna-2": (156, 11), "Pfizer": (137, 8.1),
    "AstraZeneca LD-SD": (17, 2.8), "AstraZeneca SD-SD": (17, 11),
}


def test_criterion_01_posterior_summaries(acceptance, exact_summaries, chains):
    failures = []
    for engine in ("exact", "gibbs"):
        for label in LABELS:
            s = exact_summaries[label] if engine == "exact" else summarize(chains[label])
            mean, sd, lo, hi, tail = PUBLISHED_SUMMARIES[label]
            checks = [
                abs(s.mean - mean) <= 0.005,
                abs(s.sd - sd) <= 0.005,
                abs(s.ci_low - lo) <= 0.015,
                abs(s.ci_high - hi) <= 0.015,
                abs(s.tail_prob - tail) <= 0.02,
            ]
            if label == "AstraZeneca SD-SD":
                checks.append(s.tail_prob < 0.002)
            if not all(checks):
                failures.append(
                    f"{engine}/{label}: {s.mean:.4f}+-{s.sd:.4f} [{s.ci_low:.4f}, {s.ci_high:.4f}] {s.tail_prob:.4f}"
                )
    acceptance(1, "posterior summaries, both engines", not failures, "; ".join(failures))
    assert not failures


def test_criterion_02_modes(acceptance, exact_summaries):
    gaps = {label: abs(exact_summaries[label].mode - v) for label, v in PUBLISHED_EFFICACY.items()}
    worst = max(gaps, key=gaps.get)
    ok = all(g <= 0.004 for g in gaps.values())
    acceptance(2, "exact modes vs published efficacies", ok, f"(largest gap {gaps[worst]:.4f}, {worst})")
    assert ok


def test_criterion_03_engine_cross_validation(acceptance, exact_posteriors, chains):
    ratios = {}
    for label in LABELS:
        x = chains[label].eps_draws.ravel()
        mcse = chains[label].diagnostics["eps"].mcse
        post = exact_posteriors[label]
        ratios[label] = max(abs(x.mean() - post.mean), abs(x.std(ddof=1) - post.sd)) / mcse
    ok = all(r < 3 for r in ratios.values())
    acceptance(3, "gibbs vs exact within 3 MCSE", ok, f"(max {max(ratios.values()):.2f} MCSE)")
    assert ok


def test_criterion_04_assaulted_vaccinees(acceptance, chains):
    failures = []
    for label, (mean, sd) in ASSAULTED.items():
        m, s = count_moments(chains[label])
        if abs(m - mean) > 3 or abs(s - sd) > 3:
            failures.append(f"{label}: {m:.1f}+-{s:.1f}")
    acceptance(4, "assaulted-vaccinee posteriors", not failures, "; ".join(failures))
    assert not failures


def test_criterion_05_beta_fits(acceptance):
    failures = []
    for label, (r, s) in BETA_SHAPES.items():
        mean, sd = PUBLISHED_SUMMARIES[label][:2]
        fit = beta_from_moments(mean, sd)
        if abs(fit.r / r - 1) > 0.02 or abs(fit.s / s - 1) > 0.02:
            failures.append(f"{label}: ({fit.r:.2f}, {fit.s:.2f}) vs ({r}, {s})")
    acceptance(5, "moment-matched Beta shapes within 2%", not failures, "; ".join(failures))
    assert not failures


def test_criterion_06_forecast(acceptance):
    eps_beta = BetaParams(137.3, 8.14)
    scenarios = [
        dict(pA_sd=0.0, eps_dist=0.944),
        dict(pA_sd=0.0, eps_dist=eps_beta),
        dict(pA_sd=0.001, eps_dist=0.944),
        dict(pA_sd=0.001, eps_dist=eps_beta),
    ]
    specs = [ForecastSpec(100_000, 0.01, **kw) for kw in scenarios]
    results = [forecast_mc(s) for s in specs]
    point = results[0]
    ok = (
        abs(point.mean - 56.0) <= 0.5
        and abs(point.sd - 7.5) <= 0.3
        # 0.01 * (1 - 0.944) carries one ulp of rounding
        and math.isclose(point.p_ov, 0.00056, rel_tol=1e-12)
    )
    worst_mean = worst_sd = 0.0
    for spec, mc in zip(specs, results):
        mean, sd = forecast_approx(spec)
        worst_mean = max(worst_mean, abs(mean / mc.mean - 1))
        worst_sd = max(worst_sd, abs(sd / mc.sd - 1))
    ok = ok and worst_mean <= 0.02 and worst_sd <= 0.05
    acceptance(6, "cohort forecast", ok,
               f"(point {point.mean:.2f}+-{point.sd:.2f}, p_ov {point.p_ov:.5f}; "
               f"approx gaps {worst_mean:.2%} mean, {worst_sd:.2%} sd)")
    assert ok


def test_criterion_07_rule_of_succession(acceptance, trials):
    headline = severity_report(trials["Moderna-2"]).severe_free_vaccine
    ok = rule_of_succession(11, 11) == 12 / 13 and round(headline, 3) == 0.923 and headline < 1.0
    acceptance(7, "rule of succession", ok, f"(headline {headline:.4f})")
    assert ok


def test_criterion_08_severity(acceptance, trials):
    checks = []
    for (n, x), beta, (mean, sd) in [
        ((11, 0), (1, 12), (0.0769, 0.0712)),
        ((8, 1), (2, 8), (0.200, 0.121)),
        ((11, 1), (2, 11), (0.1538, 0.0964)),
    ]:
        b = severity_posterior(n, x)
        m, d = beta_moments(b)
        checks.append((b.r, b.s) == beta and abs(m - mean) < 5e-4 and abs(d - sd) < 5e-4)
    d1 = difference_summary((0.170, 0.028), (0.055, 0.018))
    d2 = difference_summary((0.077, 0.071), (0.200, 0.121))
    checks.append(abs(d1[0] - 0.115) <= 0.01 and abs(d1[1] - 0.033) <= 0.01)
    checks.append(abs(d2[0] + 0.12) <= 0.01 and abs(d2[1] - 0.14) <= 0.01)
    moderna = severity_report(trials["Moderna-2"]).placebo_arm.mean
    pfizer = severity_report(trials["Pfizer"]).placebo_arm.mean
    checks.append(abs(moderna - 0.1658) < 5e-5 and abs(pfizer - 0.0610) < 5e-5)
    # published placebo means differ; documented, checked loosely
    checks.append(abs(moderna - 0.170) <= 0.01 and abs(pfizer - 0.055) <= 0.01)
    ok = all(checks)
    acceptance(8, "severity posteriors and differences", ok,
               f"(placebo exact {moderna:.4f}/{pfizer:.4f} vs published 0.170/0.055)")
    assert ok


def test_criterion_09_scale_stability(acceptance, trials, exact_posteriors):
    shifts = {
        label: abs(posterior_density(trials[label].scaled(10)).mean - exact_posteriors[label].mean)
        for label in LABELS
    }
    ok = all(v < 0.005 for v in shifts.values())
    acceptance(9, "x10 enrolment scaling", ok, f"(max shift {max(shifts.values()):.4f})")
    assert ok


def test_criterion_10_design_study(acceptance, trials):
    start = time.perf_counter()
    cmp = placebo_reduction_study(trials["Pfizer"], reduction=2 / 3, true_eps=0.95, n_replications=200, seed=42)
    elapsed = time.perf_counter() - start
    ok = abs(cmp.ratio - 0.80) <= 0.08 and elapsed < 300
    acceptance(10, "smaller placebo arm", ok, f"(ratio {cmp.ratio:.3f}, {elapsed:.0f} s)")
    assert ok


def test_criterion_11_property_suites(acceptance, trials, exact_posteriors, tiny_rejection):
    results = {}

    g = np.random.default_rng(0)
    shapes = np.exp(g.uniform(np.log(0.5), np.log(1e4), size=(500, 2)))
    results["beta round trip"] = all(
        math.isclose(b.r, r, rel_tol=1e-9) and math.isclose(b.s, s, rel_tol=1e-9)
        for r, s in shapes
        for b in [beta_from_moments(*beta_moments(BetaParams(r, s)))]
    )

    for fmt in ("json", "csv"):
        text = dump_dataset(builtin_dataset(), fmt)
        results[f"{fmt} round trip"] = load_dataset(text, fmt) == builtin_dataset()

    config = McmcConfig(n_iter=5_000, burn_in=500, n_chains=2, seed=3)
    a = run_chains(trials["Pfizer"], config)
    b = run_chains(trials["Pfizer"], config)
    c = run_chains(trials["Pfizer"].without_severity(), config)
    results["seeded determinism"] = all(a.draws(v).tobytes() == b.draws(v).tobytes() for v in ("eps", "p_a", "n_va"))
    results["d-separation"] = a.eps_draws.tobytes() == c.eps_draws.tobytes()
    results["exact unchanged by severity"] = np.array_equal(
        posterior_density(trials["Pfizer"]).density, posterior_density(trials["Pfizer"].without_severity()).density
    )

    eps, _, _ = tiny_rejection
    post = posterior_density(TINY)
    edges = np.linspace(0, 1, 11)
    hist, _ = np.histogram(eps, bins=edges, density=True)
    exact_bins = np.diff(np.interp(edges, post.grid, post.cdf())) / np.diff(edges)
    sup = float(np.max(np.abs(hist - exact_bins)))
    results["rejection oracle"] = sup < 0.02

    failed = [k for k, v in results.items() if not v]
    acceptance(11, "property suites", not failed, f"(rejection sup-norm {sup:.4f}) {' '.join(failed)}")
    assert not failed
