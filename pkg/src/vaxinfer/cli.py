"""Command-line interface.

Exit codes: 0 success, 2 usage or validation error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import report
from .beta import BetaParams, beta_from_moments, beta_moments, fit_posterior, reshape_with_prior, rule_of_succession
from .errors import DiagnosticsError, VaxinferError
from .exact import DEFAULT_GRID, posterior_density, posterior_summary
from .forecast import ForecastSpec, forecast_approx, forecast_mc, placebo_reduction_study
from .gibbs import McmcConfig, count_moments, run_chains, summarize
from .model import TrialCounts, builtin_dataset, dump_dataset, find_builtin, load_dataset
from .severity import severity_report

DEFAULT_SEED = 42
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


def _resolve_seed(arg: Optional[int]) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("VAXINFER_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"VAXINFER_SEED is not an integer: {env!r}") from None
    return DEFAULT_SEED


def _resolve_data(name: str, trial: Optional[str] = None) -> TrialCounts:
    path = Path(name)
    if path.is_file():
        fmt = "csv" if path.suffix.lower() == ".csv" else "json"
        trials = load_dataset(path.read_text(), fmt)
        if trial is not None:
            matches = [t for t in trials if t.label == trial]
            if not matches:
                raise UsageError(f"no trial labelled {trial!r} in {name}")
            return matches[0]
        if len(trials) != 1:
            raise UsageError(f"{name} holds {len(trials)} trials; choose one with --trial")
        return trials[0]
    try:
        return find_builtin(name)
    except KeyError:
        labels = ", ".join(t.label for t in builtin_dataset())
        raise UsageError(f"unknown dataset {name!r} (built-in: {labels})") from None


def _add_output(p: argparse.ArgumentParser, out_default: Optional[str] = ".") -> None:
    p.add_argument("--format", choices=("json", "csv"), default="json", help="report format")
    p.add_argument("--out-dir", default=out_default, help="directory for output files")


def _emit(doc: dict, args) -> None:
    if args.out_dir is not None:
        report.write_report(doc, Path(args.out_dir), args.format)
    else:
        report.validate(report.to_plain(doc))


def cmd_infer(args) -> int:
    counts = _resolve_data(args.data, args.trial)
    seed = _resolve_seed(args.seed)
    summaries = {}
    config = {"engine": args.engine, "tail_threshold": args.tail}
    doc_extra = {"diagnostics": None, "n_va": None}
    warnings = []
    post = None
    if args.engine in ("exact", "both"):
        post = posterior_density(counts, args.grid)
        summaries["exact"] = posterior_summary(post, args.tail)
        config["grid"] = args.grid
    if args.engine in ("gibbs", "both"):
        mcmc = McmcConfig(args.iter, args.burn_in, args.thin, args.chains, seed, args.tail)
        samples = run_chains(counts, mcmc)
        summaries["gibbs"] = summarize(samples, args.tail)
        doc_extra["diagnostics"] = {k: v.to_dict() for k, v in samples.diagnostics.items()}
        mean, sd = count_moments(samples)
        doc_extra["n_va"] = {"mean": mean, "sd": sd}
        warnings.extend(samples.warnings())
        config["mcmc"] = mcmc.to_dict()
    primary = summaries["exact"] if "exact" in summaries else summaries["gibbs"]
    headline = f"efficacy (posterior mean) = {primary.mean:.4f} +- {primary.sd:.4f}"
    doc = report.envelope(
        "infer", seed if "gibbs" in summaries else None, config,
        dataset_label=counts.label,
        counts=counts.to_record(),
        engine=args.engine,
        headline=headline,
        summary=primary.to_dict(),
        summaries={k: v.to_dict() for k, v in summaries.items()},
        beta_fit=fit_posterior(primary).to_dict(),
        **doc_extra,
    )
    if len(summaries) == 2:
        a, b = summaries["exact"].to_dict(), summaries["gibbs"].to_dict()
        doc["differences"] = {k: abs(a[k] - b[k]) for k in a if k != "tail_threshold"}
    doc["warnings"] = warnings
    _emit(doc, args)
    out = Path(args.out_dir)
    if post is not None and args.density_csv:
        report.write_columns(out / "density.csv", ("eps", "density"), zip(post.grid.tolist(), post.density.tolist()))
    if post is not None and args.svg:
        (out / "density.svg").write_text(
            report.density_svg(post.grid, post.density, primary.mean, primary.mode, counts.label)
        )
    print(headline)
    print(f"mode = {primary.mode:.4f}   95% interval = [{primary.ci_low:.4f}, {primary.ci_high:.4f}]   "
          f"P(eps >= {args.tail}) = {primary.tail_prob:.4f}")
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def _eps_from_report(path: str) -> tuple[float, float]:
    try:
        doc = json.loads(Path(path).read_text())
        return float(doc["summary"]["mean"]), float(doc["summary"]["sd"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read efficacy summary from {path}: {exc}") from None


def cmd_predict(args) -> int:
    seed = _resolve_seed(args.seed)
    if args.from_report:
        eps_mean, eps_sd = _eps_from_report(args.from_report)
    else:
        if args.eps_mean is None:
            raise UsageError("give --eps/--eps-mean (with --eps-sd or --exact-eps) or --from-report")
        eps_mean, eps_sd = args.eps_mean, args.eps_sd or 0.0
    if args.exact_eps:
        eps_sd = 0.0
    eps_dist = beta_from_moments(eps_mean, eps_sd) if eps_sd > 0 else eps_mean
    spec = ForecastSpec(args.n, args.pa, args.pa_sd, eps_dist, args.samples, seed)
    mc = forecast_mc(spec)
    approx_mean, approx_sd = forecast_approx(spec)
    config = {
        "n_V_new": args.n, "pA_mean": args.pa, "pA_sd": args.pa_sd,
        "eps_mean": eps_mean, "eps_sd": eps_sd, "n_samples": args.samples,
    }
    headline = f"predicted infected vaccinees = {mc.mean:.1f} +- {mc.sd:.1f}"
    doc = report.envelope(
        "predict", seed, config,
        headline=headline,
        cohort={"n_V_new": args.n, "pA_mean": args.pa, "pA_sd": args.pa_sd},
        efficacy={"mean": eps_mean, "sd": eps_sd,
                  "beta": eps_dist.to_dict() if isinstance(eps_dist, BetaParams) else None},
        monte_carlo={"mean": mc.mean, "sd": mc.sd, "p_ov": mc.p_ov, "n_samples": mc.n_samples},
        approximation={"mean": approx_mean, "sd": approx_sd},
    )
    _emit(doc, args)
    report.write_columns(Path(args.out_dir) / "forecast.csv", ("n_vi", "count"), mc.histogram)
    print(headline)
    print(f"approximation: {approx_mean:.1f} +- {approx_sd:.1f}")
    if mc.p_ov is not None:
        print(f"p_ov = {mc.p_ov:.6g}")
    return 0


def cmd_severity(args) -> int:
    counts = _resolve_data(args.data, args.trial)
    sev = severity_report(counts, args.vaccine_severe)
    body = sev.to_dict()
    headline = (f"P(next infected vaccinee avoids severe disease) = {sev.severe_free_vaccine:.4f}")
    doc = report.envelope(
        "severity", None, {"vaccine_severe_override": args.vaccine_severe},
        dataset_label=counts.label, headline=headline, **body,
    )
    _emit(doc, args)
    for arm in ("vaccine_arm", "placebo_arm"):
        a = body[arm]
        print(f"{arm}: Beta({a['r']:g}, {a['s']:g})  mean {a['mean']:.4f}  sd {a['sd']:.4f}")
    print(headline)
    return 0


def cmd_reshape(args) -> int:
    if args.from_report:
        mean, sd = _eps_from_report(args.from_report)
        flat = beta_from_moments(mean, sd)
    else:
        if args.flat_r is None or args.flat_s is None:
            raise UsageError("give --flat-r and --flat-s, or --from-report")
        flat = BetaParams(args.flat_r, args.flat_s)
    prior = BetaParams(args.prior_r, args.prior_s)
    post = reshape_with_prior(flat, prior)
    mean, sd = beta_moments(post)
    headline = f"reshaped posterior Beta({post.r:g}, {post.s:g}): mean {mean:.4f} sd {sd:.4f}"
    doc = report.envelope(
        "reshape", None, {},
        headline=headline, flat_fit=flat.to_dict(), prior=prior.to_dict(),
        posterior={**post.to_dict(), "mean": mean, "sd": sd},
    )
    _emit(doc, args)
    print(headline)
    return 0


def cmd_succession(args) -> int:
    p = rule_of_succession(args.successes, args.trials)
    doc = report.envelope(
        "succession", None, {}, headline=f"{p:.4f}",
        successes=args.successes, trials=args.trials, probability=p,
    )
    _emit(doc, args)
    print(f"{p:.4f}")
    return 0


def cmd_design_study(args) -> int:
    counts = _resolve_data(args.data, args.trial)
    seed = _resolve_seed(args.seed)
    cmp = placebo_reduction_study(
        counts, args.reduction, args.eps, args.pa, args.replications, seed, args.grid,
    )
    headline = f"sd(eps) ratio reduced/baseline = {cmp.ratio:.3f}"
    doc = report.envelope(
        "design-study", seed,
        {"reduction": args.reduction, "true_eps": args.eps,
         "true_pA": args.pa if args.pa is not None else counts.n_pi / counts.n_p,
         "replications": args.replications, "grid": args.grid},
        dataset_label=counts.label, headline=headline,
        baseline={"n_V": cmp.baseline[0], "n_P": cmp.baseline[1], "mean_sd_eps": cmp.baseline_sd},
        reduced={"n_V": cmp.reduced[0], "n_P": cmp.reduced[1], "mean_sd_eps": cmp.reduced_sd},
        sd_ratio=cmp.ratio,
    )
    _emit(doc, args)
    print(f"baseline {cmp.baseline}: mean sd(eps) {cmp.baseline_sd:.4f}")
    print(f"reduced  {cmp.reduced}: mean sd(eps) {cmp.reduced_sd:.4f}")
    print(headline)
    return 0


def cmd_list_data(args) -> int:
    trials = builtin_dataset()
    text = dump_dataset(trials, args.format)
    if args.out_dir is not None:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"dataset.{args.format}").write_text(text)
    sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vaxinfer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="posterior of the efficacy for one trial")
    p.add_argument("--data", required=True, help="built-in label or dataset file")
    p.add_argument("--trial", help="label inside a multi-trial file")
    p.add_argument("--engine", choices=("exact", "gibbs", "both"), default="exact")
    p.add_argument("--grid", type=int, default=DEFAULT_GRID)
    p.add_argument("--iter", type=int, default=50_000)
    p.add_argument("--burn-in", type=int, default=5_000)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--seed", type=int)
    p.add_argument("--tail", type=float, default=0.9, help="threshold for P(eps >= threshold)")
    p.add_argument("--density-csv", action="store_true", help="write density.csv (exact engine)")
    p.add_argument("--svg", action="store_true", help="write density.svg (exact engine)")
    _add_output(p)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("predict", help="forecast infections among newly vaccinated people")
    p.add_argument("--n", type=int, required=True, help="cohort size")
    p.add_argument("--pa", type=float, required=True, help="expected assault probability")
    p.add_argument("--pa-sd", type=float, default=0.0)
    p.add_argument("--eps", "--eps-mean", dest="eps_mean", type=float)
    p.add_argument("--eps-sd", type=float)
    p.add_argument("--exact-eps", action="store_true", help="treat the efficacy as exactly known")
    p.add_argument("--from-report", help="take efficacy mean/sd from an infer report.json")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int)
    _add_output(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("severity", help="severe-disease posteriors per arm")
    p.add_argument("--data", required=True)
    p.add_argument("--trial")
    p.add_argument("--vaccine-severe", type=int, help="counterfactual severe count in the vaccine arm")
    _add_output(p, None)
    p.set_defaults(func=cmd_severity)

    p = sub.add_parser("reshape", help="apply a Beta prior to a flat-prior Beta posterior")
    p.add_argument("--flat-r", type=float)
    p.add_argument("--flat-s", type=float)
    p.add_argument("--from-report")
    p.add_argument("--prior-r", type=float, required=True)
    p.add_argument("--prior-s", type=float, required=True)
    _add_output(p, None)
    p.set_defaults(func=cmd_reshape)

    p = sub.add_parser("succession", help="Laplace's rule of succession")
    p.add_argument("successes", type=int)
    p.add_argument("trials", type=int)
    _add_output(p, None)
    p.set_defaults(func=cmd_succession)

    p = sub.add_parser("design-study", help="effect of a smaller placebo arm on sd(eps)")
    p.add_argument("--data", default="pfizer")
    p.add_argument("--trial")
    p.add_argument("--reduction", type=float, default=2.0 / 3.0)
    p.add_argument("--eps", type=float, default=0.95)
    p.add_argument("--pa", type=float, help="true assault probability (default n_PI/n_P)")
    p.add_argument("--replications", type=int, default=200)
    p.add_argument("--grid", type=int, default=DEFAULT_GRID)
    p.add_argument("--seed", type=int)
    _add_output(p, None)
    p.set_defaults(func=cmd_design_study)

    p = sub.add_parser("list-data", help="print the built-in dataset")
    _add_output(p, None)
    p.set_defaults(func=cmd_list_data)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VaxinferError as exc:
        if isinstance(exc, DiagnosticsError):
            print(f"numeric failure: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
