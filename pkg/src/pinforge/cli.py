"""Command-line interface.

Subcommands mirror the toolkit stages: layout, fit, dict, attack, strength,
simulate, eval, countermeasure. Every output file starts with a metadata
header; runs with the same arguments produce byte-identical data files.
"""

import argparse
import sys

import numpy as np

from . import __version__
from .attack import (rank_candidates, read_entries, run_attack,
                     success_curve, write_curve, write_entries,
                     write_outcomes)
from .dictionary import (DigitConstraint, build_dictionary, load_dictionary,
                         reduce_dictionary, save_dictionary)
from .geometry import load_layout, save_layout
from .harness import (ExperimentPlan, plan_from_text, resolve_layout,
                      run_countermeasure, run_general, run_known_digits,
                      run_multi_entry, run_targeted)
from .model import (DEFAULT_A, DEFAULT_B, FittsModel, fit_extended, fit_fitts,
                    ingest_keystroke_log)
from .report import plot_frequency_analysis, write_report
from .simulator import (GroundTruth, default_profiles, export_keystroke_log,
                        simulate_cohort)
from .strength import (frequency_analysis, partition_levels, read_profile,
                       read_frequency_records, strength_measure,
                       strength_measure_sampled, write_profile)


def _meta(args, **extra):
    fields = " ".join(f"{k}={v}" for k, v in extra.items())
    return [f"pinforge v{__version__} {args.command}", fields] if fields else [
        f"pinforge v{__version__} {args.command}"]


def _parse_constraints(tokens):
    out = []
    for tok in tokens or []:
        pos, _, digit = tok.partition("=")
        out.append(DigitConstraint(position=int(pos), digit=digit))
    return out


def _plan_from_args(args):
    if getattr(args, "plan", None):
        with open(args.plan, "r", encoding="utf-8") as fh:
            plan = plan_from_text(fh.read())
    else:
        plan = ExperimentPlan()
    overrides = {}
    for key in ("pin_length", "seed", "metric", "pins_per_level",
                "entries_per_pin", "noise_sd", "a", "b", "layout",
                "known_digits", "multi_k", "countermeasure_cases",
                "countermeasure_radius", "quantization"):
        v = getattr(args, key, None)
        if v is not None:
            overrides[key] = v
    if getattr(args, "xs", None):
        overrides["xs"] = tuple(int(x) for x in args.xs.split(","))
    if overrides:
        from dataclasses import replace
        plan = replace(plan, **overrides)
    return plan


def cmd_layout(args):
    if args.action == "export":
        layout = resolve_layout(args.name)
        text = save_layout(layout)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    elif args.action == "validate":
        with open(args.file, "r", encoding="utf-8") as fh:
            layout = load_layout(fh.read())
        print(f"ok: layout {layout.name!r} with {len(layout.keys)} keys")
    return 0


def cmd_fit(args):
    with open(args.log, "r", encoding="utf-8") as fh:
        samples = ingest_keystroke_log(fh.read())
    layout = resolve_layout(args.layout)
    if args.extended:
        model, report = fit_extended(samples, layout, args.pin_length)
    else:
        model, report = fit_fitts(samples, layout)
    lines = _meta(args, layout=args.layout, samples=report.n_samples)
    rows = ["name,coefficient,std_error,t,p_value"]
    for i, name in enumerate(report.names):
        rows.append(f"{name},{report.coefficients[i]:.6f},"
                    f"{report.standard_errors[i]:.6f},"
                    f"{report.t_statistics[i]:.4f},{report.p_values[i]:.6g}")
    rows.append(f"residual_sd,{report.residual_sd:.6f},,,")
    text = "".join(f"# {m}\n" for m in lines) + "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_dict(args):
    if args.action == "build":
        layout = resolve_layout(args.layout)
        model = FittsModel(args.a, args.b)
        d = build_dictionary(model, layout, args.length)
        save_dictionary(d, args.out, format=args.format)
    elif args.action == "reduce":
        d = load_dictionary(args.input_path)
        reduced = reduce_dictionary(d, _parse_constraints(args.constrain))
        save_dictionary(reduced, args.out, format=args.format)
    elif args.action == "convert":
        d = load_dictionary(args.input_path)
        save_dictionary(d, args.out, format=args.format)
    return 0


def cmd_attack(args):
    d = load_dictionary(args.dict)
    entries = read_entries(args.entries, pin_length=None)
    if args.mode == "rank":
        outcomes = run_attack(d, entries, mode="general", metric=args.metric)
        write_outcomes(outcomes, args.out,
                       meta_lines=_meta(args, dict=args.dict, metric=args.metric))
        if args.curve_out:
            xs = [int(x) for x in args.xs.split(",")] if args.xs else \
                [1, 3, 10, 100, 1000]
            xs = [x for x in xs if x <= len(d)]
            write_curve(success_curve(outcomes, xs), args.curve_out,
                        meta_lines=_meta(args, metric=args.metric))
    elif args.mode == "guess":
        with open(args.out, "w", encoding="utf-8") as fh:
            for m in _meta(args, dict=args.dict, metric=args.metric):
                fh.write(f"# {m}\n")
            for e in entries:
                ranked = rank_candidates(d, e.sequence, metric=args.metric)
                for rank, (pin, score) in enumerate(ranked.top(args.top), start=1):
                    fh.write(f"{e.case_id},{rank},{pin},{score:.6f}\n")
    return 0


def cmd_strength(args):
    if args.action == "measure":
        layout = resolve_layout(args.layout)
        model = FittsModel(args.a, args.b)
        d = build_dictionary(model, layout, args.length)
        if args.method == "exact":
            profile = strength_measure(d, allow_large=args.allow_large)
        else:
            profile = strength_measure_sampled(d, sample_size=args.samples,
                                               seed=args.seed or 0)
        partition = partition_levels(profile)
        write_profile(profile, partition, args.out,
                      meta_lines=_meta(args, length=args.length,
                                       method=profile.method))
    elif args.action == "freq":
        profile, partition = read_profile(args.profile)
        records = read_frequency_records(args.records)
        levels = frequency_analysis(partition, records)
        with open(args.out, "w", encoding="utf-8") as fh:
            for m in _meta(args, profile=args.profile):
                fh.write(f"# {m}\n")
            fh.write("level,proportion_of_mass,mean_frequency_per_pin\n")
            for lvl, prop, mean in levels:
                fh.write(f"{lvl},{prop:.6f},{mean:.6f}\n")
        if args.fig:
            plot_frequency_analysis(levels, args.fig)
    return 0


def cmd_simulate(args):
    plan = _plan_from_args(args)
    layout = resolve_layout(plan.layout)
    truth = GroundTruth(FittsModel(plan.a, plan.b), layout)
    if plan.pins:
        pins = list(plan.pins)
    else:
        rng = np.random.default_rng(plan.seed)
        pins = [f"{int(v):0{plan.pin_length}d}"
                for v in rng.integers(0, 10 ** plan.pin_length, args.n_pins)]
    profiles = default_profiles(args.subjects, seed=plan.seed,
                                noise_sd=plan.noise_sd,
                                quantization=plan.quantization,
                                min_interval=plan.min_interval,
                                speed_range=(plan.speed_min, plan.speed_max))
    cohort = simulate_cohort(truth, pins, profiles, plan.entries_per_pin)
    write_entries(cohort, args.out,
                  meta_lines=_meta(args, seed=plan.seed, pins=len(pins),
                                   subjects=args.subjects))
    if args.keylog:
        with open(args.keylog, "w", encoding="utf-8") as fh:
            fh.write(export_keystroke_log(cohort))
    return 0


_EVAL_RUNNERS = {
    "general": lambda plan, args: run_general(plan),
    "targeted": lambda plan, args: run_targeted(plan),
    "multi-entry": lambda plan, args: run_multi_entry(plan),
    "known-digits": lambda plan, args: run_known_digits(plan),
}


def cmd_eval(args):
    plan = _plan_from_args(args)
    report = _EVAL_RUNNERS[args.mode](plan, args)
    paths = write_report(report, args.out_dir, figures=not args.no_figures)
    print(f"wrote {len(paths)} files to {args.out_dir}")
    return 0


def cmd_countermeasure(args):
    plan = _plan_from_args(args)
    report = run_countermeasure(plan)
    paths = write_report(report, args.out_dir, figures=not args.no_figures)
    print(f"wrote {len(paths)} files to {args.out_dir}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="pinforge",
        description="Inter-keystroke timing attack analysis toolkit")
    p.add_argument("--version", action="version", version=f"pinforge {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("layout", help="export or validate keypad layouts")
    sp.add_argument("action", choices=["export", "validate"])
    sp.add_argument("file", nargs="?", help="layout file (validate)")
    sp.add_argument("--name", default="standard",
                    help="standard | circular | circular:<radius> | circular-offset")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_layout)

    sp = sub.add_parser("fit", help="fit a timing model from a keystroke log")
    sp.add_argument("--log", required=True)
    sp.add_argument("--layout", default="standard")
    sp.add_argument("--extended", action="store_true")
    sp.add_argument("--pin-length", dest="pin_length", type=int, default=6)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("dict", help="build, reduce or convert dictionaries")
    sp.add_argument("action", choices=["build", "reduce", "convert"])
    sp.add_argument("--length", type=int, default=6)
    sp.add_argument("--a", type=float, default=DEFAULT_A)
    sp.add_argument("--b", type=float, default=DEFAULT_B)
    sp.add_argument("--layout", default="standard")
    sp.add_argument("--in", dest="input_path")
    sp.add_argument("--out", required=True)
    sp.add_argument("--format", choices=["text", "binary"], default="text")
    sp.add_argument("--constrain", action="append",
                    help="position=digit, repeatable")
    sp.set_defaults(func=cmd_dict)

    sp = sub.add_parser("attack", help="rank observed entries against a dictionary")
    sp.add_argument("mode", choices=["rank", "guess"])
    sp.add_argument("--dict", required=True)
    sp.add_argument("--entries", required=True)
    sp.add_argument("--metric", default="cosine",
                    choices=["cosine", "euclidean", "pearson"])
    sp.add_argument("--out", required=True)
    sp.add_argument("--curve-out", dest="curve_out")
    sp.add_argument("--xs", help="comma-separated attempt counts")
    sp.add_argument("--top", type=int, default=10, help="guesses per case (guess mode)")
    sp.set_defaults(func=cmd_attack)

    sp = sub.add_parser("strength", help="strength profiles and frequency analysis")
    sp.add_argument("action", choices=["measure", "freq"])
    sp.add_argument("--length", type=int, default=3)
    sp.add_argument("--a", type=float, default=DEFAULT_A)
    sp.add_argument("--b", type=float, default=DEFAULT_B)
    sp.add_argument("--layout", default="standard")
    sp.add_argument("--method", choices=["exact", "sampled"], default="exact")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--allow-large", dest="allow_large", action="store_true")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--profile")
    sp.add_argument("--records")
    sp.add_argument("--fig")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_strength)

    sp = sub.add_parser("simulate", help="generate synthetic cohorts")
    sp.add_argument("action", choices=["cohort"])
    sp.add_argument("--plan")
    sp.add_argument("--pin-length", dest="pin_length", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--n-pins", dest="n_pins", type=int, default=20)
    sp.add_argument("--subjects", type=int, default=5)
    sp.add_argument("--noise-sd", dest="noise_sd", type=float)
    sp.add_argument("--out", required=True)
    sp.add_argument("--keylog")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("eval", help="run an end-to-end attack evaluation")
    sp.add_argument("mode", choices=list(_EVAL_RUNNERS))
    _add_plan_args(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("countermeasure",
                        help="evaluate the circular-keypad countermeasure")
    _add_plan_args(sp)
    sp.add_argument("--radius", dest="countermeasure_radius", type=float)
    sp.add_argument("--cases", dest="countermeasure_cases", type=int)
    sp.set_defaults(func=cmd_countermeasure)

    return p


def _add_plan_args(sp):
    sp.add_argument("--plan", help="plan file (key = value lines)")
    sp.add_argument("--length", dest="pin_length", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--metric", choices=["cosine", "euclidean", "pearson"])
    sp.add_argument("--a", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--layout")
    sp.add_argument("--pins-per-level", dest="pins_per_level", type=int)
    sp.add_argument("--entries-per-pin", dest="entries_per_pin", type=int)
    sp.add_argument("--noise-sd", dest="noise_sd", type=float)
    sp.add_argument("--quantization", type=float)
    sp.add_argument("--known-digits", dest="known_digits", type=int)
    sp.add_argument("--multi-k", dest="multi_k", type=int)
    sp.add_argument("--xs")
    sp.add_argument("--out-dir", dest="out_dir", required=True)
    sp.add_argument("--no-figures", dest="no_figures", action="store_true")


def cli_dispatch(argv):
    """Parse argv and run the selected subcommand; returns the exit status
    (0 on success, 1 on runtime failure, 2 on usage errors)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"pinforge: error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
