"""Command-line interface.

Every subcommand prints one JSON document to stdout. The experiment
subcommands (verify-main, verify-convergence, counterexample,
thinnability) exit 0 on pass, 2 on fail, and 3 when every trial came back
undecided; the inspection subcommands exit 0 unless the input is invalid.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import __version__
from .densities import (alpha_density_upper, asymptotic_density,
                        default_schedule, erdos_ulam_ratio, parse_weight,
                        polya_upper, weight_sum)
from .errors import AllUndecided, IdealconvError
from .experiments import (PROPERTY_TESTERS, ExperimentConfig,
                          config_from_mapping, parse_config_file,
                          run_convergence_theorem, run_counterexample,
                          run_main_theorem, run_thinnability_suite,
                          write_report)
from .ideals import member, parse_ideal_spec
from .sampler import index_trace, sample_selector, selector_frequency
from .sequences import cluster_points, parse_sequence_spec
from .subsets import parse_set_spec


def _emit(payload: dict, out: Optional[str] = None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2)
    print(text)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")


def _cmd_density(args) -> int:
    window = parse_set_spec(args.set, args.horizon)
    sched = default_schedule(args.horizon)
    kind = args.kind
    if kind == "asymptotic":
        est = asymptotic_density(window, sched)
    elif kind.startswith("alpha:"):
        est = alpha_density_upper(window, float(kind.partition(":")[2]), sched)
    elif kind == "polya":
        est = polya_upper(window, None, sched)
    elif kind.startswith("weight:"):
        est = weight_sum(parse_weight(kind.partition(":")[2]), window,
                         sched=sched)
    elif kind.startswith("eu:"):
        est = erdos_ulam_ratio(parse_weight(kind.partition(":")[2]), window,
                               sched)
    else:
        raise ValueError(f"unknown density kind {kind!r}")
    _emit(est.to_json_dict(), args.out)
    return 0


def _cmd_membership(args) -> int:
    ideal = parse_ideal_spec(args.ideal)
    window = parse_set_spec(args.set, args.horizon)
    decision = member(ideal, window, default_schedule(args.horizon))
    _emit({"ideal": ideal.label, "set": window.description,
           **decision.to_json_dict()}, args.out)
    return 0


def _cmd_thinnability(args) -> int:
    trials, seed, horizon = args.trials, args.seed, args.horizon
    if args.config:
        raw = parse_config_file(args.config)
        trials = trials if args.trials_given else raw.trials
        seed = seed if args.seed_given else raw.master_seed
        horizon = horizon if args.horizon_given else raw.horizon
    if args.ideal:
        ideal = parse_ideal_spec(args.ideal)
        props = ([args.property] if args.property
                 else list(PROPERTY_TESTERS.keys()))
        reports = run_thinnability_suite(trials, seed, horizon,
                                         roster=[ideal], properties=props)
    else:
        props = ([args.property] if args.property
                 else ("stretchable", "weak", "full", "invariant"))
        reports = run_thinnability_suite(trials, seed, horizon,
                                         properties=props)
    payload = {"reports": [r.to_json_dict() for r in reports]}
    _emit(payload, args.out)
    return 0 if all(r.passed for r in reports) else 2


def _cmd_gamma(args) -> int:
    x = parse_sequence_spec(args.seq)
    ideal = parse_ideal_spec(args.ideal)
    if args.grid and args.grid != "auto":
        grid = tuple(float(v) for v in args.grid.split(",") if v)
    else:
        from .sequences import auto_grid
        grid = auto_grid(x, args.horizon)
    from .sequences import default_epsilon
    epsilon = args.epsilon if args.epsilon is not None else \
        default_epsilon(grid)
    report = cluster_points(x, ideal, grid, epsilon, args.horizon)
    _emit(report.to_json_dict(), args.out)
    return 0


def _cmd_sample(args) -> int:
    selector = sample_selector(args.seed)
    first = "".join(str(b) for b in selector.bits(1, 65))
    if args.indices:
        window = parse_set_spec(args.indices, args.horizon)
        est = index_trace(selector, window)
    else:
        est = selector_frequency(selector, args.horizon)
    _emit({"seed": args.seed, "first_bits": first,
           "frequency": est.to_json_dict()}, args.out)
    return 0


def _experiment_config(args) -> ExperimentConfig:
    overrides = {
        "sequence": args.sequence, "ideal": args.ideal,
        "horizon": args.horizon, "trials": args.trials, "seed": args.seed,
        "epsilon": args.epsilon, "epsilon_sweep": args.epsilon_sweep,
        "pass_fraction": args.pass_fraction, "grid": args.grid,
        "limit": args.limit, "workers": args.workers,
        "out_json": args.out_json, "out_csv": args.out_csv,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.config:
        return parse_config_file(args.config, overrides)
    return config_from_mapping(overrides)


def _cmd_verify_main(args) -> int:
    config = _experiment_config(args)
    report = run_main_theorem(config)
    write_report(report, config.out_json, config.out_csv)
    _emit(report.to_json_dict())
    return 0 if report.passed else 2


def _cmd_verify_convergence(args) -> int:
    config = _experiment_config(args)
    report = run_convergence_theorem(config)
    write_report(report, config.out_json, config.out_csv)
    _emit(report.to_json_dict())
    return 0 if report.passed else 2


def _cmd_counterexample(args) -> int:
    report = run_counterexample(args.horizon, b_spec=args.b)
    write_report(report, args.out_json, args.out_csv)
    _emit(report.to_json_dict())
    return 0 if report.passed else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idealconv",
        description="Densities, ideals on N, and cluster points of random "
                    "subsequences, at desk scale.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="density/weight statistic of a set")
    p.add_argument("--set", required=True)
    p.add_argument("--kind", default="asymptotic",
                   help="asymptotic | alpha:A | polya | weight:F | eu:F")
    p.add_argument("--horizon", type=int, default=10 ** 6)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_density)

    p = sub.add_parser("membership", help="ideal membership decision")
    p.add_argument("--ideal", required=True)
    p.add_argument("--set", required=True)
    p.add_argument("--horizon", type=int, default=10 ** 6)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_membership)

    p = sub.add_parser("thinnability", help="randomized property testers")
    p.add_argument("--ideal", help="restrict to one ideal spec")
    p.add_argument("--property",
                   choices=["stretchable", "weak", "full", "invariant"])
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=20260808)
    p.add_argument("--horizon", type=int, default=10 ** 6)
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_thinnability)

    p = sub.add_parser("gamma", help="cluster-point set on a grid")
    p.add_argument("--seq", required=True)
    p.add_argument("--ideal", required=True)
    p.add_argument("--horizon", type=int, default=10 ** 6)
    p.add_argument("--grid", default="auto",
                   help="'auto' or comma-separated points")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_gamma)

    p = sub.add_parser("sample", help="selector bitstream statistics")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--horizon", type=int, default=10 ** 6)
    p.add_argument("--indices", help="trace the bits along this set")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_sample)

    for name, fn in (("verify-main", _cmd_verify_main),
                     ("verify-convergence", _cmd_verify_convergence)):
        p = sub.add_parser(name, help=f"{name} Monte Carlo experiment")
        p.add_argument("--config")
        p.add_argument("--sequence")
        p.add_argument("--ideal")
        p.add_argument("--horizon", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--epsilon-sweep", dest="epsilon_sweep")
        p.add_argument("--pass-fraction", dest="pass_fraction", type=float)
        p.add_argument("--grid")
        p.add_argument("--limit", type=float)
        p.add_argument("--workers", type=int)
        p.add_argument("--out-json", dest="out_json")
        p.add_argument("--out-csv", dest="out_csv")
        p.set_defaults(fn=fn)

    p = sub.add_parser("counterexample",
                       help="reproduce the even-counterexample facts")
    p.add_argument("--horizon", type=int, default=10 ** 6)
    p.add_argument("--b", help="override the thinning index set")
    p.add_argument("--out-json", dest="out_json")
    p.add_argument("--out-csv", dest="out_csv")
    p.set_defaults(fn=_cmd_counterexample)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "thinnability":
        argv_list = argv if argv is not None else sys.argv[1:]

        def given(flag: str) -> bool:
            return any(a == flag or a.startswith(flag + "=")
                       for a in argv_list)

        args.trials_given = given("--trials")
        args.seed_given = given("--seed")
        args.horizon_given = given("--horizon")
    try:
        return args.fn(args)
    except AllUndecided as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 3
    except (IdealconvError, ValueError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
