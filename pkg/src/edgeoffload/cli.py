"""Command-line entry point: ``edgeoffload {simulate,converge,verify}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import kernels
from .config import ConfigError, load_config
from .csvio import fmt
from .errors import EdgeOffloadError, InvalidInput
from .experiments import (
    METHODS, build_paper_scenario, convergence_study, run_experiment, write_summary_csv,
)
from .game import run_ditoa

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NONCONVERGED = 0, 1, 2, 3, 4


def _float_list(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common(p):
    p.add_argument("--config", help="config file (default: $EDGEOFFLOAD_CONFIG)")
    p.add_argument("--seed", type=int)
    p.add_argument("--xi", type=float, help="acceptable deviation in seconds")
    p.add_argument("--reps", type=int, dest="repetitions")
    p.add_argument("--max-rounds", type=int)
    p.add_argument("--on-infeasible", choices=("raise", "relax"))
    p.add_argument("--jobs", type=int)
    p.add_argument("--output", "-o", help="summary CSV path, '-' for stdout")
    p.add_argument("--strict", action="store_true", default=None,
                   help="exit 4 if any DITOA run fails to converge")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="edgeoffload", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run DITOA / PS / GOS and write a summary CSV")
    _common(sim)
    sim.add_argument("--method", choices=("ditoa", "ps", "gos", "all"))
    sim.add_argument("--util", type=_float_list, dest="utilizations")
    sim.add_argument("--init-mode", choices=("initial_0", "initial_P"))
    sim.add_argument("--trace", dest="trace_output", help="per-round trace CSV of repetition 0")

    conv = sub.add_parser("converge", help="DITOA iteration counts along a sweep")
    _common(conv)
    conv.add_argument("--axis", choices=("utilization", "xi"), required=True)
    conv.add_argument("--util", type=float, help="fixed utilization for the xi sweep")
    conv.add_argument("--utils", type=_float_list, dest="sweep_utilizations")
    conv.add_argument("--xis", type=_float_list, dest="sweep_xis", help="seconds")
    conv.add_argument("--init-mode", choices=("initial_0", "initial_P", "both"), default="both")

    ver = sub.add_parser("verify", help="run invariant and oracle checks")
    ver.add_argument("--config")
    ver.add_argument("--seed", type=int)
    ver.add_argument("--util", type=float)
    ver.add_argument("--xi", type=float)
    ver.add_argument("--otom-oracle", action="store_true",
                     help="only run the closed-form vs bisection agreement sweep")
    ver.add_argument("--instances", type=int, default=200)
    ver.add_argument("--inject-corrupt-strategy", action="store_true", help=argparse.SUPPRESS)
    ver.add_argument("-v", "--verbose", action="store_true")
    return parser


_OVERRIDES = ("seed", "xi", "repetitions", "max_rounds", "on_infeasible", "jobs", "output",
              "strict", "method", "utilizations", "init_mode", "trace_output",
              "sweep_utilizations", "sweep_xis")


def _resolve(args):
    cfg = load_config(args.config)
    for name in _OVERRIDES:
        value = getattr(args, name, None)
        if value is not None and not (name == "init_mode" and value == "both"):
            setattr(cfg, name, value)
    for path in (cfg.output, cfg.trace_output):
        if path and path != "-":
            parent = os.path.dirname(os.path.abspath(path))
            if not os.path.isdir(parent):
                raise ConfigError(f"{path}: directory {parent} does not exist")
    if getattr(args, "command", None) == "converge" and args.util is not None:
        cfg.utilizations = (args.util,)
    return cfg.validate()


def _template(cfg, utilization, xi=None, init_mode=None):
    return build_paper_scenario(
        utilization, cfg.seed, cfg.xi if xi is None else xi, init_mode or cfg.init_mode,
        delay_bounds=(cfg.delay_min, cfg.delay_max),
        deadline_bounds=(cfg.deadline_min, cfg.deadline_max),
    )


def _emit(reports, cfg, per_user):
    if cfg.output in ("-", None):
        write_summary_csv(reports, sys.stdout, per_user=per_user)
    else:
        write_summary_csv(reports, cfg.output, per_user=per_user)


def _digest(rep):
    iters = "" if rep.mean_iterations is None else f" iterations={fmt(rep.mean_iterations)}"
    mode = f" {rep.init_mode}" if rep.method == "DITOA" else ""
    print(f"{rep.method}{mode} u={fmt(rep.utilization)}: normalized_T={fmt(rep.normalized_overall_time)}s"
          f"{iters} ok={rep.successful}/{rep.repetitions} failed={rep.failed_count}"
          f" nonconverged={rep.nonconverged_count}", file=sys.stderr)


def _exit_code(reports, cfg):
    if any(r.failed_count == r.repetitions for r in reports):
        return EXIT_INFEASIBLE
    if cfg.strict and any(r.nonconverged_count for r in reports):
        return EXIT_NONCONVERGED
    return EXIT_OK


def _trace_path(path, utilization, many):
    if not many:
        return path
    stem, ext = os.path.splitext(path)
    return f"{stem}_u{fmt(utilization)}{ext or '.csv'}"


def cmd_simulate(args):
    cfg = _resolve(args)
    methods = METHODS if cfg.method.lower() == "all" else (cfg.method.upper(),)
    kw = dict(jobs=cfg.jobs, max_rounds=cfg.max_rounds, relax=cfg.relax)
    reports = []
    for u in cfg.utilizations:
        template = _template(cfg, u)
        for method in methods:
            rep = run_experiment(template, method, cfg.repetitions, **kw)
            reports.append(rep)
            _digest(rep)
        if cfg.trace_output and "DITOA" in methods:
            try:
                _, trace = run_ditoa(template.game(), template.xi, template.init_mode,
                                     cfg.max_rounds, cfg.relax)
            except EdgeOffloadError as exc:
                print(f"trace u={fmt(u)}: {exc}", file=sys.stderr)
            else:
                trace.to_csv(_trace_path(cfg.trace_output, u, len(cfg.utilizations) > 1))
    _emit(reports, cfg, per_user=True)
    return _exit_code(reports, cfg)


def cmd_converge(args):
    cfg = _resolve(args)
    points = cfg.sweep_utilizations if args.axis == "utilization" else cfg.sweep_xis
    if not points:
        raise ConfigError(f"empty {args.axis} sweep")
    modes = ("initial_0", "initial_P") if args.init_mode == "both" else (args.init_mode,)
    reports = convergence_study(
        args.axis, xi=cfg.xi, utilization=cfg.utilizations[0],
        utilizations=cfg.sweep_utilizations, xis=cfg.sweep_xis,
        repetitions=cfg.repetitions, seed=cfg.seed, init_modes=modes,
        jobs=cfg.jobs, max_rounds=cfg.max_rounds, relax=cfg.relax,
    )
    for rep in reports:
        _digest(rep)
    _emit(reports, cfg, per_user=False)
    return _exit_code(reports, cfg)


def cmd_verify(args):
    from . import checks

    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.xi is not None:
        cfg.xi = args.xi
    util = args.util if args.util is not None else cfg.utilizations[0]
    if args.otom_oracle:
        results = [checks.otom_oracle_sweep(args.instances, cfg.seed)]
    else:
        template = _template(cfg, util)
        results = checks.run_all(template, args.instances, cfg.seed,
                                 corrupt=args.inject_corrupt_strategy, relax=cfg.relax)
    failed = 0
    for res in results:
        status = "PASS" if res.ok else "FAIL"
        print(f"{status} {res.name}: {res.detail}")
        failed += not res.ok
    print(f"backend={kernels.BACKEND} checks={len(results)} failed={failed}")
    return EXIT_FAIL if failed else EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.seterr(all="ignore")
    handler = {"simulate": cmd_simulate, "converge": cmd_converge, "verify": cmd_verify}
    try:
        return handler[args.command](args)
    except (ConfigError, InvalidInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
