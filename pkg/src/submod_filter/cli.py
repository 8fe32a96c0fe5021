"""Command line entry point: solve, bench, validate, synth, accept.

Exit codes: 0 ok, 1 operational or usage error, 2 acceptance failure,
3 invariant violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from . import acceptance
from .bench import (SOLVERS, ConfigError, ExperimentConfig, InvariantViolation, SolverSpec,
                    emit_report, format_report, load_config, run_experiment, run_solver)
from .algorithms import BRUTE_FORCE_CAP, SolverConfig, brute_force_opt
from .functions import (EXHAUSTIVE_MAX_N, KINDS, InstanceFormatError, canonical_coverage,
                        dumps_instance, load_instance, save_instance, synthesize_instance,
                        validate_submodular)

EXIT_OK, EXIT_ERROR, EXIT_ACCEPT, EXIT_INVARIANT = 0, 1, 2, 3

log = logging.getLogger("submod_filter")


class _Parser(argparse.ArgumentParser):
    # usage errors share the operational exit code; 2 is reserved for acceptance
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _param(text: str):
    key, sep, val = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(val)
    except json.JSONDecodeError:
        return key, val


def _v_star(text: str):
    if text in ("opt", "greedy"):
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected opt, greedy or a number, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="submod-filter", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="run one solver on one instance")
    s.add_argument("instance", nargs="?", help="instance JSON (default: canonical coverage)")
    s.add_argument("--solver", choices=SOLVERS, default="amortized_filtering")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--eps", type=float, default=0.2)
    s.add_argument("--m", type=int)
    s.add_argument("--r", type=int)
    s.add_argument("--delta", type=float, default=0.05)
    s.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    s.add_argument("--round-cap", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--v-star", type=_v_star, help="opt, greedy or a number")
    s.add_argument("--format", choices=("text", "json"), default="text")

    b = sub.add_parser("bench", help="run an experiment config")
    b.add_argument("config")
    b.add_argument("--out", help="report path (default: the config's output, else stdout)")
    b.add_argument("--format", choices=("csv", "json"))
    b.add_argument("--seed", type=int, action="append", help="override the seed list")
    b.add_argument("--timing", action="store_true", help="add wall time to the report")
    b.add_argument("--keep-going", action="store_true")

    v = sub.add_parser("validate", help="check monotonicity and submodularity")
    v.add_argument("instance", nargs="?")
    v.add_argument("--check", choices=("exhaustive", "sampled"))
    v.add_argument("--trials", type=int, default=10_000)
    v.add_argument("--seed", type=int, default=0)

    y = sub.add_parser("synth", help="write a synthetic instance")
    y.add_argument("kind", choices=KINDS)
    y.add_argument("--n", type=int, required=True)
    y.add_argument("--seed", type=int, default=0)
    y.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE")
    y.add_argument("--out", help="output path (default: stdout)")

    a = sub.add_parser("accept", help="run the acceptance suite")
    a.add_argument("--only", type=int, action="append", metavar="N")
    return p


def _load(path):
    return canonical_coverage() if path is None else load_instance(path)


def cmd_solve(args) -> int:
    oracle = _load(args.instance)
    cfg = SolverConfig(k=args.k, eps=args.eps, mode=args.mode, r=args.r, m=args.m,
                       delta=args.delta, round_cap=args.round_cap, seed=args.seed)
    opt = None
    v_star = args.v_star
    if v_star in (None, "opt") and args.solver not in ("greedy", "lazy_greedy", "random"):
        if math.comb(oracle.n, args.k) <= BRUTE_FORCE_CAP:
            opt = brute_force_opt(oracle, args.k)[1]
    res = run_solver(oracle, SolverSpec(args.solver, args.solver, cfg, v_star), args.seed, opt)
    out = {"solver": args.solver, "solution": sorted(res.solution), "value": res.value,
           "rounds": res.rounds, "queries": res.queries, "truncated": res.truncated,
           "stop_reason": res.stop_reason}
    if res.v_star is not None:
        out["v_star"] = res.v_star
    for w in res.warnings:
        log.warning(w)
    if args.format == "json":
        print(json.dumps(out, sort_keys=True))
    else:
        for key, val in out.items():
            print(f"{key}: {val}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg: ExperimentConfig = load_config(args.config)
    if args.seed:
        cfg.seeds = args.seed
    if args.keep_going:
        cfg.keep_going = True
    fmt = args.format or cfg.format
    rows = run_experiment(cfg)
    out = args.out or (cfg.output and str(cfg.base_dir / cfg.output))
    if out:
        emit_report(rows, fmt, out, timing=args.timing)
        log.info("wrote %d rows to %s", len(rows), out)
    else:
        sys.stdout.write(format_report(rows, fmt, timing=args.timing))
    return EXIT_OK


def cmd_validate(args) -> int:
    oracle = _load(args.instance)
    mode = args.check or ("exhaustive" if oracle.n <= EXHAUSTIVE_MAX_N else "sampled")
    report = validate_submodular(oracle, mode, trials=args.trials, seed=args.seed)
    print(f"{mode} check over {report.checked} triples: "
          f"{len(report.violations)} violation(s)")
    for viol in report.violations[:10]:
        print(f"  {viol}")
    return EXIT_OK if report.ok else EXIT_INVARIANT


def cmd_synth(args) -> int:
    inst = synthesize_instance(args.kind, args.n, dict(args.param), args.seed)
    if args.out:
        save_instance(inst, args.out)
    else:
        print(dumps_instance(inst))
    return EXIT_OK


def cmd_accept(args) -> int:
    results = acceptance.run_all(only=args.only)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_ACCEPT if failed else EXIT_OK


COMMANDS = {"solve": cmd_solve, "bench": cmd_bench, "validate": cmd_validate,
            "synth": cmd_synth, "accept": cmd_accept}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigError, InstanceFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
