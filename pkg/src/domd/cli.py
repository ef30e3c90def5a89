"""Command line front end.

Exit codes: 0 on success, 1 on configuration or usage errors, 2 when a
guarantee check detects a violation.
"""

import argparse
import sys
from dataclasses import replace

from .config import ConfigError, describe_schema, load_config
from .harness import exact_run_violations, run_experiment, sweep, verify_bounds


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; keep 2 reserved for
    # bound violations and treat bad usage as a config error instead
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p):
    p.add_argument("--config", required=True, metavar="FILE",
                   help="experiment description (INI)")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--out", required=True, metavar="DIR",
                   help="directory for the CSV outputs")


def build_parser():
    parser = _Parser(prog="domd",
                     description="decentralized online mirror descent experiments")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    run_p = sub.add_parser("run", help="execute one experiment",
                           epilog="config schema:\n" + describe_schema(),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(run_p)
    run_p.add_argument("--run-index", type=int, default=0,
                       help="replicate index (varies the derived random streams)")

    sweep_p = sub.add_parser("sweep",
                             help="replicate runs across values of one numeric key")
    _add_common(sweep_p)
    sweep_p.add_argument("--param", required=True,
                         help="config key to vary, e.g. noise.sigma_v2")
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated numeric values")
    sweep_p.add_argument("--runs", type=int, default=None,
                         help="replicates per value (default: experiment.runs)")

    verify_p = sub.add_parser("verify-bounds",
                              help="check every guarantee on the synthetic suite")
    verify_p.add_argument("--seeds", type=int, default=20,
                          help="seeded configurations per suite case")
    verify_p.add_argument("--out", required=True, metavar="DIR")
    verify_p.add_argument("--l-scale", type=float, default=1.0,
                          help="rescale the declared gradient bound "
                               "(0.5 is the negative control)")
    return parser


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _cmd_run(args):
    cfg = _load(args)
    result = run_experiment(cfg, run_index=args.run_index, out_dir=args.out)
    print(f"dynamic_regret={result.regret.dynamic_regret:.6g}")
    print(f"normalized_final={result.regret.normalized[-1]:.6g}")
    print(f"sigma2={result.sigma2:.6g}")
    if result.bounds is not None:
        print(f"guarantee_total={result.bounds.total:.6g}")
    print(f"outputs written to {args.out}")
    violated = exact_run_violations(result)
    if violated:
        print(f"bound violation: {', '.join(violated)}", file=sys.stderr)
        return 2
    return 0


def _cmd_sweep(args):
    cfg = _load(args)
    try:
        values = tuple(float(v) for v in args.values.split(","))
    except ValueError:
        raise ConfigError(f"--values must be comma-separated numbers, got {args.values!r}")
    result = sweep(cfg, args.param, values, runs=args.runs, out_dir=args.out)
    for k, value in enumerate(result.values):
        print(f"{args.param}={value:g}: final_normalized="
              f"{result.final_mean[k]:.6g} (+/- {result.final_std[k]:.6g})")
    print(f"outputs written to {args.out}")
    return 0


def _cmd_verify(args):
    if args.seeds < 1:
        raise ConfigError("--seeds must be at least 1")
    report = verify_bounds(args.seeds, out_dir=args.out, l_scale=args.l_scale)
    for row in report.rows:
        if not row.passed:
            print(f"VIOLATION {row.case} seed={row.seed} {row.check}: "
                  f"empirical={row.empirical:.6g} bound={row.bound:.6g}",
                  file=sys.stderr)
    print(f"checks={len(report.rows)} seeds={report.seeds} "
          f"violations={report.violations}")
    print(f"outputs written to {args.out}")
    return 0 if report.passed else 2


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "sweep": _cmd_sweep, "verify-bounds": _cmd_verify}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
