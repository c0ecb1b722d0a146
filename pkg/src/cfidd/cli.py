"""Command-line front end.

Subcommands: ``sweep`` (full BER table), ``trial`` (single-trial debug
dump), ``flops`` (detector complexity table), ``selftest`` (fast invariant
battery).  Exit codes: 0 success, 1 configuration error, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import sys

from . import detect, harness, refine
from ._kernels import backend
from .config import SystemConfig, load_config
from .errors import CfiddError, ConfigError
from .selftest import selftest

DETECTOR_CHOICES = ("rmf", "mmse", "mmse-pic", "all")
STRATEGY_CHOICES = ("standard", "censoring", "combining", "all")


class _Parser(argparse.ArgumentParser):
    # usage problems are configuration errors (exit 1), not numerical ones
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cfidd", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--detector", choices=DETECTOR_CHOICES, default="all")
    common.add_argument("--strategy", choices=STRATEGY_CHOICES, default="all")
    common.add_argument("--mode", choices=("full", "scalable"),
                        default="full")
    common.add_argument("--snr", nargs="+",
                        help="SNR grid in dB (overrides the config)")
    common.add_argument("--trials", type=int, help="number of trials")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--workers", type=int, default=1,
                        help="parallel trial workers")

    sp = sub.add_parser("sweep", parents=[common],
                        help="run the Monte Carlo BER sweep")
    sp.add_argument("--out", help="output CSV path (default: stdout)")

    tp = sub.add_parser("trial", parents=[common],
                        help="run one trial and dump its results")
    tp.add_argument("--trial-index", type=int, default=0)

    sub.add_parser("flops", parents=[common],
                   help="evaluate the detector complexity polynomials")
    sub.add_parser("selftest", parents=[common],
                   help="run the invariant self-checks")
    return p


def _load(args) -> SystemConfig:
    cfg = load_config(args.config) if args.config else SystemConfig()
    if args.snr:
        parts = []
        for tok in args.snr:
            parts.extend(tok.replace(",", " ").split())
        cfg.snr_grid = [float(x) for x in parts]
    if args.trials is not None:
        cfg.trials = args.trials
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg.validate()


def _detectors(args):
    return harness.DETECTORS if args.detector == "all" else (args.detector,)


def _strategies(args):
    return refine.STRATEGIES if args.strategy == "all" else (args.strategy,)


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    rows = harness.sweep(cfg, mode=args.mode, detectors=_detectors(args),
                         strategies=_strategies(args), workers=args.workers)
    if args.out:
        harness.write_csv(rows, args.out)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        harness.write_csv(rows, "/dev/stdout")
    return 0


def _cmd_trial(args) -> int:
    cfg = _load(args)
    snr_db = cfg.snr_grid[0]
    seed = harness._trial_seed(cfg.seed, args.trial_index)
    selmap = harness.describe_selection(cfg, seed, mode=args.mode)
    print(f"# trial {args.trial_index} @ {snr_db:g} dB, mode={args.mode}, "
          f"kernel backend={backend()}")
    print("# serving map (rows = UEs, cols = APs):")
    for row in selmap.as_matrix():
        print("#   " + " ".join(str(int(x)) for x in row))
    results = harness.run_trial(cfg, snr_db, seed, mode=args.mode,
                                detectors=_detectors(args))
    wanted = set(_strategies(args))
    print("detector,strategy,idd_iter,bit_errors,bits_total,mu_abs_mean,"
          "frac_converged")
    for r in results:
        if r.strategy not in wanted:
            continue
        print(f"{r.detector},{r.strategy},{r.idd_iter},{r.bit_errors:g},"
              f"{r.bits_total},{r.diagnostics['mu_abs_mean']:.4f},"
              f"{r.diagnostics['frac_converged']:.3f}")
    return 0


def _cmd_flops(args) -> int:
    cfg = _load(args)
    print(f"# multiplications per detection pass at "
          f"K={cfg.K}, N={cfg.N}, L={cfg.L}, M_c={cfg.M_c}")
    for det in _detectors(args):
        print(f"{det}: {detect.flop_count(det, cfg.K, cfg.N, cfg.L, cfg.M_c)}")
    return 0


def _cmd_selftest(args) -> int:
    cfg = _load(args)
    failures = selftest(cfg, verbose=True)
    return 0 if failures == 0 else 2


_COMMANDS = {"sweep": _cmd_sweep, "trial": _cmd_trial, "flops": _cmd_flops,
             "selftest": _cmd_selftest}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except CfiddError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
