"""Command-line interface.

    mixrec run    --model mlc --n 100 --l 3 --k 5 --strategy p-ident:2 ...
    mixrec sweep  --T 5,10,15 ...
    mixrec verify-family --kind ruff --n 50 --t 4 --alpha 0.5 ...

Exit status 0 on completion, 2 on configuration errors.  MIXREC_THREADS
caps trial parallelism.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, MixrecError
from .harness import ExperimentConfig, run_experiment, sweep, sweep_csv
from .set_families import build_cff, build_ruff, verify_cff, verify_ruff


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", choices=["mlc", "mlr"], default="mlc")
    parser.add_argument("--n", type=int, default=100)
    parser.add_argument("--l", "--ell", dest="ell", type=int, default=3)
    parser.add_argument("--k", type=int, default=5)
    parser.add_argument("--eta", type=float, default=0.0)
    parser.add_argument("--sigma", type=float, default=1.0)
    parser.add_argument("--delta", type=float, default=0.1)
    parser.add_argument("--T", default="auto", help="batch size override or 'auto'")
    parser.add_argument("--trials", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--c1", type=float, default=4.0)
    parser.add_argument("--c2", type=float, default=2.0)
    parser.add_argument("--c3", type=float, default=8.0)
    parser.add_argument("--support-mode", default="union-design",
                        choices=["random-disjointish", "union-design", "explicit"])
    parser.add_argument("--values", default="positive-uniform",
                        choices=["pm-uniform", "positive-uniform"])
    parser.add_argument("--out", default=None)
    parser.add_argument("--format", choices=["csv", "jsonl"], default="jsonl")


def _parse_T(text: str):
    if text == "auto":
        return None
    return int(text)


def _config_from_args(args) -> ExperimentConfig:
    return ExperimentConfig(
        model=args.model, n=args.n, ell=args.ell, k=args.k, eta=args.eta,
        sigma=args.sigma, delta=args.delta, strategy=getattr(args, "strategy", "p-ident:2"),
        batch_T=_parse_T(args.T), trials=args.trials, seed=args.seed,
        c1=args.c1, c2=args.c2, c3=args.c3, support_mode=args.support_mode,
        value_distribution=args.values, out=args.out, format=args.format,
    )


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    summary = run_experiment(cfg)
    print(
        f"accuracy {summary.accuracy:.4f} "
        f"(wilson95 [{summary.wilson_low:.4f}, {summary.wilson_high:.4f}]) "
        f"mean queries {summary.mean_queries:.0f} over {cfg.trials} trials"
    )
    if cfg.out:
        print(f"records written to {cfg.out}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    T_values = [int(x) for x in args.T_list.split(",") if x.strip()]
    if not T_values:
        raise ConfigError("sweep needs at least one T value")
    rows = sweep(cfg, T_values)
    text = sweep_csv(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"sweep written to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_verify_family(args) -> int:
    if args.kind == "ruff":
        fam = build_ruff(args.n, args.t, args.alpha, seed=args.seed,
                         c1=args.c1, c2=args.c2)
        ok = verify_ruff(fam, fam.kind.d, args.t, args.alpha)
        print(f"ruff n={args.n} m={fam.m} d={fam.kind.d} verified={ok}")
    else:
        if args.r is None:
            raise ConfigError("--r is required for CFF verification")
        fam = build_cff(args.n, args.r, args.t, seed=args.seed, c3=args.c3)
        ok = verify_cff(fam, args.r, args.t)
        print(f"cff n={args.n} m={fam.m} r={args.r} t={args.t} verified={ok}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixrec")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one recovery experiment")
    _add_common(p_run)
    p_run.add_argument("--strategy", default="p-ident:2",
                       help="p-ident:<p> | flip | kruskal:<r>")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="accuracy vs batch size table")
    _add_common(p_sweep)
    p_sweep.add_argument("--T-list", dest="T_list", default="5,10,15,20,25,30,35,40,45,50",
                         help="comma-separated batch sizes")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_ver = sub.add_parser("verify-family", help="build and verify a set family")
    p_ver.add_argument("--kind", choices=["ruff", "cff"], required=True)
    p_ver.add_argument("--n", type=int, required=True)
    p_ver.add_argument("--t", type=int, required=True)
    p_ver.add_argument("--alpha", type=float, default=0.5)
    p_ver.add_argument("--r", type=int, default=None)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--c1", type=float, default=4.0)
    p_ver.add_argument("--c2", type=float, default=2.0)
    p_ver.add_argument("--c3", type=float, default=8.0)
    p_ver.set_defaults(func=_cmd_verify_family)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except MixrecError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
