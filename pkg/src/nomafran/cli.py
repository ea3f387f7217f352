"""``simulate`` command: run a configured sweep and write the CSV.

Exit codes: 0 on success, 2 on a config error, 3 when a topology cannot be
placed under the attempt budget.
"""

from __future__ import annotations

import argparse
import sys

from nomafran.config import load_config
from nomafran.errors import ConfigError, FeasibilityError
from nomafran.harness import run_sweep, summary_table, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_FEASIBILITY = 0, 2, 3


def build_parser():
    ap = argparse.ArgumentParser(prog="simulate", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="flat key = value file")
    ap.add_argument("--seed", type=int, help="base seed; drop i uses seed + i")
    ap.add_argument("--drops", type=int, help="Monte Carlo drops per sweep point and scheme")
    ap.add_argument("--out", help="CSV path (default: stdout)")
    ap.add_argument("--scheme", choices=("noma", "ofdma"), help="single scheme, overrides the schemes key")
    ap.add_argument("--q", type=int, help="F-UEs per (F-AP, subchannel) group")
    ap.add_argument("--workers", type=int, default=1, help="worker processes")
    return ap


def apply_overrides(cfg, args):
    if args.seed is not None:
        cfg = cfg.with_value("base_seed", args.seed)
    if args.drops is not None:
        cfg = cfg.with_value("n_drops", args.drops)
    if args.scheme is not None:
        cfg = cfg.with_value("scheme", args.scheme).with_value("schemes", ())
    if args.q is not None:
        cfg = cfg.with_value("q", args.q)
        # a scheme list keeps its OFDMA entry but every NOMA entry takes the new q
        labels = [s if s.strip().lower() == "ofdma" else f"noma-q{args.q}" for s in cfg.schemes]
        cfg = cfg.with_value("schemes", tuple(dict.fromkeys(labels)))
    return cfg.validate()


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = apply_overrides(load_config(args.config), args)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows = run_sweep(cfg, workers=args.workers)
    except FeasibilityError as exc:
        print(f"error: infeasible topology: {exc}", file=sys.stderr)
        return EXIT_FEASIBILITY
    text = write_csv(rows, args.out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        for (value, scheme), (mean, ci) in summary_table(rows).items():
            where = f"{cfg.sweep_param}={value} " if cfg.sweep_param else ""
            print(f"{where}{scheme}: net utility {mean:.4g} +/- {ci:.2g} bit/s", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
