"""Net utility against F-UEs per F-AP for NOMA q=2, q=3 and OFDMA, with the
relative NOMA gain over OFDMA at each point.

    python scripts/sweep_fues.py --drops 100 --out fue_sweep.csv
"""

import argparse
from pathlib import Path

from nomafran.config import load_config
from nomafran.harness import run_sweep, summary_table, write_csv

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "fue_sweep.cfg"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(CONFIG))
    ap.add_argument("--drops", type=int, default=None)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    cfg = load_config(args.config)
    if args.drops:
        cfg = cfg.with_value("n_drops", args.drops)
    rows = run_sweep(cfg, workers=args.workers)
    if args.out:
        write_csv(rows, args.out)
    table = summary_table(rows)
    print(f"{'F-UEs':>6} {'scheme':>8} {'net utility (bit/s)':>22} {'ci95':>10} {'vs ofdma':>9}")
    for (value, scheme), (mean, ci) in table.items():
        base = table.get((value, "ofdma"), (float("nan"), 0))[0]
        print(f"{value:>6} {scheme:>8} {mean:>22.4e} {ci:>10.2e} {mean / base - 1:>+9.1%}")


if __name__ == "__main__":
    main()
