"""Scan the near fixed point boost hyperparameters and record where the descent lands.

    python scripts/algo1_hyperparam_scan.py --g linear --out scan_linear.csv
"""

import argparse
import itertools
import time
from pathlib import Path

from cttmfg.errors import CTTError
from cttmfg.nearfp import Algo1Params, algorithm1
from cttmfg.runner import near_fp_summary, write_rows
from cttmfg.scenario import reference_scenario

COLUMNS = ["t0", "n1", "n2", "mu_sup", "mu_inf", "mu_star", "residual_ratio", "output_terminal_gap",
           "first_crossing_h", "settling_time_h", "seconds"]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--g", choices=["linear", "exp"], default="linear")
    p.add_argument("--t0", type=float, nargs="+", default=[0.15, 0.25, 0.35])
    p.add_argument("--n1", type=float, nargs="+", default=[1.05, 1.1, 1.25])
    p.add_argument("--n2", type=float, nargs="+", default=[1.375, 1.5, 2.0])
    p.add_argument("--out", default="algo1_scan.csv")
    args = p.parse_args()

    sc = reference_scenario(args.g)
    rows = []
    for t0, n1, n2 in itertools.product(args.t0, args.n1, args.n2):
        if n1 > n2:
            continue
        start = time.perf_counter()
        try:
            s = near_fp_summary(algorithm1(Algo1Params(n1=n1, n2=n2, t0=t0), sc))
        except CTTError as exc:
            print(f"t0={t0} n1={n1} n2={n2}: {exc}")
            continue
        s.update(t0=t0, n1=n1, n2=n2, seconds=time.perf_counter() - start)
        rows.append([s[c] for c in COLUMNS])
        print(f"t0={t0} n1={n1} n2={n2}: mu*={s['mu_star']:.1f} in [{s['mu_sup']:.1f}, {s['mu_inf']:.1f}], "
              f"ratio {s['residual_ratio']:.3f}")
    write_rows(Path(args.out), COLUMNS, rows)


if __name__ == "__main__":
    main()
