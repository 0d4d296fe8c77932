"""Biased-model run with and without the switch to integral action.

    python scripts/robustness.py --seeds 0 1 2 3 --out robustness
"""

import argparse
from pathlib import Path

from cttmfg import runner
from cttmfg.config import load_config


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default="s5_robust")
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3])
    p.add_argument("--out", default="robustness")
    args = p.parse_args()

    cfg = load_config(args.config)
    d = runner.design(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in args.seeds:
        c = cfg.with_seed(seed)
        on = runner.robustness(c, d, enabled=True)
        off = runner.robustness(c, d, enabled=False)
        runner.write_trajectory(out / f"eat_seed_{seed}.csv", on.result.t,
                                {"eat_switched": on.result.eat, "eat_unswitched": off.result.eat})
        rows.append([seed, on.result.switch_time, on.plateau, on.terminal, off.terminal])
        print(f"seed {seed}: switch {on.result.switch_time} h at EAT {on.plateau}, terminal {on.terminal:.3f} "
              f"(unswitched {off.terminal:.3f})")
    runner.write_rows(out / "summary.csv", ["seed", "switch_time", "plateau", "terminal", "terminal_unswitched"], rows)


if __name__ == "__main__":
    main()
