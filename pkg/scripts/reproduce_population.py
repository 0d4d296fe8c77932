"""MF versus LQG population runs on the linear scenario, over several seeds.

    python scripts/reproduce_population.py --seeds 0 1 2 --out population
"""

import argparse
from pathlib import Path

import numpy as np

from cttmfg import runner
from cttmfg.config import load_config


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default="s5_linear")
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.add_argument("--out", default="population")
    args = p.parse_args()

    cfg = load_config(args.config)
    d = runner.design(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in args.seeds:
        c = cfg.with_seed(seed)
        res_mf, res_lq, _ = runner.compare(c, d)
        runner.export_csv(res_mf, out / f"seed_{seed}" / "mf")
        runner.export_csv(res_lq, out / f"seed_{seed}" / "lqg")
        gap = float(np.max(np.abs(res_mf.eat - d.x_bar[: len(res_mf.eat)])))
        ratio = res_mf.mean_excursion / res_lq.mean_excursion
        rows.append([seed, gap, res_mf.eat[-1], res_lq.eat[-1], res_mf.mean_excursion, res_lq.mean_excursion, ratio])
        print(f"seed {seed}: sup gap {gap:.3f}, terminal MF {res_mf.eat[-1]:.3f} LQG {res_lq.eat[-1]:.3f}, "
              f"excursion ratio {ratio:.3f}")
    runner.write_rows(out / "seeds.csv", ["seed", "sup_gap", "mf_terminal", "lqg_terminal", "mf_excursion",
                                          "lqg_excursion", "excursion_ratio"], rows)


if __name__ == "__main__":
    main()
