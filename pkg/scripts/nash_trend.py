"""Relative gain of a unilateral best response as the population grows.

    python scripts/nash_trend.py --sizes 20 50 200 --seeds 10
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np

from cttmfg.operators import picard_iterate
from cttmfg.runner import PICARD_DAMPING, PICARD_MAX_ITER, write_rows
from cttmfg.scenario import reference_scenario
from cttmfg.seeding import thread_cap
from cttmfg.simulate import epsilon_nash_gap, mf_controller, population_for


def _gap(sc, ctrl, N, seed):
    return epsilon_nash_gap(population_for(sc, N, seed).centered(sc.x0_mean), ctrl, seed)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--mu", type=float, default=1484.0)
    p.add_argument("--sigma", type=float, default=0.15)
    p.add_argument("--sizes", type=int, nargs="+", default=[20, 50, 200, 500])
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--out", default="nash_trend.csv")
    args = p.parse_args()

    sc = reference_scenario("linear", mu=args.mu, sigma=args.sigma)
    sol = picard_iterate(sc, damping=PICARD_DAMPING, max_iter=PICARD_MAX_ITER)
    ctrl = mf_controller(sc, sol.x_bar)
    rows = []
    pool = ProcessPoolExecutor(max_workers=thread_cap())
    for N in args.sizes:
        gaps = list(pool.map(partial(_gap, sc, ctrl, N), range(args.seeds)))
        gain = float(np.mean([g.gain for g in gaps]))
        signed = float(np.mean([g.mean for g in gaps]))
        rows.append([N, gain, signed, max(g.max for g in gaps)])
        print(f"N={N}: clipped gain {gain:.3e}, signed {signed:.3e}")
    pool.shutdown()
    write_rows(Path(args.out), ["N", "mean_gain", "mean_signed", "max_signed"], rows)


if __name__ == "__main__":
    main()
