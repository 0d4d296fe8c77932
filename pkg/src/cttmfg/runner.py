"""Orchestration behind the command-line front end, plus CSV export."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .errors import ConfigError
from .nearfp import NearFixedPoint, algorithm1, first_crossing_time, settling_time
from .operators import MeanFieldSolution, norm_L2, picard_iterate
from .population import InitialDistribution, Population, sample_population
from .scenario import Scenario
from .seeding import segment_seed
from .simulate import (
    LQGController, MFController, RobustSwitch, SimConfig, SimResult, drop_rank_correlation, simulate_population,
)

log = logging.getLogger(__name__)

PICARD_DAMPING = 0.3
PICARD_MAX_ITER = 400


@dataclass
class Design:
    """Mean trajectory whose pressure generates the agents' laws."""

    scenario: Scenario
    x_bar: np.ndarray
    q_y: np.ndarray
    m_x_bar: np.ndarray
    near_fp: NearFixedPoint | None = None
    solution: MeanFieldSolution | None = None

    @property
    def converged(self) -> bool:
        if self.solution is not None:
            return self.solution.converged
        return not self.near_fp.stagnated

    def controller(self) -> MFController:
        return MFController(self.scenario, self.q_y, self.x_bar)


def near_fixed_point(cfg: ScenarioConfig, y=None, x0_mean=None, log_path=None) -> NearFixedPoint:
    return algorithm1(cfg.algo1_params(), cfg.scenario(y=y, x0_mean=x0_mean), log_path)


def design(cfg: ScenarioConfig, y=None, x0_mean=None, polish=False, log_path=None) -> Design:
    """Near fixed point when mu is ``auto`` (optionally Picard-polished), else a Picard fixed point."""
    if cfg.mu_auto:
        nfp = near_fixed_point(cfg, y, x0_mean, log_path)
        if not polish:
            return Design(nfp.scenario, nfp.x_bar, nfp.q_y, nfp.m_x_bar, near_fp=nfp)
        sc, x_init = nfp.scenario, nfp.x_bar
    else:
        nfp, sc, x_init = None, cfg.scenario(y=y, x0_mean=x0_mean), None
    sol = picard_iterate(sc, x_init, damping=PICARD_DAMPING, max_iter=PICARD_MAX_ITER)
    return Design(sc, sol.x_bar, sol.q_y, sol.m_x_bar, near_fp=nfp, solution=sol)


def population(cfg: ScenarioConfig, seed=None) -> Population:
    sc = cfg.scenario()
    return sample_population(sc.dist, sc.init, cfg.sim.N, cfg.sim.seed if seed is None else seed)


def simulate(cfg: ScenarioConfig, d: Design | None = None, keep_paths=False):
    d = d or design(cfg)
    pop = population(cfg)
    res = simulate_population(pop, SimConfig(N=cfg.sim.N, dt=cfg.grid.dt, T=cfg.sim.T, seed=cfg.sim.seed,
                                             controller=d.controller(), band=d.scenario.band,
                                             keep_paths=keep_paths))
    return res, d


def compare(cfg: ScenarioConfig, d: Design | None = None):
    res_mf, d = simulate(cfg, d)
    sc = d.scenario
    pop = population(cfg)
    res_lq = simulate_population(pop, SimConfig(N=cfg.sim.N, dt=cfg.grid.dt, T=cfg.sim.T, seed=cfg.sim.seed,
                                                controller=LQGController(sc.cost, sc.dist, sc.y), band=sc.band))
    return res_mf, res_lq, d


@dataclass
class RobustRun:
    result: SimResult
    design: Design
    plateau: float | None
    terminal: float


def robustness(cfg: ScenarioConfig, d: Design | None = None, enabled: bool = True) -> RobustRun:
    rb = cfg.robustness
    if rb is None:
        raise ConfigError("robustness: section required for this command")
    d = d or design(cfg)
    true_dist = cfg.type_distribution(x_out=rb.true_x_out)
    pop = sample_population(true_dist, InitialDistribution(rb.true_mean, cfg.initial.std), cfg.sim.N, cfg.sim.seed)
    ctrl = RobustSwitch(d.scenario, d.q_y, window=rb.window, tol=rb.tol, enabled=enabled)
    res = simulate_population(pop, SimConfig(N=cfg.sim.N, dt=cfg.grid.dt, T=cfg.sim.T, seed=cfg.sim.seed,
                                             controller=ctrl, dynamics=true_dist, band=d.scenario.band))
    plateau = None
    if res.switch_time is not None:
        plateau = float(res.eat[int(round(res.switch_time / cfg.grid.dt))])
    return RobustRun(res, d, plateau, float(res.eat[-1]))


@dataclass
class SegmentRun:
    t: np.ndarray
    eat: np.ndarray
    q: np.ndarray
    x_theory: np.ndarray
    boundaries: list[float]
    segments: list[SimResult] = field(default_factory=list)
    designs: list[Design] = field(default_factory=list)


def run_segments(cfg: ScenarioConfig) -> SegmentRun:
    """Chain one solve per target segment; each starts from the previous terminal temperatures."""
    if not cfg.segments:
        raise ConfigError("segments: at least one segment required for a multi-target run")
    pop = population(cfg)
    x0_mean = cfg.initial.mean
    t0 = 0.0
    ts, eats, qs, th, bounds, results, designs = [], [], [], [], [0.0], [], []
    for j, seg in enumerate(cfg.segments):
        d = design(cfg, y=seg.y, x0_mean=x0_mean)
        res = simulate_population(pop, SimConfig(N=cfg.sim.N, dt=cfg.grid.dt, T=seg.duration,
                                                 seed=segment_seed(cfg.sim.seed, j), controller=d.controller(),
                                                 band=d.scenario.band))
        cut = 0 if j == 0 else 1  # the first sample repeats the previous terminal state
        ts.append(t0 + res.t[cut:])
        eats.append(res.eat[cut:])
        qs.append(res.q[cut:])
        th.append(res.x_theory[cut:])
        t0 += res.t[-1]
        bounds.append(t0)
        results.append(res)
        designs.append(d)
        pop = pop.with_x0(res.x_T)
        x0_mean = float(res.eat[-1])
    return SegmentRun(np.concatenate(ts), np.concatenate(eats), np.concatenate(qs), np.concatenate(th), bounds,
                      results, designs)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_rows(path: Path, header, rows):
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def write_summary(path: Path, items: dict):
    write_rows(path, ["key", "value"], items.items())


def sim_summary(res: SimResult) -> dict:
    out = {
        "terminal_eat": res.eat[-1],
        "mean_excursion": res.mean_excursion,
        "terminal_spread": res.terminal_spread,
        "energy_kWh": res.energy,
        "mean_cost": float(np.mean(res.costs)),
        "comfort_violations": res.comfort_violations,
        "agents_violating": res.agents_violating,
    }
    if res.x_theory is not None:
        out["sup_gap_to_theory"] = float(np.max(np.abs(res.eat - res.x_theory)))
    if res.switch_time is not None:
        out["switch_time"] = res.switch_time
    return out


def export_csv(result: SimResult, out_dir, summary: dict | None = None) -> list[Path]:
    """Write ``eat.csv``, ``summary.csv`` and, when paths were kept, ``paths.csv``.

    eat.csv: time, eat, x_bar_theory, q_y, q10..q90 (temperature deciles), total_power.
    paths.csv: agent, time, x, u (agent-major order).
    summary.csv: key, value.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    theory = result.x_theory if result.x_theory is not None else [None] * len(result.t)
    header = ["time", "eat", "x_bar_theory", "q_y"] + [f"q{10 * i}" for i in range(1, 10)] + ["total_power"]
    rows = (
        [result.t[k], result.eat[k], theory[k], result.q[k], *result.deciles[k], result.total_power[k]]
        for k in range(len(result.t))
    )
    written = [out / "eat.csv"]
    write_rows(written[0], header, rows)
    paths_file = out / "paths.csv"
    if result.paths is not None:
        N = result.paths.shape[1]
        write_rows(paths_file, ["agent", "time", "x", "u"],
                   ([i, result.t[k], result.paths[k, i], result.controls[k, i]]
                    for i in range(N) for k in range(len(result.t))))
        written.append(paths_file)
    elif paths_file.exists():
        paths_file.unlink()
    write_summary(out / "summary.csv", summary if summary is not None else sim_summary(result))
    written.append(out / "summary.csv")
    return written


def write_trajectory(path: Path, grid_t, columns: dict):
    names = list(columns)
    write_rows(path, ["time"] + names, ([grid_t[k]] + [columns[n][k] for n in names] for k in range(len(grid_t))))


def near_fp_summary(nfp: NearFixedPoint) -> dict:
    grid = nfp.scenario.grid
    return {
        "mu_star": nfp.mu_star,
        "mu_sup": nfp.mu_sup,
        "mu_inf": nfp.mu_inf,
        "residual_L2": nfp.residual_L2,
        "residual_ratio": nfp.residual_L2 / norm_L2(nfp.x_bar - nfp.scenario.y, grid),
        "terminal_gap": nfp.terminal_gap,
        "output_terminal_gap": nfp.output_terminal_gap,
        "q_limit": nfp.q_y[-1],
        "q_star": nfp.q_star,
        "f": nfp.f,
        "iterations": len(nfp.trace),
        "stagnated": nfp.stagnated,
        "first_crossing_h": first_crossing_time(nfp.x_bar, nfp.scenario.y, grid.t),
        "settling_time_h": settling_time(nfp.x_bar, nfp.scenario.y, grid.t),
        "T_max": grid.T_max,
    }


def mf_vs_lqg(res_mf: SimResult, res_lq: SimResult) -> dict:
    return {
        "terminal_eat": (res_mf.eat[-1], res_lq.eat[-1]),
        "mean_excursion": (res_mf.mean_excursion, res_lq.mean_excursion),
        "terminal_spread": (res_mf.terminal_spread, res_lq.terminal_spread),
        "energy_kWh": (res_mf.energy, res_lq.energy),
        "comfort_violations": (res_mf.comfort_violations, res_lq.comfort_violations),
        "drop_rank_correlation": (drop_rank_correlation(res_mf), drop_rank_correlation(res_lq)),
    }

