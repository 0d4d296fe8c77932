"""Command-line front end.

    cttmfg <command> [CONFIG] [--config PATH] [--out DIR] [--seed N] [--quiet]

CONFIG is a YAML path or a bundled name (s5_linear, s5_exp, s5_robust,
s5_segments). Exit codes: 0 success, 2 invalid configuration or parameters,
3 numeric failure, 4 non-convergence (artifacts are still written).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import runner
from .checks import run_checks
from .config import bundled_configs, load_config
from .errors import (
    BracketError, ConfigError, DegenerateScenarioError, DomainError, InvalidParameterError, NumericInstabilityError,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_NONCONVERGED = 0, 2, 3, 4
COMMANDS = ("near-fp", "solve", "simulate", "compare", "robustness", "verify")

log = logging.getLogger("cttmfg")


def _parser():
    p = argparse.ArgumentParser(prog="cttmfg", description="Collective target tracking mean-field games for heaters.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("config_name", nargs="?", help="config path or bundled name (%s)" % ", ".join(bundled_configs()))
    p.add_argument("--config", dest="config_path", help="config path (overrides the positional name)")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--seed", type=int, help="override sim.seed (unsigned 64-bit)")
    p.add_argument("--paths", action="store_true", help="also dump per-agent paths (simulate)")
    p.add_argument("--quiet", action="store_true", help="only warnings and errors")
    return p


def _say(args, msg):
    if not args.quiet:
        print(msg)


def _table(args, rows, header):
    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    for r in [header] + rows:
        _say(args, "  ".join(str(c).ljust(w) for c, w in zip(r, widths)))


def cmd_near_fp(cfg, out, args):
    nfp = runner.near_fixed_point(cfg, log_path=out / "descent_log.csv")
    runner.write_trajectory(out / "near_fp.csv", nfp.scenario.grid.t,
                            {"x_bar": nfp.x_bar, "m_x_bar": nfp.m_x_bar, "q_y": nfp.q_y})
    summary = runner.near_fp_summary(nfp)
    runner.write_summary(out / "summary.csv", summary)
    _say(args, f"mu* = {nfp.mu_star:.6g} in [{nfp.mu_sup:.6g}, {nfp.mu_inf:.6g}]")
    _say(args, f"terminal gap of M(x) = {nfp.output_terminal_gap:.3g} degC, "
               f"residual ratio = {summary['residual_ratio']:.3g}")
    return EXIT_NONCONVERGED if nfp.stagnated else EXIT_OK


def cmd_solve(cfg, out, args):
    d = runner.design(cfg, polish=True)
    sol = d.solution
    runner.write_trajectory(out / "fixed_point.csv", d.scenario.grid.t,
                            {"x_bar": sol.x_bar, "m_x_bar": sol.m_x_bar, "q_y": sol.q_y})
    runner.write_summary(out / "summary.csv", {
        "mu": d.scenario.g.mu, "converged": sol.converged, "iterations": sol.iterations,
        "residual_k": sol.residual_k, "residual_L2": sol.residual_L2, "terminal_x_bar": sol.x_bar[-1],
        "terminal_q": sol.q_y[-1],
    })
    _say(args, f"Picard at mu = {d.scenario.g.mu:.6g}: converged={sol.converged} after {sol.iterations} "
               f"iterations, residual {sol.residual_k:.3g}, x(T_max) = {sol.x_bar[-1]:.6g}")
    return EXIT_OK if sol.converged else EXIT_NONCONVERGED


def cmd_simulate(cfg, out, args):
    if cfg.segments:
        run = runner.run_segments(cfg)
        runner.write_trajectory(out / "eat.csv", run.t, {"eat": run.eat, "x_bar_theory": run.x_theory, "q_y": run.q})
        runner.write_summary(out / "summary.csv", {
            "segments": len(cfg.segments), "terminal_eat": run.eat[-1],
            "boundaries": " ".join(repr(b) for b in run.boundaries),
        })
        for j, res in enumerate(run.segments):
            runner.export_csv(res, out / f"segment_{j}")
        _say(args, f"{len(cfg.segments)} segments, terminal EAT {run.eat[-1]:.4f} degC")
        ok = all(d.converged for d in run.designs)
        return EXIT_OK if ok else EXIT_NONCONVERGED
    res, d = runner.simulate(cfg, keep_paths=args.paths)
    runner.export_csv(res, out)
    _say(args, f"N={cfg.sim.N}, T={cfg.sim.T} h: terminal EAT {res.eat[-1]:.4f} degC, "
               f"mean excursion {res.mean_excursion:.4f} degC")
    return EXIT_OK if d.converged else EXIT_NONCONVERGED


def cmd_compare(cfg, out, args):
    res_mf, res_lq, d = runner.compare(cfg)
    runner.export_csv(res_mf, out / "mf")
    runner.export_csv(res_lq, out / "lqg")
    table = runner.mf_vs_lqg(res_mf, res_lq)
    runner.write_rows(out / "compare.csv", ["metric", "mf", "lqg"], ([k, *v] for k, v in table.items()))
    _table(args, [[k, f"{v[0]:.4f}", f"{v[1]:.4f}"] for k, v in table.items()], ["metric", "MF", "LQG"])
    return EXIT_OK if d.converged else EXIT_NONCONVERGED


def cmd_robustness(cfg, out, args):
    run = runner.robustness(cfg)
    summary = runner.sim_summary(run.result)
    summary["plateau_eat"] = run.plateau
    runner.export_csv(run.result, out, summary)
    if run.result.switch_time is None:
        _say(args, "EAT never plateaued: no switch")
        return EXIT_NONCONVERGED
    _say(args, f"switch at t={run.result.switch_time:.3f} h (EAT {run.plateau:.4f}), terminal EAT {run.terminal:.4f}")
    return EXIT_OK


def cmd_verify(cfg, out, args):
    results = run_checks(seed=cfg.sim.seed if cfg else 0)
    runner.write_rows(out / "verify.csv", ["check", "passed", "detail"],
                      ([r.name, r.passed, r.detail] for r in results))
    for r in results:
        _say(args, f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


HANDLERS = {
    "near-fp": cmd_near_fp, "solve": cmd_solve, "simulate": cmd_simulate, "compare": cmd_compare,
    "robustness": cmd_robustness, "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(message)s")
    source = args.config_path or args.config_name
    try:
        if source is None and args.command != "verify":
            raise ConfigError("a config (path or bundled name) is required")
        cfg = load_config(source) if source is not None else None
        if cfg is not None and args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must fit in an unsigned 64-bit integer")
            cfg = cfg.with_seed(args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.command](cfg, out, args)
    except (ConfigError, InvalidParameterError, DomainError) as exc:
        for v in getattr(exc, "violations", [str(exc)]):
            print(f"error: {v}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericInstabilityError, BracketError, DegenerateScenarioError, ZeroDivisionError,
            FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
