"""Self-checks behind ``cttmfg verify``: oracle equivalence, operator bounds and the sup-norm counterexample."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lqg import solve_riccati
from .nearfp import q_inf_star
from .operators import (
    NormK, delta_op, growth_bounds, lipschitz_bound_Rk, m_op, norm_k, sup_norm_discontinuity_demo,
    t_delta_explicit, t_op,
)
from .scenario import Scenario, reference_scenario


def random_member_of_G(scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    """Smooth random trajectory with values in [z, x0_mean]."""
    t = scenario.grid.t
    tau = rng.uniform(0.05, 1.5)
    level = rng.uniform(0.2, 1.0)
    wiggle = rng.uniform(0.0, 1.0 - level)
    omega, phase = rng.uniform(0.5, 8.0), rng.uniform(0, 2 * np.pi)
    s = (1 - np.exp(-t / tau)) * (level + wiggle * 0.5 * (1 + np.sin(omega * t + phase)))
    s = np.clip(s, 0.0, 1.0)
    return scenario.x0_mean + (scenario.z - scenario.x0_mean) * s


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_q_star(scenario: Scenario) -> CheckResult:
    h, c = scenario.heater, scenario.cost
    q = q_inf_star(h, c, scenario.x0_mean, scenario.y, scenario.z)
    const = np.full(scenario.grid.n_steps + 1, q)
    x = t_op(const, h, c, scenario.x0_mean, scenario.z, scenario.grid)
    err = abs(x[-1] - scenario.y)
    return CheckResult("steady-state pressure", err < 1e-6, f"q*={q:.10g}, |x(T_max) - y|={err:.2e}")


def check_oracle(scenario: Scenario, rng, count=5, tol=1e-5) -> CheckResult:
    worst = 0.0
    h = scenario.heater
    for _ in range(count):
        x = random_member_of_G(scenario, rng)
        q = delta_op(x, scenario.g, scenario.y, scenario.grid)
        direct = t_op(q, h, scenario.cost, scenario.x0_mean, scenario.z, scenario.grid)
        kernel = t_delta_explicit(x, h, scenario.g, scenario.y, scenario.cost, scenario.x0_mean, scenario.z,
                                  scenario.grid)
        worst = max(worst, float(np.max(np.abs(direct - kernel))))
    return CheckResult("kernel oracle", worst < tol, f"max sup gap {worst:.2e} over {count} inputs")


def check_image_in_G(scenario: Scenario, rng, count=10, tol=1e-6) -> CheckResult:
    lo, hi = sorted((scenario.z, scenario.x0_mean))
    worst = 0.0
    for _ in range(count):
        mx = m_op(random_member_of_G(scenario, rng), scenario)
        worst = max(worst, lo - mx.min(), mx.max() - hi)
    return CheckResult("image of M in G", worst <= tol, f"max excursion outside G {max(worst, 0.0):.2e}")


def check_lipschitz(scenario: Scenario, rng, count=5) -> CheckResult:
    k = NormK.for_scenario(scenario)
    bound = scenario.g.lipschitz() * lipschitz_bound_Rk(scenario, k)
    worst = 0.0
    for _ in range(count):
        x1, x2 = random_member_of_G(scenario, rng), random_member_of_G(scenario, rng)
        num = norm_k(m_op(x1, scenario) - m_op(x2, scenario), k, scenario.grid)
        den = norm_k(x1 - x2, k, scenario.grid)
        if den > 0:
            worst = max(worst, num / den)
    return CheckResult("weighted Lipschitz bound", worst <= bound, f"max ratio {worst:.4g} <= lambda R_k {bound:.4g}")


def check_growth(scenario: Scenario, rng, count=5) -> CheckResult:
    k0, k1, k2, _ = growth_bounds(scenario)
    t = scenario.grid.t
    ok = True
    for _ in range(count):
        x = random_member_of_G(scenario, rng)
        q = delta_op(x, scenario.g, scenario.y, scenario.grid)
        pi = solve_riccati(q, scenario.heater, scenario.cost, scenario.grid)
        ok &= bool(np.all(q <= k0 * t + 1e-9)) and bool(np.all(pi <= k1 * t + k2 + 1e-9))
    return CheckResult("growth bounds", ok, f"q <= {k0:.4g} t, pi <= {k1:.4g} t + {k2:.4g}")


def check_discontinuity() -> CheckResult:
    rep = sup_norm_discontinuity_demo()
    return CheckResult("sup-norm discontinuity", rep.ok,
                       f"input gap {rep.input_gap[-1]:.1e}, min output gap {rep.output_gap.min():.4f} >= {rep.bound}")


def run_checks(seed: int = 0, scenario: Scenario | None = None) -> list[CheckResult]:
    sc = scenario or reference_scenario("linear", mu=1484.0)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5645]))
    return [
        check_q_star(sc),
        check_oracle(sc, rng),
        check_image_in_G(sc, rng),
        check_lipschitz(sc, rng),
        check_growth(sc, rng),
        check_discontinuity(),
    ]
