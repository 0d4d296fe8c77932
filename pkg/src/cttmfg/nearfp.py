"""Desirable near fixed point search for a uniform population.

A family of mean trajectories x(mu) is built from convex combinations of two
boundary trajectories so that Delta_mu(x(mu)) settles at the steady-state
pressure q*. Gradient descent over mu then minimizes the L2 distance between
x(mu) and M_mu(x(mu)).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BracketError, DegenerateScenarioError, InvalidParameterError
from .lqg import CostParams, TimeGrid
from .operators import delta_op, m_op, norm_L2, t_op
from .population import HeaterType
from .scenario import Scenario

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Algo1Params:
    n1: float = 1.1
    n2: float = 1.5
    t0: float = 0.25
    d_mu: float = 1.0
    e1: float = 1e-6
    e2_rel: float = 1e-4
    gamma: float = 10.0
    mu_init: float | None = None
    max_iter: int = 200
    max_bisect: int = 60

    def __post_init__(self):
        if not 1 < self.n1 <= self.n2:
            raise InvalidParameterError(f"need 1 < n1 <= n2, got n1={self.n1}, n2={self.n2}")
        for name in ("t0", "d_mu", "e1", "e2_rel", "gamma"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive")


@dataclass
class DescentStep:
    iter: int
    mu: float
    f: float
    residual_L2: float
    q_limit_gap: float


@dataclass
class NearFixedPoint:
    mu_star: float
    x_bar: np.ndarray
    q_y: np.ndarray
    m_x_bar: np.ndarray
    residual_L2: float
    terminal_gap: float
    f: float
    q_star: float
    mu_sup: float
    mu_inf: float
    x_sup: np.ndarray
    x_inf: np.ndarray
    scenario: Scenario
    trace: list[DescentStep] = field(default_factory=list)
    stagnated: bool = False

    @property
    def output_terminal_gap(self) -> float:
        return abs(self.m_x_bar[-1] - self.scenario.y)


def q_inf_star(heater: HeaterType, cost: CostParams, x0_mean: float, y: float, z: float) -> float:
    """Constant pressure whose steady-state mean is exactly y."""
    if y == z:
        raise ZeroDivisionError("target y coincides with the boundary target z")
    a, b2 = heater.a, heater.b**2
    return (a * (a + cost.delta) * cost.r + cost.q_x0 * b2) / b2 * (x0_mean - y) / (y - z)


def boosted_q(q_star: float, n: float, t0: float, grid: TimeGrid) -> np.ndarray:
    return np.where(grid.t <= t0 + 1e-12, n * q_star, q_star)


def _limit(scenario: Scenario, x, mu=None) -> float:
    g = scenario.g if mu is None else scenario.g.with_mu(mu)
    return float(delta_op(x, g, scenario.y, scenario.grid)[-1])


def _signed_limit(scenario: Scenario, x, mu) -> float:
    """int_0^T g_mu(x - y) with its sign (the bisection needs monotonicity, not |.|)."""
    vals = scenario.g.with_mu(mu)(np.asarray(x) - scenario.y)
    return float(np.trapezoid(vals, dx=scenario.grid.dt))


def boundary_trajectories(p: Algo1Params, scenario: Scenario):
    """Means generated by boosting q* by n1 (upper) and n2 (lower) on [0, t0]."""
    h, c, grid = scenario.heater, scenario.cost, scenario.grid
    q_star = q_inf_star(h, c, scenario.x0_mean, scenario.y, scenario.z)
    x_sup = t_op(boosted_q(q_star, p.n1, p.t0, grid), h, c, scenario.x0_mean, scenario.z, grid)
    x_inf = t_op(boosted_q(q_star, p.n2, p.t0, grid), h, c, scenario.x0_mean, scenario.z, grid)
    return x_sup, x_inf


def mu_bounds(x_sup, x_inf, scenario: Scenario, q_star: float):
    """mu_sup = q*/lim Delta_1(x_sup), mu_inf = q*/lim Delta_1(x_inf)."""
    lim_sup = _signed_limit(scenario, x_sup, 1.0)
    lim_inf = _signed_limit(scenario, x_inf, 1.0)
    sign = 1.0 if scenario.band.release else -1.0
    lim_sup, lim_inf = sign * lim_sup, sign * lim_inf
    if lim_sup <= 0 or lim_inf <= 0:
        raise DegenerateScenarioError(
            f"limiting pressure integrals not positive (sup={lim_sup}, inf={lim_inf}); retune t0, n1, n2")
    return q_star / lim_sup, q_star / lim_inf


def dichotomy_f(mu: float, x_sup, x_inf, scenario: Scenario, q_star: float, e2: float, max_iter: int = 60):
    """Bisect f in [0, 1] so that lim Delta_mu((1-f) x_inf + f x_sup) = q*; returns ``(x, f, gap)``."""
    sign = 1.0 if scenario.band.release else -1.0

    def excess(f):
        xf = (1.0 - f) * x_inf + f * x_sup
        return xf, sign * _signed_limit(scenario, xf, mu) - q_star

    x_lo, e_lo = excess(0.0)
    x_hi, e_hi = excess(1.0)
    if abs(e_lo) < e2:
        return x_lo, 0.0, abs(e_lo)
    if abs(e_hi) < e2:
        return x_hi, 1.0, abs(e_hi)
    if e_lo > 0 or e_hi < 0:
        raise BracketError(f"q* not bracketed at mu={mu}: excess {e_lo} at f=0, {e_hi} at f=1")
    lo, hi = 0.0, 1.0
    for _ in range(max_iter):
        f = 0.5 * (lo + hi)
        xf, e = excess(f)
        if e > 0:
            hi, e_hi = f, e
        else:
            lo, e_lo = f, e
        if abs(e) < e2:
            break
    # secant polish inside the final bracket so that f varies smoothly with mu
    # (the limit is affine in f for linear g)
    f_s = lo - e_lo * (hi - lo) / (e_hi - e_lo)
    x_s, e_s = excess(f_s)
    if abs(e_s) <= abs(e):
        return x_s, f_s, abs(e_s)
    return xf, f, abs(e)


class _Family:
    """Caches the x(mu) construction and the residual R(mu) for one scenario."""

    def __init__(self, p: Algo1Params, scenario: Scenario):
        self.p = p
        self.scenario = scenario
        h = scenario.heater
        self.q_star = q_inf_star(h, scenario.cost, scenario.x0_mean, scenario.y, scenario.z)
        self.e2 = p.e2_rel * self.q_star
        self.x_sup, self.x_inf = boundary_trajectories(p, scenario)
        self.mu_sup, self.mu_inf = mu_bounds(self.x_sup, self.x_inf, scenario, self.q_star)
        self._cache = {}

    def evaluate(self, mu):
        if mu not in self._cache:
            sc = self.scenario.with_mu(mu)
            x, f, gap = dichotomy_f(mu, self.x_sup, self.x_inf, sc, self.q_star, self.e2, self.p.max_bisect)
            mx = m_op(x, sc)
            self._cache[mu] = (norm_L2(x - mx, sc.grid), x, mx, f, gap)
        return self._cache[mu]

    def R(self, mu):
        return self.evaluate(mu)[0]


def _settled(scenario: Scenario, x, tol=1e-4) -> bool:
    return abs(x[-1] - scenario.y) < tol


def algorithm1(p: Algo1Params, scenario: Scenario, log_path: str | Path | None = None) -> NearFixedPoint:
    """Projected gradient descent of R(mu) = ||x(mu) - M_mu(x(mu))||_L2 over (mu_sup, mu_inf).

    The descent stops once the step changes R by less than ``e1`` and the
    point is no worse than its neighbours mu +- d_mu. Limits at infinity are
    read at T_max; if the boundary trajectories have not settled to within
    1e-4 of y the horizon is doubled once.
    """
    if scenario.dist.m != 1:
        raise InvalidParameterError("the near fixed point search is defined for a uniform population")
    fam = _Family(p, scenario)
    if not (_settled(scenario, fam.x_sup) and _settled(scenario, fam.x_inf)):
        scenario = scenario.with_grid(scenario.grid.extended(2))
        fam = _Family(p, scenario)
    lo, hi = fam.mu_sup, fam.mu_inf
    eps = 1e-6 * (hi - lo)
    lo_p, hi_p = lo + eps, hi - eps

    def clamp(m):
        return min(hi_p, max(lo_p, m))

    mu = clamp(p.mu_init if p.mu_init is not None else 0.5 * (lo + hi))
    gamma = p.gamma
    trace = []
    worse_run = 0
    stagnated = False
    R = fam.R(mu)
    for it in range(p.max_iter):
        _, _, _, f, gap = fam.evaluate(mu)
        trace.append(DescentStep(it, mu, f, R, gap))
        up, down = clamp(mu + p.d_mu), clamp(mu - p.d_mu)
        R_up, R_down = fam.R(up), fam.R(down)
        if R <= R_up and R <= R_down:
            break
        # forward difference; on a flat or concave spot fall back to the lower neighbour
        grad = (R_up - R) / (up - mu) if up > mu else (R - R_down) / (mu - down)
        if (grad > 0) != (R_down < R_up) or grad == 0.0:
            grad = (R_up - R_down) / max(up - down, 1e-300)
        step_gamma = gamma
        while True:
            mu_new = clamp(mu - step_gamma * grad)
            R_new = fam.R(mu_new)
            if R_new <= R or step_gamma < 1e-12 * gamma:
                break
            step_gamma *= 0.5
        worse_run = worse_run + 1 if R_new >= R else 0
        if worse_run >= 20:
            stagnated = True
            log.warning("descent stagnated at mu=%g", mu)
            break
        small = abs(R_new - R) < p.e1
        gamma = min(step_gamma * 2.0, 1e12)
        mu, R = mu_new, R_new
        if small and R <= fam.R(clamp(mu + p.d_mu)) and R <= fam.R(clamp(mu - p.d_mu)):
            break
    R, x, mx, f, gap = fam.evaluate(mu)
    trace.append(DescentStep(len(trace), mu, f, R, gap))
    if log_path is not None:
        write_descent_log(trace, log_path)
    sc = scenario.with_mu(mu)
    return NearFixedPoint(
        mu_star=mu, x_bar=x, q_y=delta_op(x, sc.g, sc.y, sc.grid), m_x_bar=mx, residual_L2=R,
        terminal_gap=abs(x[-1] - scenario.y), f=f, q_star=fam.q_star, mu_sup=lo, mu_inf=hi,
        x_sup=fam.x_sup, x_inf=fam.x_inf, scenario=sc, trace=trace, stagnated=stagnated,
    )


def residual_curve(p: Algo1Params, scenario: Scenario, mus):
    """R(mu) on the given values (diagnostic)."""
    fam = _Family(p, scenario)
    return np.array([fam.R(m) for m in mus]), fam


def first_crossing_time(x, y, t, tol=0.05) -> float:
    """First time with |x - y| <= tol (inf if never)."""
    hit = np.flatnonzero(np.abs(np.asarray(x) - y) <= tol)
    return float(t[hit[0]]) if hit.size else math.inf


def settling_time(x, y, t, tol=0.05) -> float:
    """Time after which |x - y| <= tol for good (inf if it ends outside)."""
    out = np.flatnonzero(np.abs(np.asarray(x) - y) > tol)
    if not out.size:
        return float(t[0])
    if out[-1] == len(t) - 1:
        return math.inf
    return float(t[out[-1] + 1])


def write_descent_log(trace, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "mu", "f", "residual_L2", "q_limit_gap"])
        for s in trace:
            w.writerow([s.iter, repr(s.mu), repr(s.f), repr(s.residual_L2), repr(s.q_limit_gap)])
