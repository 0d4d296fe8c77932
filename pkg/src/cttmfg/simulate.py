"""Finite-population Monte Carlo under mean-field, LQG and switching controllers.

Every controller is an affine feedback u = -(b/r)(pi x + alpha - pi z) with
per-agent gains, so one vectorized Euler-Maruyama loop serves all of them.
Agent ``i`` draws its Brownian increments from its own Philox stream keyed by
``(seed, "noise", i)``; the increments are generated in time blocks, which does
not change the sequence an agent sees.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.stats import spearmanr

from .errors import InvalidParameterError
from .lqg import CostParams, _offset_unit, algebraic_riccati, discounted_cost, solve_riccati
from .operators import delta_op
from .population import ComfortBand, Population, TypeDistribution, sample_population
from .scenario import Scenario
from .seeding import agent_rng

log = logging.getLogger(__name__)

NOISE_BLOCK = 500


@dataclass(frozen=True)
class MFController:
    """Mean-field laws generated by the pressure ``q`` (sampled on ``scenario.grid``)."""

    scenario: Scenario
    q: np.ndarray
    x_theory: np.ndarray | None = None


@dataclass(frozen=True)
class LQGController:
    """Per-agent stationary trackers to ``y`` with weight ``cost.q_lq``."""

    cost: CostParams
    dist: TypeDistribution
    y: float


@dataclass(frozen=True)
class RobustSwitch:
    """Mean-field laws precomputed on ``assumed``, then integral-action steady-state laws.

    Switches when |EAT(t) - EAT(t - window)| < tol.
    """

    assumed: Scenario
    q: np.ndarray
    window: float = 0.25
    tol: float = 0.02
    enabled: bool = True


Controller = Union[MFController, LQGController, RobustSwitch]


@dataclass(frozen=True)
class SimConfig:
    N: int
    dt: float = 1e-3
    T: float = 3.0
    seed: int = 0
    controller: Controller | None = None
    dynamics: TypeDistribution | None = None  # true heater types; defaults to the controller's
    band: ComfortBand | None = None
    keep_paths: bool = False

    def __post_init__(self):
        if self.N < 1:
            raise InvalidParameterError(f"N must be at least 1, got {self.N}")
        if not self.dt > 0 or not self.T > 0:
            raise InvalidParameterError("dt and T must be positive")
        if self.controller is None:
            raise InvalidParameterError("a controller is required")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass
class SimResult:
    t: np.ndarray
    eat: np.ndarray
    x0: np.ndarray
    x_T: np.ndarray
    mean_excursion: float
    terminal_spread: float
    costs: np.ndarray
    energy: float
    total_power: np.ndarray
    deciles: np.ndarray
    q: np.ndarray
    comfort_violations: int = 0
    agents_violating: int = 0
    x_theory: np.ndarray | None = None
    paths: np.ndarray | None = None
    controls: np.ndarray | None = None
    switch_time: float | None = None


@dataclass(frozen=True)
class ExcursionSummary:
    mean_excursion: float
    terminal_spread: float
    energy: float
    comfort_violations: int
    agents_violating: int


class _Policy:
    """Per-run gains. ``gains(k, eat)`` returns (pi, alpha) arrays over agents."""

    z: float
    r: float
    q_x0: float
    delta: float

    def gains(self, k, eat):
        raise NotImplementedError

    def q_at(self, k) -> float:
        raise NotImplementedError


def _stride(law_dt, sim_dt):
    s = sim_dt / law_dt
    stride = int(round(s))
    if stride < 1 or abs(s - stride) > 1e-9 * s:
        raise InvalidParameterError(f"sim dt {sim_dt} is not a multiple of the law dt {law_dt}")
    return stride


def _mf_tables(scenario: Scenario, q):
    """Per-type gain ``pi`` and unit-anchor offset on the scenario grid."""
    pis, units = [], []
    for h in scenario.dist.types:
        pi = solve_riccati(q, h, scenario.cost, scenario.grid)
        pis.append(pi)
        units.append(_offset_unit(pi, h, scenario.cost, scenario.grid))
    return np.array(pis), np.array(units)


class _MFPolicy(_Policy):
    def __init__(self, ctrl: MFController, pop: Population, cfg: SimConfig):
        sc = ctrl.scenario
        self.stride = _stride(sc.grid.dt, cfg.dt)
        if cfg.n_steps * self.stride > sc.grid.n_steps:
            raise InvalidParameterError("simulation horizon exceeds the control-law grid")
        pis, units = _mf_tables(sc, ctrl.q)
        self.pi_t = pis[:, :: self.stride]
        self.unit_t = units[:, :: self.stride]
        self.ti = pop.type_index
        self.gap = pop.x0 - sc.z
        self.z, self.r, self.q_x0, self.delta = sc.z, sc.cost.r, sc.cost.q_x0, sc.cost.delta
        self.qs = np.asarray(ctrl.q)[:: self.stride]

    def gains(self, k, eat):
        return self.pi_t[self.ti, k], self.gap * self.unit_t[self.ti, k]

    def q_at(self, k):
        return self.qs[k]


class _LQGPolicy(_Policy):
    def __init__(self, ctrl: LQGController, pop: Population, cfg: SimConfig):
        c = ctrl.cost
        pis = np.array([algebraic_riccati(h, c.q_lq, c, q_x0=0.0) for h in ctrl.dist.types])
        a = pop.param("a")
        b = pop.param("b")
        self.pi = pis[pop.type_index]
        self.alpha = -c.r * a * (ctrl.y - pop.x0) / b**2
        self.z, self.r, self.q_x0, self.delta = ctrl.y, c.r, 0.0, c.delta
        self.q_lq = c.q_lq

    def gains(self, k, eat):
        return self.pi, self.alpha

    def q_at(self, k):
        return self.q_lq


class _SwitchPolicy(_Policy):
    def __init__(self, ctrl: RobustSwitch, pop: Population, cfg: SimConfig):
        self.mf = _MFPolicy(MFController(ctrl.assumed, ctrl.q), pop, cfg)
        sc = ctrl.assumed
        self.sc = sc
        self.ctrl = ctrl
        self.dt = cfg.dt
        self.z, self.r, self.q_x0, self.delta = self.mf.z, self.mf.r, self.mf.q_x0, self.mf.delta
        self.lag = int(round(ctrl.window / cfg.dt))
        self.a = np.array([h.a for h in sc.dist.types])[pop.type_index]
        self.c = np.array([h.b**2 / sc.cost.r for h in sc.dist.types])[pop.type_index]
        self.gap = pop.x0 - sc.z
        self.switch_k: int | None = None
        self.pi = None
        self.integral = 0.0
        self.g_prev = None
        self.q_hist = []

    def _observe(self, k, eat):
        gv = float(self.sc.g(eat[k] - self.sc.y))
        if self.g_prev is not None:
            self.integral += 0.5 * self.dt * (gv + self.g_prev)
        self.g_prev = gv

    def gains(self, k, eat):
        self._observe(k, eat)
        if self.switch_k is None and self.ctrl.enabled and k >= self.lag:
            if abs(eat[k] - eat[k - self.lag]) < self.ctrl.tol:
                self.switch_k = k
        if self.switch_k is None:
            self.q_hist.append(self.mf.q_at(k))
            return self.mf.gains(k, eat)
        q_hat = abs(self.integral)
        self.q_hist.append(q_hat)
        cost = self.sc.cost
        # warm-started Newton on c pi^2 + (2a + delta) pi - (q + q_x0) = 0
        pi = self.pi if self.pi is not None else self.mf.gains(k, eat)[0]
        p = 2.0 * self.a + cost.delta
        Q = q_hat + cost.q_x0
        for _ in range(3):
            pi = pi - (self.c * pi * pi + p * pi - Q) / (2.0 * self.c * pi + p)
        self.pi = pi
        alpha = self.gap * (self.a * pi - cost.q_x0) / (self.a + cost.delta + self.c * pi)
        return pi, alpha

    def q_at(self, k):
        return self.q_hist[k]


def _policy(pop, cfg) -> _Policy:
    ctrl = cfg.controller
    if isinstance(ctrl, MFController):
        return _MFPolicy(ctrl, pop, cfg)
    if isinstance(ctrl, LQGController):
        return _LQGPolicy(ctrl, pop, cfg)
    if isinstance(ctrl, RobustSwitch):
        return _SwitchPolicy(ctrl, pop, cfg)
    raise InvalidParameterError(f"unknown controller {type(ctrl).__name__}")


def _controller_types(ctrl) -> TypeDistribution:
    if isinstance(ctrl, LQGController):
        return ctrl.dist
    if isinstance(ctrl, RobustSwitch):
        return ctrl.assumed.dist
    return ctrl.scenario.dist


def _noise_blocks(seed, N, n_steps, block=NOISE_BLOCK):
    """Yield (N, block) arrays of standard normals, row i from agent i's stream."""
    rngs = [agent_rng(seed, "noise", i) for i in range(N)]
    done = 0
    while done < n_steps:
        m = min(block, n_steps - done)
        yield np.stack([g.standard_normal(m) for g in rngs])
        done += m


def agent_noise(seed, index, n_steps) -> np.ndarray:
    """The increments agent ``index`` sees in any run with this seed."""
    return agent_rng(seed, "noise", index).standard_normal(n_steps)


def simulate_population(agents: Population, cfg: SimConfig) -> SimResult:
    """Euler-Maruyama over ``cfg.T`` with step ``cfg.dt``; comfort violations are counted, never clipped."""
    if len(agents) != cfg.N:
        raise InvalidParameterError(f"population has {len(agents)} agents, config expects {cfg.N}")
    pol = _policy(agents, cfg)
    ctrl_types = _controller_types(cfg.controller)
    true_types = cfg.dynamics or ctrl_types
    if true_types.m != ctrl_types.m:
        raise InvalidParameterError("true and assumed type lists differ in length")
    ti = agents.type_index
    pick = lambda dist, name: np.array([getattr(h, name) for h in dist.types])[ti]
    a, b, x_out, sigma = (pick(true_types, n) for n in ("a", "b", "x_out", "sigma"))
    # the controller's free power uses its own model of the heater
    a_c, b_c, xo_c = (pick(ctrl_types, n) for n in ("a", "b", "x_out"))
    ufree = a_c * (agents.x0 - xo_c) / b_c
    b_over_r = b_c / pol.r

    n, dt, N = cfg.n_steps, cfg.dt, cfg.N
    sq = math.sqrt(dt)
    noisy = bool(np.any(sigma > 0))
    blocks = _noise_blocks(cfg.seed, N, n) if noisy else None
    xi = None

    x = agents.x0.astype(float).copy()
    x0 = agents.x0
    eat = np.empty(n + 1)
    deciles = np.empty((n + 1, 9))
    power = np.empty(n + 1)
    qs = np.empty(n + 1)
    costs = np.zeros(N)
    energy = 0.0
    max_dev = np.zeros(N)
    viol = 0
    ever = np.zeros(N, dtype=bool)
    paths = np.empty((n + 1, N)) if cfg.keep_paths else None
    controls = np.empty((n + 1, N)) if cfg.keep_paths else None
    probs = np.linspace(0.1, 0.9, 9)

    for k in range(n + 1):
        eat[k] = x.mean()
        deciles[k] = np.quantile(x, probs)
        pi, alpha = pol.gains(k, eat)
        u = -b_over_r * (pi * x + alpha - pi * pol.z)
        q = pol.q_at(k)
        qs[k] = q
        w = (0.5 if k in (0, n) else 1.0) * dt * math.exp(-pol.delta * k * dt)
        costs += w * (0.5 * q * (x - pol.z) ** 2 + 0.5 * pol.q_x0 * (x - x0) ** 2 + 0.5 * pol.r * u * u)
        p_tot = u + ufree
        power[k] = p_tot.sum()
        np.maximum(max_dev, np.abs(x - x0), out=max_dev)
        if cfg.band is not None:
            out = (x < cfg.band.l) | (x > cfg.band.h)
            viol += int(out.sum())
            ever |= out
        if paths is not None:
            paths[k] = x
            controls[k] = u
        if k == n:
            break
        energy += power[k] * dt
        x = x + (-a * (x - x_out) + b * p_tot) * dt
        if noisy:
            j = k % NOISE_BLOCK
            if j == 0:
                xi = next(blocks)
            x = x + sigma * sq * xi[:, j]

    switch_time = None
    if isinstance(pol, _SwitchPolicy):
        if pol.switch_k is None:
            if cfg.controller.enabled:
                log.warning("EAT never plateaued within T=%g; no switch", cfg.T)
        else:
            switch_time = pol.switch_k * dt
    theory = None
    if isinstance(cfg.controller, MFController) and cfg.controller.x_theory is not None:
        theory = np.asarray(cfg.controller.x_theory)[:: _stride(cfg.controller.scenario.grid.dt, dt)][: n + 1]
    return SimResult(
        t=dt * np.arange(n + 1), eat=eat, x0=x0.copy(), x_T=x, mean_excursion=float(max_dev.mean()),
        terminal_spread=float(x.std()), costs=costs, energy=float(energy), total_power=power, deciles=deciles,
        q=qs, comfort_violations=viol, agents_violating=int(ever.sum()), x_theory=theory, paths=paths,
        controls=controls, switch_time=switch_time,
    )


def lqg_baseline(agents: Population, cfg: SimConfig) -> SimResult:
    """Same run with the stationary LQG tracker; ``cfg.controller`` must be an :class:`LQGController`."""
    if not isinstance(cfg.controller, LQGController):
        raise InvalidParameterError("lqg_baseline needs an LQGController")
    return simulate_population(agents, cfg)


def robustness_sim(agents: Population, cfg: SimConfig) -> SimResult:
    if not isinstance(cfg.controller, RobustSwitch):
        raise InvalidParameterError("robustness_sim needs a RobustSwitch controller")
    return simulate_population(agents, cfg)


def excursion_stats(result: SimResult) -> ExcursionSummary:
    return ExcursionSummary(result.mean_excursion, result.terminal_spread, result.energy,
                            result.comfort_violations, result.agents_violating)


def drop_rank_correlation(result: SimResult) -> float:
    """Spearman correlation between x0 and the realized drop x0 - x(T)."""
    return float(spearmanr(result.x0, result.x0 - result.x_T).statistic)


@dataclass
class NashGap:
    N: int
    probes: np.ndarray
    eps: np.ndarray
    mean: float = field(init=False)
    max: float = field(init=False)
    # an agent can always keep its mean-field law, so negative gains count as zero
    gain: float = field(init=False)

    def __post_init__(self):
        self.mean = float(np.mean(self.eps))
        self.max = float(np.max(self.eps))
        self.gain = float(np.mean(np.maximum(self.eps, 0.0)))


def epsilon_nash_gap(agents: Population, ctrl: MFController, seed: int, probe_count: int = 5) -> NashGap:
    """Relative gain of a unilateral certainty-equivalent best response.

    The population is run over the whole law grid under the mean-field laws.
    Each probed agent then re-solves its Riccati and offset equations against
    the realized q^N = Delta(EAT) and replays its own noise with the new law;
    its cost is evaluated against the EAT in which only its own path changed.
    """
    sc = ctrl.scenario
    grid = sc.grid
    if sc.dist.m != 1:
        raise InvalidParameterError("epsilon_nash_gap is implemented for a uniform population")
    h = sc.heater
    N = len(agents)
    cfg = SimConfig(N=N, dt=grid.dt, T=grid.T_max, seed=seed, controller=ctrl, keep_paths=True)
    base = simulate_population(agents, cfg)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x4E415348]))
    probes = np.sort(rng.choice(N, size=min(probe_count, N), replace=False))

    cost = sc.cost
    qN = delta_op(base.eat, sc.g, sc.y, grid)
    pi = solve_riccati(qN, h, cost, grid)
    unit = _offset_unit(pi, h, cost, grid)
    c = h.b / cost.r
    ufree = h.a * (agents.x0[probes] - h.x_out) / h.b
    gap = agents.x0[probes] - sc.z
    n = grid.n_steps
    xs = np.empty((n + 1, len(probes)))
    us = np.empty_like(xs)
    x = agents.x0[probes].astype(float).copy()
    noise = np.stack([agent_noise(seed, i, n) for i in probes], axis=1) if h.sigma > 0 else None
    sq = math.sqrt(grid.dt)
    for k in range(n + 1):
        u = -c * (pi[k] * x + gap * unit[k] - pi[k] * sc.z)
        xs[k], us[k] = x, u
        if k == n:
            break
        x = x + (-h.a * (x - h.x_out) + h.b * (u + ufree)) * grid.dt
        if noise is not None:
            x = x + h.sigma * sq * noise[k]

    eps = np.empty(len(probes))
    for j, i in enumerate(probes):
        J0 = discounted_cost(base.paths[:, i], base.controls[:, i], qN, agents.x0[i], cost, sc.z, grid)
        eat_i = base.eat + (xs[:, j] - base.paths[:, i]) / N
        q_i = delta_op(eat_i, sc.g, sc.y, grid)
        J1 = discounted_cost(xs[:, j], us[:, j], q_i, agents.x0[i], cost, sc.z, grid)
        eps[j] = (J0 - J1) / abs(J0)
    return NashGap(N, probes, eps)


def mf_controller(scenario: Scenario, x_bar) -> MFController:
    """Laws generated by a candidate mean trajectory through Delta."""
    q = delta_op(x_bar, scenario.g, scenario.y, scenario.grid)
    return MFController(scenario, q, np.asarray(x_bar))


def population_for(scenario: Scenario, N: int, seed: int) -> Population:
    return sample_population(scenario.dist, scenario.init, N, seed)
