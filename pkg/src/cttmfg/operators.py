"""Mean-field operators of the collective target tracking game.

``delta_op`` maps a mean trajectory to the pressure coefficient q, ``t_op``
maps q to the optimally controlled mean of one heater type, and ``m_op`` is
their population-weighted composition. Fixed points of ``m_op`` are the
mean-field equilibria; ``picard_iterate`` searches for one in the weighted
norm ``norm_k``. The remaining functions evaluate the closed-form constants
that bound these operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid

from .errors import DomainError, InvalidParameterError
from .lqg import CostParams, TimeGrid, forward_mean, solve_offset, solve_riccati
from .population import ComfortBand, GFunction, HeaterType, InitialDistribution, TypeDistribution
from .scenario import Scenario

RANGE_SLACK = 1e-9


@dataclass(frozen=True)
class NormK:
    k: float

    def __post_init__(self):
        if not self.k > 0:
            raise InvalidParameterError(f"k must be positive, got {self.k}")

    @classmethod
    def for_scenario(cls, scenario: Scenario, k: float | None = None) -> "NormK":
        upper = scenario.dist.min_a + scenario.cost.delta
        if k is None:
            k = 0.5 * upper
        if not 0 < k < upper:
            raise InvalidParameterError(f"k must lie in (0, {upper}), got {k}")
        return cls(k)


@dataclass
class MeanFieldSolution:
    """Candidate fixed point together with the per-type quantities generated from it."""

    x_bar: np.ndarray
    per_type: list[tuple[np.ndarray, np.ndarray, np.ndarray]]
    q_y: np.ndarray
    m_x_bar: np.ndarray
    residual_k: float
    residual_L2: float
    converged: bool = True
    iterations: int = 0
    history: list[float] = field(default_factory=list)


def delta_op(x_bar, g: GFunction, y: float, grid: TimeGrid) -> np.ndarray:
    """q_t = |int_0^t g(x_bar - y)|, trapezoidal running integral."""
    integrand = g(np.asarray(x_bar, dtype=float) - y)
    return np.abs(cumulative_trapezoid(integrand, dx=grid.dt, initial=0.0))


def t_op_full(q, heater: HeaterType, cost: CostParams, x0_mean: float, z: float, grid: TimeGrid):
    """Riccati gain, offset and controlled mean for one type; returns ``(pi, alpha, x_bar_s)``."""
    pi = solve_riccati(q, heater, cost, grid)
    alpha = solve_offset(pi, x0_mean, heater, cost, z, grid)
    return pi, alpha, forward_mean(pi, alpha, heater, cost, x0_mean, z, grid)


def t_op(q, heater: HeaterType, cost: CostParams, x0_mean: float, z: float, grid: TimeGrid) -> np.ndarray:
    return t_op_full(q, heater, cost, x0_mean, z, grid)[2]


def t_delta_explicit(x_bar, heater: HeaterType, g: GFunction, y: float, cost: CostParams,
                     x0_mean: float, z: float, grid: TimeGrid) -> np.ndarray:
    """Kernel form of ``t_op(delta_op(x_bar))`` evaluated by quadrature.

    x(t) = z + phi(t,0)(x0 - z) + C int_0^t phi(t,eta) int_eta^inf psi(tau,eta) dtau deta,
    with phi, psi the transition kernels of rates a + (b^2/r)pi and a + delta + (b^2/r)pi.
    The inner improper integral is closed past the grid by freezing pi at its last value.
    Valid while the cumulative rates stay below ~600 (no exp overflow).
    """
    q = delta_op(x_bar, g, y, grid)
    pi = solve_riccati(q, heater, cost, grid)
    a, c, d = heater.a, heater.b**2 / cost.r, cost.delta
    A = a + c * pi
    B = A + d
    PA = cumulative_simpson(A, dx=grid.dt, initial=0.0)
    PB = cumulative_simpson(B, dx=grid.dt, initial=0.0)
    if max(PA[-1], PB[-1]) > 600:
        raise InvalidParameterError("horizon too long for the explicit kernel oracle")
    eB = np.exp(-PB)
    # int_eta^T e^{-PB} accumulated from the end (a forward difference would cancel), plus the frozen tail
    tail = cumulative_simpson(eB[::-1], dx=grid.dt, initial=0.0)[::-1]
    inner = (tail + eB[-1] / B[-1]) * np.exp(PB)
    outer = cumulative_simpson(np.exp(PA) * inner, dx=grid.dt, initial=0.0) * np.exp(-PA)
    C = (c * cost.q_x0 + a * a + a * d) * (x0_mean - z)
    return z + np.exp(-PA) * (x0_mean - z) + C * outer


def _g_range(scenario: Scenario):
    return tuple(sorted((scenario.z, scenario.x0_mean)))


def project_to_G(x_bar, scenario: Scenario) -> np.ndarray:
    """Clip round-off excursions (<= 1e-9) back into G; reject anything larger."""
    x_bar = np.asarray(x_bar, dtype=float)
    lo, hi = _g_range(scenario)
    if x_bar.min() < lo - RANGE_SLACK or x_bar.max() > hi + RANGE_SLACK:
        raise DomainError(f"trajectory leaves [{lo}, {hi}]: range [{x_bar.min()}, {x_bar.max()}]")
    return np.clip(x_bar, lo, hi)


def m_op_full(x_bar, scenario: Scenario):
    x_bar = project_to_G(x_bar, scenario)
    q = delta_op(x_bar, scenario.g, scenario.y, scenario.grid)
    per_type = [t_op_full(q, h, scenario.cost, scenario.x0_mean, scenario.z, scenario.grid)
                for h in scenario.dist.types]
    out = np.zeros_like(x_bar)
    for n_s, (_, _, xs) in zip(scenario.dist.weights, per_type):
        out += n_s * xs
    return out, per_type, q


def m_op(x_bar, scenario: Scenario) -> np.ndarray:
    """M = sum_s n_s T^s o Delta."""
    return m_op_full(x_bar, scenario)[0]


def norm_k(x, k, grid: TimeGrid) -> float:
    k = k.k if isinstance(k, NormK) else float(k)
    return float(np.max(np.exp(-k * grid.t) * np.abs(x)))


def norm_L2(x, grid: TimeGrid) -> float:
    return float(math.sqrt(np.trapezoid(np.asarray(x) ** 2, dx=grid.dt)))


def picard_iterate(scenario: Scenario, x_init=None, k: NormK | None = None, tol: float = 1e-8,
                   max_iter: int = 200, damping: float = 0.5) -> MeanFieldSolution:
    """Damped Picard search x <- (1 - damping) x + damping M(x) in the weighted norm.

    Stops at ``norm_k(x - M(x)) < tol`` or after ``max_iter`` operator calls and
    returns the best iterate seen (``converged`` False in the latter case).
    """
    if not 0 < damping <= 1:
        raise InvalidParameterError("damping must lie in (0, 1]")
    grid = scenario.grid
    k = k or NormK.for_scenario(scenario)
    x = np.full(grid.n_steps + 1, scenario.x0_mean) if x_init is None else project_to_G(x_init, scenario)
    history = []
    best = None
    for it in range(max_iter):
        mx, per_type, q = m_op_full(x, scenario)
        res = norm_k(x - mx, k, grid)
        history.append(res)
        if best is None or res < best[0]:
            best = (res, x, mx, per_type, q, it)
        if res < tol:
            break
        x = (1.0 - damping) * x + damping * mx
    res, xb, mx, per_type, q, it = best
    return MeanFieldSolution(
        x_bar=xb, per_type=per_type, q_y=q, m_x_bar=mx, residual_k=res,
        residual_L2=norm_L2(xb - mx, grid), converged=res < tol, iterations=len(history), history=history,
    )


def _check_k(scenario: Scenario, k: float):
    min_a, d = scenario.dist.min_a, scenario.cost.delta
    for h in scenario.dist.types:
        if not 0 < k < min(2 * min_a + d, h.a + d):
            raise InvalidParameterError(f"k={k} outside the admissible range for a={h.a}")


def lipschitz_bound_Rk(scenario: Scenario, k: float | NormK | None = None) -> float:
    """R_k = sum_s n_s (c1 + c2 + c3) so that ||M(x') - M(x'')||_k <= lambda R_k ||x' - x''||_k."""
    k = NormK.for_scenario(scenario).k if k is None else (k.k if isinstance(k, NormK) else float(k))
    _check_k(scenario, k)
    cost = scenario.cost
    r, d = cost.r, cost.delta
    gap = abs(scenario.x0_mean - scenario.z)
    den = 2 * scenario.dist.min_a + d - k
    total = 0.0
    for n_s, h in zip(scenario.dist.weights, scenario.dist.types):
        a, b2 = h.a, h.b**2
        C = (b2 * cost.q_x0 / r + a * a + a * d) * gap
        c1 = gap * b2 / (r * k * k * den)
        L = b2 * C / (r * k * den * (a + d))
        c2 = L / ((a + d - k) * (a + k))
        c3 = L / a
        total += n_s * (c1 + c2 + c3)
    return total


def growth_bounds(scenario: Scenario, k: float | None = None):
    """(k0, k1, k2, k3): q_t <= k0 t, pi_t <= k1 t + k2, ||pi - pi'||_k <= k3 ||x - x'||_k."""
    k = NormK.for_scenario(scenario).k if k is None else float(k)
    min_a = scenario.dist.min_a
    k0 = scenario.g.max_abs(abs(scenario.x0_mean - scenario.z))
    k1 = k0 / (2 * min_a)
    k2 = k0 / (4 * min_a**2) + scenario.cost.q_x0 / (2 * min_a)
    k3 = scenario.g.lipschitz() / (k * (2 * min_a + scenario.cost.delta - k))
    return k0, k1, k2, k3


def riccati_derivative_bound(scenario: Scenario, heater: HeaterType) -> float:
    return growth_bounds(scenario)[0] / (2 * heater.a)


def derivative_bound(scenario: Scenario) -> float:
    """Uniform bound on |d/dt M(x)| over x in G: sum_s n_s (K1 + K2 + K3)."""
    k0, _, k2, _ = growth_bounds(scenario)
    cost = scenario.cost
    gap = abs(scenario.x0_mean - scenario.z)
    total = 0.0
    for n_s, h in zip(scenario.dist.weights, scenario.dist.types):
        a, c = h.a, h.b**2 / cost.r
        Adot = c * k0 / (2 * a)
        C = (c * cost.q_x0 + a * a + a * cost.delta) * gap
        K1 = (a + c * k2 + Adot / a) * gap
        K2 = C / a
        K3 = C * (2.0 + Adot / a**2) / a
        total += n_s * (K1 + K2 + K3)
    return total


@dataclass
class DiscontinuityReport:
    n: np.ndarray
    input_gap: np.ndarray
    output_gap: np.ndarray
    terminal: np.ndarray
    bound: float
    ok: bool


def counterexample_scenario(heater: HeaterType | None = None, cost: CostParams | None = None,
                            horizon_rates: float = 40.0, dt: float = 5e-3) -> Scenario:
    """g(x) = x, x0 = 1, y = 0, z = -1 on a horizon of ``horizon_rates / a`` hours.

    Defaults to the unit heater with no anchor cost and cheap control, so that a
    linearly growing q drives the mean to z well inside the horizon.
    """
    heater = heater or HeaterType(a=1.0, b=1.0, x_out=0.0)
    cost = cost or CostParams(delta=0.001, q_x0=0.0, r=1e-3)
    grid = TimeGrid.from_horizon(horizon_rates / heater.a, dt)
    return Scenario(
        dist=TypeDistribution.uniform(heater),
        band=ComfortBand(l=-1.0, h=2.0, z=-1.0, y=0.0),
        init=InitialDistribution(1.0, 0.0),
        cost=cost,
        g=GFunction.linear(1.0),
        grid=grid,
    )


def sup_norm_discontinuity_demo(n_max: int = 10, scenario: Scenario | None = None,
                                tol: float = 0.05) -> DiscontinuityReport:
    """Inputs y + 0.5^n converge uniformly to y while M of them stays ~|x0 - z| away from M(y)."""
    sc = scenario or counterexample_scenario()
    grid = sc.grid
    m_y = m_op(np.full(grid.n_steps + 1, sc.y), sc)
    ns = np.arange(1, n_max + 1)
    in_gap, out_gap, term = [], [], []
    for n in ns:
        xn = np.full(grid.n_steps + 1, sc.y + 0.5**n)
        mx = m_op(xn, sc)
        in_gap.append(0.5**n)
        out_gap.append(float(np.max(np.abs(mx - m_y))))
        term.append(float(mx[-1]))
    bound = (1 - tol) * abs(sc.x0_mean - sc.z)
    out_gap = np.array(out_gap)
    return DiscontinuityReport(ns, np.array(in_gap), out_gap, np.array(term), bound, bool(np.all(out_gap >= bound)))
