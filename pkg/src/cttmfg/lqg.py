"""Discounted LQG tracking with a time-varying cost coefficient.

All deterministic ODEs are integrated with fixed-step RK4 on a shared
:class:`TimeGrid`. Trajectories are plain float arrays of length
``grid.n_steps + 1`` (index ``i`` is time ``i * dt``). Inputs needed at
half steps are recovered by four-point cubic interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, NumericInstabilityError
from .population import HeaterType


@dataclass(frozen=True)
class TimeGrid:
    dt: float = 1e-3
    n_steps: int = 6000

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidParameterError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1:
            raise InvalidParameterError("grid needs at least one step")

    @classmethod
    def from_horizon(cls, T_max: float, dt: float = 1e-3) -> "TimeGrid":
        return cls(dt, int(round(T_max / dt)))

    @property
    def T_max(self) -> float:
        return self.dt * self.n_steps

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    def index(self, t: float) -> int:
        return min(self.n_steps, max(0, int(round(t / self.dt))))

    def extended(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.dt, self.n_steps * factor)


@dataclass(frozen=True)
class CostParams:
    """Discount ``delta``, anchor weight ``q_x0``, control weight ``r`` and baseline tracking weight ``q_lq``."""

    delta: float = 0.001
    q_x0: float = 200.0
    r: float = 10.0
    q_lq: float = 200.0

    def __post_init__(self):
        if not self.delta > 0:
            raise InvalidParameterError(f"delta must be positive, got {self.delta}")
        if not self.q_x0 >= 0:
            raise InvalidParameterError(f"q_x0 must be nonnegative, got {self.q_x0}")
        if not self.r > 0:
            raise InvalidParameterError(f"r must be positive, got {self.r}")
        if not self.q_lq > 0:
            raise InvalidParameterError(f"q_lq must be positive, got {self.q_lq}")


@dataclass(frozen=True)
class ControlLaw:
    """Affine feedback u(x, t) = -(b/r) (pi_t x + alpha_t - pi_t z)."""

    pi: np.ndarray
    alpha: np.ndarray
    z: float
    r: float
    b: float

    def __call__(self, x, t_index):
        return feedback_control(self, x, t_index)


def midpoints(v: np.ndarray) -> np.ndarray:
    """Values at the half steps of a sampled function (cubic interior, quadratic at the ends)."""
    v = np.asarray(v, dtype=float)
    n = len(v) - 1
    if n < 3:
        return 0.5 * (v[:-1] + v[1:])
    m = np.empty(n)
    m[1:-1] = (-v[:-3] + 9.0 * v[1:-2] + 9.0 * v[2:-1] - v[3:]) / 16.0
    m[0] = (3.0 * v[0] + 6.0 * v[1] - v[2]) / 8.0
    m[-1] = (3.0 * v[-1] + 6.0 * v[-2] - v[-3]) / 8.0
    return m


def algebraic_riccati(heater: HeaterType, q_const, cost: CostParams, q_x0: float | None = None):
    """Nonnegative root of (b^2/r) pi^2 + (2a + delta) pi - (q_const + q_x0) = 0."""
    q_x0 = cost.q_x0 if q_x0 is None else q_x0
    c = heater.b**2 / cost.r
    p = 2.0 * heater.a + cost.delta
    Q = np.asarray(q_const, dtype=float) + q_x0
    # rationalized form avoids cancellation for small Q
    root = 2.0 * Q / (p + np.sqrt(p * p + 4.0 * c * Q))
    return float(root) if root.ndim == 0 else root


def solve_riccati(q, heater: HeaterType, cost: CostParams, grid: TimeGrid) -> np.ndarray:
    """Bounded solution of d(pi)/dt = (2a+delta) pi + (b^2/r) pi^2 - q_t - q_x0, integrated backward."""
    q = np.asarray(q, dtype=float)
    if q.shape != (grid.n_steps + 1,):
        raise InvalidParameterError("q does not match the grid")
    if np.any(q < 0):
        raise InvalidParameterError("cost coefficient q must be nonnegative")
    p = 2.0 * heater.a + cost.delta
    c = heater.b**2 / cost.r
    qx = cost.q_x0
    dt = grid.dt
    qq = (q + qx).tolist()
    qm = (midpoints(q) + qx).tolist()
    n = grid.n_steps
    out = [0.0] * (n + 1)
    pi = algebraic_riccati(heater, q[-1], cost)
    out[n] = pi
    h2 = 0.5 * dt
    for i in range(n - 1, -1, -1):
        k1 = p * pi + c * pi * pi - qq[i + 1]
        y = pi - h2 * k1
        k2 = p * y + c * y * y - qm[i]
        y = pi - h2 * k2
        k3 = p * y + c * y * y - qm[i]
        y = pi - dt * k3
        k4 = p * y + c * y * y - qq[i]
        pi = pi - dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not math.isfinite(pi):
            raise NumericInstabilityError("Riccati integration overflowed", step=i)
        out[i] = pi
    return np.array(out)


def _offset_unit(pi: np.ndarray, heater: HeaterType, cost: CostParams, grid: TimeGrid) -> np.ndarray:
    """Bounded offset for a unit anchor gap (anchor - z = 1)."""
    a, dt = heater.a, grid.dt
    c = heater.b**2 / cost.r
    qx = cost.q_x0
    B = (a + cost.delta + c * pi).tolist()
    F = (a * pi - qx).tolist()
    pim = midpoints(pi)
    Bm = (a + cost.delta + c * pim).tolist()
    Fm = (a * pim - qx).tolist()
    n = grid.n_steps
    out = [0.0] * (n + 1)
    al = F[n] / B[n]
    out[n] = al
    h2 = 0.5 * dt
    for i in range(n - 1, -1, -1):
        k1 = B[i + 1] * al - F[i + 1]
        k2 = Bm[i] * (al - h2 * k1) - Fm[i]
        k3 = Bm[i] * (al - h2 * k2) - Fm[i]
        k4 = B[i] * (al - dt * k3) - F[i]
        al = al - dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not math.isfinite(al):
            raise NumericInstabilityError("offset integration overflowed", step=i)
        out[i] = al
    return np.array(out)


def solve_offset(pi, anchor: float, heater: HeaterType, cost: CostParams, z: float, grid: TimeGrid) -> np.ndarray:
    """Bounded solution of d(alpha)/dt = (a+delta+(b^2/r)pi) alpha - (a pi - q_x0)(anchor - z)."""
    pi = np.asarray(pi, dtype=float)
    return (anchor - z) * _offset_unit(pi, heater, cost, grid)


def feedback_control(law: ControlLaw, x, t_index):
    p = law.pi[t_index]
    return -(law.b / law.r) * (p * x + law.alpha[t_index] - p * law.z)


def forward_mean(pi, alpha, heater: HeaterType, cost: CostParams, x0_mean: float, z: float,
                 grid: TimeGrid) -> np.ndarray:
    """Closed-loop mean d(x)/dt = -(a + (b^2/r) pi) x - (b^2/r)(alpha - pi z) + a x0, x(0) = x0."""
    pi = np.asarray(pi, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    a, dt = heater.a, grid.dt
    c = heater.b**2 / cost.r
    A = (a + c * pi).tolist()
    S = (-c * (alpha - pi * z) + a * x0_mean).tolist()
    pim, alm = midpoints(pi), midpoints(alpha)
    Am = (a + c * pim).tolist()
    Sm = (-c * (alm - pim * z) + a * x0_mean).tolist()
    n = grid.n_steps
    out = [0.0] * (n + 1)
    x = float(x0_mean)
    out[0] = x
    h2 = 0.5 * dt
    for i in range(n):
        k1 = S[i] - A[i] * x
        k2 = Sm[i] - Am[i] * (x + h2 * k1)
        k3 = Sm[i] - Am[i] * (x + h2 * k2)
        k4 = S[i + 1] - A[i + 1] * (x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not math.isfinite(x):
            raise NumericInstabilityError("mean dynamics overflowed", step=i + 1)
        out[i + 1] = x
    return np.array(out)


def standard_lqg_law(heater: HeaterType, cost: CostParams, y: float, x0: float, grid: TimeGrid) -> ControlLaw:
    """Stationary baseline tracker sending one agent to ``y``.

    The gain comes from the algebraic Riccati equation with weight ``q_lq`` and
    no anchor term. The constant offset folds in the feedforward a(y - x0)/b that
    shifts the free power from x0 to y, so the noiseless equilibrium is exactly y.
    """
    pi_bar = algebraic_riccati(heater, cost.q_lq, cost, q_x0=0.0)
    alpha = -cost.r * heater.a * (y - x0) / heater.b**2
    n = grid.n_steps + 1
    return ControlLaw(np.full(n, pi_bar), np.full(n, alpha), y, cost.r, heater.b)


def discounted_cost(x, u, q, x0: float, cost: CostParams, z: float, grid: TimeGrid) -> float:
    """Trapezoidal quadrature of exp(-delta t)[q/2 (x-z)^2 + q_x0/2 (x-x0)^2 + r/2 u^2] over the grid.

    ``x``, ``u`` may carry a leading agent axis (with ``x0`` broadcasting).
    """
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if x.ndim > 1:
        x0 = x0[..., None]
    t = grid.t
    integrand = np.exp(-cost.delta * t) * (
        0.5 * np.asarray(q) * (x - z) ** 2 + 0.5 * cost.q_x0 * (x - x0) ** 2 + 0.5 * cost.r * np.asarray(u) ** 2
    )
    res = np.trapezoid(integrand, dx=grid.dt, axis=-1)
    return float(res) if np.ndim(res) == 0 else res
