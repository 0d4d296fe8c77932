import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cttmfg.errors import InvalidParameterError, NumericInstabilityError
from cttmfg.lqg import (
    CostParams, TimeGrid, algebraic_riccati, discounted_cost, forward_mean, midpoints, solve_offset, solve_riccati,
    standard_lqg_law,
)
from cttmfg.population import HeaterType
from cttmfg.scenario import reference_heater

import oracles

H = reference_heater()
COST = CostParams()


def test_grid_contract():
    g = TimeGrid(1e-3, 6000)
    assert g.T_max == pytest.approx(6.0)
    assert len(g.t) == 6001
    assert g.index(0.75) == 750
    assert g.extended(2).n_steps == 12000
    assert TimeGrid.from_horizon(3.0).n_steps == 3000
    with pytest.raises(InvalidParameterError):
        TimeGrid(0.0, 10)


def test_cost_validation():
    with pytest.raises(InvalidParameterError):
        CostParams(delta=0.0)
    with pytest.raises(InvalidParameterError):
        CostParams(r=-1.0)


@given(st.floats(0, 1e5))
def test_algebraic_root_solves_quadratic(q):
    pi = algebraic_riccati(H, q, COST)
    c = H.b**2 / COST.r
    res = c * pi * pi + (2 * H.a + COST.delta) * pi - q - COST.q_x0
    assert abs(res) <= 1e-9 * (q + COST.q_x0)
    assert pi == pytest.approx(oracles.riccati_root(q, H.a, H.b, COST.delta, COST.q_x0, COST.r), rel=1e-12)


@given(st.floats(0, 1e4), st.floats(0, 1e4))
def test_algebraic_root_monotone(q1, q2):
    lo, hi = sorted((q1, q2))
    assert algebraic_riccati(H, lo, COST) <= algebraic_riccati(H, hi, COST)


def test_constant_q_gives_constant_root():
    grid = TimeGrid(1e-2, 300)
    pi = solve_riccati(np.full(301, 66.9), H, COST, grid)
    assert np.allclose(pi, algebraic_riccati(H, 66.9, COST), rtol=1e-12)


def test_time_varying_riccati_matches_adaptive_integrator():
    grid = TimeGrid(1e-3, 4000)
    t = grid.t
    q_fun = lambda s: 300.0 * (1 - np.exp(-2.0 * s)) + 50.0 * np.sin(3.0 * s) ** 2
    pi = solve_riccati(q_fun(t), H, COST, grid)
    ref = oracles.riccati_ivp(q_fun, H.a, H.b, COST.delta, COST.q_x0, COST.r, grid.T_max, t, pi[-1])
    assert np.max(np.abs(pi - ref)) < 1e-7


def test_riccati_rejects_bad_input():
    grid = TimeGrid(0.1, 10)
    with pytest.raises(InvalidParameterError):
        solve_riccati(np.full(11, -1.0), H, COST, grid)
    with pytest.raises(InvalidParameterError):
        solve_riccati(np.zeros(5), H, COST, grid)


def test_riccati_overflow_is_reported():
    grid = TimeGrid(1.0, 50)
    q = np.where(np.arange(51) < 25, 1e8, 0.0)
    with pytest.raises(NumericInstabilityError) as info:
        solve_riccati(q, H, COST, grid)
    assert info.value.step is not None


def _bumps(t, weights):
    centers = np.linspace(0, 4, len(weights))
    return sum(w * np.exp(-(((t - c) / 0.5) ** 2)) for w, c in zip(weights, centers))


@given(st.lists(st.floats(0, 2000), min_size=4, max_size=4), st.lists(st.floats(0, 500), min_size=4, max_size=4))
def test_comparison_principle(levels, extra):
    """q1 <= q2 pointwise implies pi1 <= pi2 pointwise (smooth q, as produced by Delta)."""
    grid = TimeGrid(1e-2, 400)
    q1 = _bumps(grid.t, levels)
    q2 = q1 + _bumps(grid.t, extra)
    p1 = solve_riccati(q1, H, COST, grid)
    p2 = solve_riccati(q2, H, COST, grid)
    assert np.all(p1 <= p2 + 1e-9 * (1 + p2))


def test_offset_constant_gain_closed_form():
    grid = TimeGrid(1e-2, 200)
    pi0 = algebraic_riccati(H, 66.9, COST)
    al = solve_offset(np.full(201, pi0), 21.0, H, COST, 17.0, grid)
    c = H.b**2 / COST.r
    expected = (H.a * pi0 - COST.q_x0) * 4.0 / (H.a + COST.delta + c * pi0)
    assert np.allclose(al, expected, rtol=1e-12)


@given(st.floats(-5, 5))
def test_offset_linear_in_anchor_gap(shift):
    grid = TimeGrid(1e-2, 100)
    pi = np.linspace(20, 40, 101)
    one = solve_offset(pi, 18.0, H, COST, 17.0, grid)
    other = solve_offset(pi, 17.0 + shift, H, COST, 17.0, grid)
    assert np.allclose(other, shift * one, atol=1e-9)


def test_forward_mean_constant_gains():
    grid = TimeGrid(1e-3, 3000)
    pi0 = 30.0
    c = H.b**2 / COST.r
    alpha = 5.0
    x = forward_mean(np.full(3001, pi0), np.full(3001, alpha), H, COST, 21.0, 17.0, grid)
    rate = H.a + c * pi0
    target = (-c * (alpha - pi0 * 17.0) + H.a * 21.0) / rate
    ref = oracles.linear_mean_closed_form(grid.t, 21.0, rate, target)
    assert np.max(np.abs(x - ref)) < 1e-9


def test_standard_lqg_equilibrium_is_target():
    grid = TimeGrid(1e-2, 100)
    law = standard_lqg_law(H, COST, 20.0, 21.7, grid)
    # noiseless drift at x = y with the free power of x0 = 21.7
    u = law(20.0, 0)
    drift = -H.a * (20.0 - H.x_out) + H.b * (u + H.a * (21.7 - H.x_out) / H.b)
    assert drift == pytest.approx(0.0, abs=1e-12)
    assert law.pi[0] == pytest.approx(algebraic_riccati(H, COST.q_lq, COST, q_x0=0.0))


def test_discounted_cost_constant_control():
    grid = TimeGrid(1e-3, 2000)
    n = 2001
    J = discounted_cost(np.full(n, 17.0), np.full(n, 2.0), np.zeros(n), 17.0, COST, 17.0, grid)
    exact = 0.5 * COST.r * 4.0 * (1 - np.exp(-COST.delta * 2.0)) / COST.delta
    assert J == pytest.approx(exact, rel=1e-9)
    batch = discounted_cost(np.full((3, n), 17.0), np.full((3, n), 2.0), np.zeros(n), np.full(3, 17.0), COST, 17.0,
                            grid)
    assert np.allclose(batch, exact, rtol=1e-9)


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_midpoints_exact_for_cubics(coef):
    t = np.linspace(0, 1, 21)
    f = lambda s: np.polyval(coef, s)
    assert np.allclose(midpoints(f(t))[1:-1], f(t[:-1] + 0.025)[1:-1], atol=1e-10)
    # quadratic end formulas
    if coef[0] == 0:
        assert np.allclose(midpoints(f(t)), f(t[:-1] + 0.025), atol=1e-10)


def test_unit_heater_root():
    h = HeaterType(1.0, 1.0, 0.0)
    c = CostParams(delta=1.0, q_x0=0.0, r=1.0)
    # pi^2 + 3 pi - 4 = 0 -> pi = 1
    assert algebraic_riccati(h, 4.0, c) == pytest.approx(1.0)
