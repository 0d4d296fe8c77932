import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cttmfg.checks import random_member_of_G
from cttmfg.errors import DomainError, InvalidParameterError
from cttmfg.lqg import TimeGrid, solve_riccati
from cttmfg.operators import (
    NormK, counterexample_scenario, delta_op, derivative_bound, growth_bounds, lipschitz_bound_Rk, m_op, m_op_full,
    norm_k, norm_L2, picard_iterate, project_to_G, sup_norm_discontinuity_demo, t_delta_explicit, t_op,
)
from cttmfg.population import GFunction, TypeDistribution
from cttmfg.scenario import reference_scenario

import oracles

seeds = st.integers(0, 2**32 - 1)


def test_delta_of_target_is_zero(s5_coarse):
    grid = s5_coarse.grid
    assert np.all(delta_op(np.full(grid.n_steps + 1, 20.0), s5_coarse.g, 20.0, grid) == 0.0)


@given(st.floats(17.0, 21.0), st.floats(1.0, 5000.0))
def test_delta_constant_input_is_linear_in_time(level, mu):
    grid = TimeGrid(1e-2, 300)
    q = delta_op(np.full(301, level), GFunction.linear(mu), 20.0, grid)
    assert np.allclose(q, mu * abs(level - 20.0) * grid.t, rtol=1e-12, atol=1e-9)


@given(seeds, st.floats(0.1, 10.0))
def test_delta_homogeneous_in_mu(s5_coarse, seed, scale):
    x = random_member_of_G(s5_coarse, np.random.default_rng(seed))
    g = s5_coarse.g
    q1 = delta_op(x, g, 20.0, s5_coarse.grid)
    q2 = delta_op(x, g.with_mu(g.mu * scale), 20.0, s5_coarse.grid)
    assert np.allclose(q2, scale * q1, rtol=1e-10, atol=1e-9)


def test_t_op_constant_pressure_closed_form():
    sc = reference_scenario("linear", mu=1484.0)
    grid = sc.grid
    h, c = sc.heater, sc.cost
    q = 120.0
    x = t_op(np.full(grid.n_steps + 1, q), h, c, 21.0, 17.0, grid)
    pi, alpha, x_inf = oracles.steady_state(q, h.a, h.b, c.delta, c.q_x0, c.r, 21.0, 17.0)
    rate = h.a + h.b**2 / c.r * pi
    ref = oracles.linear_mean_closed_form(grid.t, 21.0, rate, x_inf)
    assert np.max(np.abs(x - ref)) < 1e-9


@given(seeds)
def test_kernel_oracle_matches_composition(s5_linear, seed):
    """Two independent routes to T(Delta(x)): ODE integration and the explicit kernel."""
    sc = s5_linear
    x = random_member_of_G(sc, np.random.default_rng(seed))
    h = sc.heater
    q = delta_op(x, sc.g, sc.y, sc.grid)
    direct = t_op(q, h, sc.cost, sc.x0_mean, sc.z, sc.grid)
    kernel = t_delta_explicit(x, h, sc.g, sc.y, sc.cost, sc.x0_mean, sc.z, sc.grid)
    assert np.max(np.abs(direct - kernel)) < 1e-5


@given(seeds)
def test_image_of_M_stays_in_G(s5_coarse, seed):
    mx = m_op(random_member_of_G(s5_coarse, np.random.default_rng(seed)), s5_coarse)
    assert mx.min() >= 17.0 - 1e-6 and mx.max() <= 21.0 + 1e-6


@given(seeds)
def test_exp_g_image_stays_in_G(seed):
    sc = reference_scenario("exp", mu=218.0, grid=TimeGrid(1e-2, 600))
    mx = m_op(random_member_of_G(sc, np.random.default_rng(seed)), sc)
    assert mx.min() >= 17.0 - 1e-6 and mx.max() <= 21.0 + 1e-6


@given(seeds, seeds)
def test_weighted_lipschitz_bound(s5_coarse, s1, s2):
    sc = s5_coarse
    k = NormK.for_scenario(sc)
    x1 = random_member_of_G(sc, np.random.default_rng(s1))
    x2 = random_member_of_G(sc, np.random.default_rng(s2))
    lhs = norm_k(m_op(x1, sc) - m_op(x2, sc), k, sc.grid)
    assert lhs <= sc.g.lipschitz() * lipschitz_bound_Rk(sc, k) * norm_k(x1 - x2, k, sc.grid) + 1e-12


@given(seeds)
def test_growth_bounds_hold(s5_coarse, seed):
    sc = s5_coarse
    k0, k1, k2, _ = growth_bounds(sc)
    x = random_member_of_G(sc, np.random.default_rng(seed))
    q = delta_op(x, sc.g, sc.y, sc.grid)
    pi = solve_riccati(q, sc.heater, sc.cost, sc.grid)
    t = sc.grid.t
    assert np.all(q <= k0 * t + 1e-9)
    assert np.all(pi <= k1 * t + k2)


@given(seeds)
def test_derivative_bound_holds(s5_coarse, seed):
    sc = s5_coarse
    mx = m_op(random_member_of_G(sc, np.random.default_rng(seed)), sc)
    assert np.max(np.abs(np.diff(mx))) / sc.grid.dt <= derivative_bound(sc)


def test_lipschitz_constant_closed_form(s5_linear):
    """R_k reassembled term by term from the published constants."""
    sc = s5_linear
    k = 0.2
    h, c = sc.heater, sc.cost
    a, b2, r, d = h.a, h.b**2, c.r, c.delta
    gap = 4.0
    C = (b2 * c.q_x0 / r + a * a + a * d) * gap
    den = 2 * a + d - k
    c1 = gap * b2 / (r * k * k * den)
    L = b2 * C / (r * k * den * (a + d))
    expected = c1 + L / ((a + d - k) * (a + k)) + L / a
    assert lipschitz_bound_Rk(sc, k) == pytest.approx(expected, rel=1e-14)


def test_norm_k_range(s5_linear):
    with pytest.raises(InvalidParameterError):
        NormK.for_scenario(s5_linear, k=1.0)
    with pytest.raises(InvalidParameterError):
        NormK(-1.0)
    with pytest.raises(InvalidParameterError):
        lipschitz_bound_Rk(s5_linear, 0.9)


def test_projection(s5_coarse):
    n = s5_coarse.grid.n_steps + 1
    x = np.full(n, 21.0 + 5e-10)
    assert project_to_G(x, s5_coarse).max() == 21.0
    with pytest.raises(DomainError):
        project_to_G(np.full(n, 21.5), s5_coarse)


def test_identical_types_reduce_to_single_type(s5_coarse):
    h = s5_coarse.heater
    two = dataclasses.replace(s5_coarse, dist=TypeDistribution((h, h), (0.3, 0.7)))
    x = random_member_of_G(s5_coarse, np.random.default_rng(0))
    assert np.allclose(m_op(x, two), m_op(x, s5_coarse), atol=1e-12)
    _, per_type, _ = m_op_full(x, two)
    assert len(per_type) == 2


def test_picard_finds_desirable_fixed_point(s5_coarse):
    sol = picard_iterate(s5_coarse, damping=0.3, max_iter=400)
    assert sol.converged
    assert abs(sol.x_bar[-1] - 20.0) < 1e-3
    assert sol.residual_L2 < 1e-6


def test_picard_validates_damping(s5_coarse):
    with pytest.raises(InvalidParameterError):
        picard_iterate(s5_coarse, damping=0.0)


def test_contraction_when_gain_small(s5_coarse):
    sc = s5_coarse
    k = NormK.for_scenario(sc)
    lam_rk = 0.5
    s = sc.with_mu(lam_rk / lipschitz_bound_Rk(sc.with_mu(1.0), k))
    x = random_member_of_G(s, np.random.default_rng(3))
    sol = picard_iterate(s, x, k, damping=1.0, tol=1e-13, max_iter=50)
    h = np.array(sol.history)
    big = h[:-1] > 1e-12
    assert sol.converged
    assert np.all(h[1:][big] / h[:-1][big] <= lam_rk + 0.05)


def test_sup_norm_discontinuity():
    rep = sup_norm_discontinuity_demo()
    assert rep.ok
    assert rep.input_gap[-1] < 1e-3
    assert np.all(rep.output_gap >= 1.9)
    sc = counterexample_scenario()
    assert sc.grid.T_max == pytest.approx(40.0)


def test_norm_L2_of_constant():
    grid = TimeGrid(1e-2, 400)
    assert norm_L2(np.full(401, 3.0), grid) == pytest.approx(6.0)
