import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cttmfg.errors import InvalidParameterError
from cttmfg.population import (
    Agent, ComfortBand, GFunction, HeaterType, InitialDistribution, TypeDistribution, derive_rates, drift,
    sample_population, u_free,
)
from cttmfg.scenario import reference_heater
from cttmfg.seeding import agent_rng, derive_rng, segment_seed, thread_cap

import oracles


def test_derived_rates_match_exact_fractions():
    a, b = oracles.rates_exact()
    h = reference_heater()
    assert h.a == pytest.approx(float(a), rel=1e-15)
    assert h.b == pytest.approx(float(b), rel=1e-15)
    assert h.a == pytest.approx(0.473684, abs=1e-6)
    assert h.b == pytest.approx(1.754386, abs=1e-6)


@pytest.mark.parametrize("kw", [dict(C_a=0.0, U_a=0.27), dict(C_a=0.57, U_a=-1.0)])
def test_rates_reject_nonpositive(kw):
    with pytest.raises(InvalidParameterError):
        derive_rates(x_out=-10.0, **kw)


def test_heater_validation():
    with pytest.raises(InvalidParameterError):
        HeaterType(a=1.0, b=1.0, x_out=0.0, sigma=-0.1)


def test_weights_must_sum_to_one():
    h = reference_heater()
    with pytest.raises(InvalidParameterError):
        TypeDistribution((h, h), (0.5, 0.4))
    TypeDistribution((h, h), (0.5, 0.5))


def test_band_picks_boundary_from_direction():
    assert ComfortBand.for_target(17, 25, 20, 21).z == 17
    assert ComfortBand.for_target(17, 25, 22, 21).z == 25
    with pytest.raises(InvalidParameterError):
        ComfortBand(25, 17, 17, 20)


def test_band_rejects_target_outside_range():
    band = ComfortBand(17, 25, 17, 22)
    with pytest.raises(InvalidParameterError):
        band.check_initial_mean(21)


def test_free_control_is_equilibrium():
    h = reference_heater()
    ag = Agent(0, 21.3)
    assert drift(ag.x0, 0.0, ag, h) == pytest.approx(0.0, abs=1e-12)
    assert u_free(ag, h) == pytest.approx(h.a * 31.3 / h.b)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 5000))
def test_linear_g_monotone_and_odd(x1, x2, mu):
    g = GFunction.linear(mu)
    assert g(-x1) == pytest.approx(-g(x1))
    if x1 <= x2:
        assert g(x1) <= g(x2)


@given(st.floats(-6, 3), st.floats(-6, 3))
def test_exp_g_clamped_monotone(x1, x2):
    g = GFunction.exp_clamped(218.0, 3.0, 17.0, 20.0, 21.0)
    lo, hi = g(np.array([-100.0, 100.0]))
    assert lo == pytest.approx(218.0 * math.expm1(-9.0))
    assert hi == pytest.approx(218.0 * math.expm1(3.0))
    if x1 <= x2:
        assert g(x1) <= g(x2)
    assert abs(g(x1) - g(x2)) <= g.lipschitz() * abs(x1 - x2) + 1e-9


def test_g_rejects_bad_parameters():
    with pytest.raises(InvalidParameterError):
        GFunction.linear(0.0)
    with pytest.raises(InvalidParameterError):
        GFunction("exp", 1.0, 3.0)


def test_sample_population_shapes_and_determinism():
    h = reference_heater()
    dist = TypeDistribution((h, h), (0.25, 0.75))
    p1 = sample_population(dist, InitialDistribution(21, 1), 4000, 5)
    p2 = sample_population(dist, InitialDistribution(21, 1), 4000, 5)
    assert np.array_equal(p1.x0, p2.x0) and np.array_equal(p1.type_index, p2.type_index)
    assert p1.type_frequencies()[1] == pytest.approx(0.75, abs=0.03)
    assert p1.x0.mean() == pytest.approx(21, abs=0.06)
    assert p1[3].x0 == p1.x0[3]
    with pytest.raises(InvalidParameterError):
        sample_population(dist, InitialDistribution(21, 1), 0, 5)


@given(st.integers(0, 2**63), st.integers(0, 500))
def test_agent_stream_depends_only_on_seed_and_index(seed, i):
    a = agent_rng(seed, "noise", i).standard_normal(4)
    b = agent_rng(seed, "noise", i).standard_normal(4)
    c = agent_rng(seed, "noise", i + 1).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_named_streams_differ():
    assert derive_rng(1, "population").random() != derive_rng(1, "other").random()
    assert segment_seed(9, 0) == 9 and segment_seed(9, 1) != segment_seed(9, 2)


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("MFG_CTT_THREADS", "3")
    assert thread_cap() == 3
    monkeypatch.setenv("MFG_CTT_THREADS", "nonsense")
    assert thread_cap(2) == 2
