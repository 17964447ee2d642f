import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from openasep.core import ValidationError, make_params, project, tv_distance
from openasep.oracle import stationary_exact
from openasep.simulator import (
    coupled_simulate,
    empirical_projected,
    endpoint_law,
    simulate,
    simulate_trace,
    stream,
    time_average_occupation,
)


def test_zero_time_keeps_init():
    p = make_params(4, 0.3, 0.5, 0.5)
    s = simulate(p, "1010", 0.0, seed=1)
    assert s.config.tolist() == [1, 0, 1, 0] and s.events == 0


def test_determinism():
    p = make_params(6, 0.3, 0.7, 0.4)
    a = simulate(p, "000000", 50.0, seed=9)
    b = simulate(p, "000000", 50.0, seed=9)
    assert np.array_equal(a.config, b.config) and a.events == b.events
    c = simulate(p, "000000", 50.0, seed=9, replica=1)
    assert c.events != a.events or not np.array_equal(c.config, a.config)


def test_streams_are_keyed_by_seed_and_replica():
    assert stream(1, 2).random() == stream(1, 2).random()
    assert stream(1, 2).random() != stream(1, 3).random()


def test_two_state_time_average():
    p = make_params(1, 0, 1, 1)
    avg = time_average_occupation(p, "0", 1e4, seed=3)
    assert avg[0] == pytest.approx(0.5, abs=0.02)


def test_validation():
    p = make_params(3, 0.3, 0.5, 0.5)
    with pytest.raises(ValidationError):
        simulate(p, "01", 1.0, seed=0)
    with pytest.raises(ValidationError):
        simulate(p, "000", -1.0, seed=0)
    with pytest.raises(ValidationError) as err:
        empirical_projected(p, (1, 2), 10, burn_in=1.0, gap=0.0)
    assert err.value.field == "gap"


def test_trace_format_and_consistency():
    p = make_params(4, 0.5, 0.6, 0.8)
    state, csv = simulate_trace(p, "0000", 30.0, seed=4)
    lines = csv.splitlines()
    assert lines[0] == "time,site,new_value"
    cfg = [0, 0, 0, 0]
    last = 0.0
    for row in lines[1:]:
        t, site, val = row.split(",")
        assert float(t) >= last
        last = float(t)
        cfg[int(site) - 1] = int(val)
    assert cfg == state.config.tolist()
    assert state.events == simulate(p, "0000", 30.0, seed=4).events


def test_single_site_empirical():
    p = make_params(1, 0, 0.3, 0.9)
    emp = empirical_projected(p, (1, 1), 40_000, burn_in=10.0, gap=5.0, seed=5)
    target = 0.3 / 1.2
    assert abs(emp.prob("1") - target) <= 4 * math.sqrt(target * (1 - target) / 40_000)


def test_empirical_matches_oracle_and_improves():
    p = make_params(6, 0, 1, 1)
    exact = project(stationary_exact(p), (1, 6))
    tvs = [
        tv_distance(empirical_projected(p, (1, 6), m, burn_in=500.0, seed=11), exact)
        for m in (6_250, 25_000, 100_000)
    ]
    assert tvs[-1] <= 0.02
    assert tvs[0] > tvs[-1]


def test_endpoint_law_near_stationary():
    p = make_params(3, 0.2, 0.8, 0.6)
    law = endpoint_law(p, "000", 40.0, 20_000, seed=2)
    assert tv_distance(law, stationary_exact(p)) <= 0.03


@given(st.integers(2, 8), st.floats(0, 1), st.floats(0.1, 2), st.floats(0.1, 2), st.integers(0, 2**31))
@settings(max_examples=25, deadline=None)
def test_event_count_bound(n, q, a, b, seed):
    t = 20.0
    p = make_params(n, q, a, b)
    counts = [simulate(p, np.zeros(n), t, seed, r).events for r in range(20)]
    bound = t * (n + 1) * max(1.0, q, a, b) * 2
    assert np.mean(counts) <= bound + 5 * math.sqrt(bound / 20)


def test_identical_parameters_give_identical_trajectories():
    p = make_params(7, 0.4, 0.6, 0.3)
    tr = coupled_simulate(p, p, 100.0, seed=1, init_lower="0101010", init_upper="0101010")
    assert np.array_equal(tr.lower, tr.upper)
    assert tr.violations == 0 and tr.ordered.all()


def test_no_extra_clocks_when_parameters_equal():
    # the extra clocks carry zero rate, so the upper chain is just a copy
    p = make_params(5, 0.3, 0.5, 0.5)
    for r in range(20):
        tr = coupled_simulate(p, p, 50.0, seed=2, replica=r)
        assert np.array_equal(tr.lower, tr.upper)


def test_coupled_marginals_match_single_systems():
    lo, up = make_params(2, 0.5, 0.3, 0.9), make_params(2, 0.5, 0.6, 0.4)
    m_lo = np.zeros(2)
    m_up = np.zeros(2)
    reps = 4000
    for r in range(reps):
        tr = coupled_simulate(lo, up, 30.0, seed=6, replica=r)
        m_lo += tr.lower
        m_up += tr.upper
    assert np.allclose(m_lo / reps, stationary_exact(lo).site_marginals(), atol=0.035)
    assert np.allclose(m_up / reps, stationary_exact(up).site_marginals(), atol=0.035)


def test_order_preserved():
    lo, up = make_params(8, 0.4, 0.3, 0.9), make_params(8, 0.4, 0.7, 0.2)
    for r in range(100):
        tr = coupled_simulate(lo, up, 1e9, seed=8, init_lower="00000000", init_upper="10101010",
                              max_events=1000, replica=r)
        assert tr.events == 1000 and tr.violations == 0


def test_unordered_parameters_rejected():
    lo, up = make_params(3, 0.4, 0.7, 0.2), make_params(3, 0.4, 0.3, 0.9)
    with pytest.raises(ValidationError, match="unordered"):
        coupled_simulate(lo, up, 1.0, seed=0)
