import math
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from openasep.core import (
    SignedMassError,
    ValidationError,
    bernoulli_product,
    make_params,
    params_from_uv,
    project,
    tv_distance,
)
from openasep.motzkin import (
    Step,
    basic_weight,
    basic_weights_all,
    catalan,
    current_via_partition,
    enumerate_paths,
    is_bicolored_motzkin,
    partition_counts,
    partition_function,
    projected_stationary_transfer,
    stationary_via_paths,
    step_weight,
    total_weight,
    verify_basic_relations,
)
from openasep.oracle import current_exact, stationary_exact


def brute_basic_weights(p):
    """B(eta) by summing total_weight over enumerated paths."""
    out = defaultdict(float)
    for w in enumerate_paths(p.n):
        out[tuple(int(s.occupied) for s in w)] += total_weight(w, p)
    return out


def test_step_weights_away_from_axis_are_one():
    p = make_params(3, 0, 1, 1)
    for s in Step:
        assert step_weight(s, 2, p) == 1


def test_step_weights_at_axis():
    # q = 0, u = 1, v = 0: the empty flat step carries u, the filled one v
    p = params_from_uv(1, 0.0, 1.0, 0.0)
    assert step_weight(Step.EAST_EMPTY, 0, p) == 2
    assert step_weight(Step.EAST_FILLED, 0, p) == 1
    p = params_from_uv(1, 0.0, 2.0, 3.0)
    assert step_weight(Step.SOUTH, 0, p) == pytest.approx(1 - 6)
    with pytest.raises(ValidationError):
        step_weight(Step.NORTH, -1, p)


def test_single_site_weights_reproduce_two_state_chain():
    # with u = 1, v = 0 (alpha = 1/2, beta = 1) the stationary P(1) is 1/3
    p = params_from_uv(1, 0.0, 1.0, 0.0)
    assert total_weight((Step.EAST_FILLED,), p) == 1
    assert total_weight((Step.EAST_EMPTY,), p) == 2
    assert stationary_via_paths(p).prob("1") == pytest.approx(p.alpha / (p.alpha + p.beta))


def test_total_weight_examples():
    p = make_params(4, 0, 1, 1)
    assert total_weight((), p) == 1
    for n in range(1, 6):
        assert all(total_weight(w, p) == 1 for w in enumerate_paths(n))


def test_path_enumeration_counts():
    for n in range(0, 8):
        paths = list(enumerate_paths(n))
        assert len(paths) == catalan(n + 1)
        assert all(is_bicolored_motzkin(w) for w in paths)


def test_basic_weight_examples():
    p = make_params(2, 0, 1, 1)
    assert basic_weight([1, 0], p) == 2
    for eta in ([0, 0], [0, 1], [1, 1]):
        assert basic_weight(eta, p) == 1
    assert basic_weight([], p) == 1
    p1 = make_params(1, 0, 1, 1)
    assert basic_weight([1], p1) == basic_weight([0], p1) == 1


@pytest.mark.parametrize("q,u,v", [(0.3, 0.4, -0.5), (0.6, 2.0, 0.3), (0.2, 3.0, 1.5), (0.0, 0.5, 0.5)])
def test_basic_weight_dp_matches_enumeration(q, u, v):
    p = params_from_uv(6, q, u, v)
    brute = brute_basic_weights(p)
    for eta, w in brute.items():
        assert basic_weight(list(eta), p) == pytest.approx(w, rel=1e-12, abs=1e-12)


def test_partition_examples():
    p = make_params(3, 0, 1, 1)
    assert partition_function(3, p).value == pytest.approx(14)
    assert partition_function(2, p).value == pytest.approx(5)
    assert partition_function(0, p).value == 1
    assert partition_counts(3)[3] == 14
    js = partition_function(2, p).to_json()
    assert js["mantissa"] * math.exp(js["log_scale"]) == pytest.approx(5)


def test_partition_counts_are_catalan():
    counts = partition_counts(30)
    assert counts == [catalan(n + 1) for n in range(31)]


def test_partition_matches_enumeration():
    p = params_from_uv(7, 0.4, 1.3, -0.2)
    z = sum(total_weight(w, p) for w in enumerate_paths(7))
    assert partition_function(7, p).value == pytest.approx(z, rel=1e-12)


def test_stationary_examples():
    mu = stationary_via_paths(make_params(2, 0, 1, 1))
    assert np.allclose([mu.prob(s) for s in ("00", "01", "10", "11")], [0.2, 0.2, 0.4, 0.2])
    p = params_from_uv(5, 0.3, 2.0, 0.5)
    assert np.allclose(stationary_via_paths(p).weights, bernoulli_product(1 / 3, 5).weights, atol=1e-12)
    p = make_params(5, 0.5, 0.25, 0.25)
    assert np.abs(stationary_via_paths(p).weights - stationary_exact(p).weights).max() <= 1e-10


@given(st.integers(1, 7), st.floats(0, 0.9), st.floats(-0.9, 5), st.floats(-0.9, 5))
@settings(max_examples=40, deadline=None)
def test_paths_equal_oracle(n, q, u, v):
    p = params_from_uv(n, q, u, v)
    assert np.abs(stationary_via_paths(p).weights - stationary_exact(p).weights).max() <= 1e-10


@given(st.integers(2, 9), st.floats(0.05, 0.9), st.floats(-0.9, 5), st.floats(-0.9, 5))
@settings(max_examples=25, deadline=None)
def test_current_is_partition_ratio(n, q, u, v):
    p = params_from_uv(n, q, u, v)
    mu = stationary_exact(p)
    assert current_exact(mu, p, 1) == pytest.approx(current_via_partition(p), rel=1e-10)


def test_height_cap_soundness():
    # u v q**k = 1 with k = 2: paths above height 2 weigh zero
    p = params_from_uv(8, 0.5, 4.0, 1.0)
    capped = basic_weights_all(8, p, h_max=2)
    full = basic_weights_all(8, p, h_max=4)
    assert np.allclose(capped[0] * np.exp(capped[1]), full[0] * np.exp(full[1]), rtol=1e-12)
    for w in enumerate_paths(8):
        h = np.cumsum([s.rise for s in w])
        if h.max() > 2:
            assert total_weight(w, p) == 0


def test_transfer_examples():
    p = make_params(2, 0.3, 0.7, 0.4)
    assert np.allclose(projected_stationary_transfer(p, (1, 2)).weights, stationary_via_paths(p).weights)
    p = make_params(8, 0.5, 1, 1)
    assert np.abs(
        projected_stationary_transfer(p, (4, 5)).weights - project(stationary_exact(p), (4, 5)).weights
    ).max() <= 1e-10


def test_transfer_trend_large_n():
    def tv(n):
        p = params_from_uv(n, 0.5, 0, 0)
        a = n // 2 - 1
        return tv_distance(projected_stationary_transfer(p, (a, a + 3)), bernoulli_product(0.5, 4))

    assert tv(2000) < tv(200)


@pytest.mark.parametrize("q,u,v", [(0.3, 0.2, 0.4), (0.7, 2.0, 0.3), (0.0, 0.1, 3.0)])
def test_transfer_matches_oracle_fan(q, u, v):
    p = params_from_uv(12, q, u, v)
    exact = stationary_exact(p)
    for interval in [(1, 3), (5, 8), (10, 12)]:
        got = projected_stationary_transfer(p, interval).weights
        assert np.abs(got - project(exact, interval).weights).max() <= 1e-10


def test_transfer_signed_mode():
    p = params_from_uv(10, 0.3, 3.0, 2.0)
    with pytest.raises(SignedMassError):
        projected_stationary_transfer(p, (3, 5))
    got = projected_stationary_transfer(p, (3, 5), signed=True).weights
    assert np.abs(got - project(stationary_exact(p), (3, 5)).weights).max() <= 1e-10


def test_transfer_height_cap_validation():
    p = params_from_uv(10, 0.3, 0.2, 0.2)
    with pytest.raises(ValidationError):
        projected_stationary_transfer(p, (3, 5), h_max=2)
    # finite representation lets the cap drop to k
    p = params_from_uv(10, 0.5, 4.0, 1.0)
    got = projected_stationary_transfer(p, (3, 5), h_max=2, signed=True).weights
    assert np.abs(got - project(stationary_exact(p), (3, 5)).weights).max() <= 1e-10


def test_basic_relations_examples():
    assert verify_basic_relations(make_params(6, 0, 1, 1), 6) <= 1e-12
    assert verify_basic_relations(make_params(6, 0.3, 0.5, 0.9), 6) <= 1e-10
    assert basic_weights_all(0, make_params(1, 0.3, 0.5, 0.9))[0][0] == 1


def test_basic_relations_hold_off_product_line():
    assert verify_basic_relations(make_params(6, 0.4, 0.5, 0.9), 8) <= 1e-10
    assert verify_basic_relations(params_from_uv(6, 0.7, 3.0, -0.4), 8) <= 1e-10
