import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from openasep.core import (
    CapacityError,
    ConfigDist,
    ValidationError,
    bernoulli_product,
    make_params,
    params_from_uv,
    point_mass,
    project,
)
from openasep.oracle import (
    build_generator,
    current_exact,
    current_limit,
    stationary_exact,
    uniformization_rate,
)


def _rates(p):
    g = build_generator(p).toarray()
    return {(i, j): g[i, j] for i in range(len(g)) for j in range(len(g)) if i != j and g[i, j] != 0}


def test_generator_n1():
    # state index 0 = empty, 1 = occupied
    assert _rates(make_params(1, 0, 0.3, 0.7)) == {(0, 1): 0.3, (1, 0): 0.7}


def test_generator_n2_tasep():
    idx = lambda s: int(s[0]) + 2 * int(s[1])  # site 1 is the low bit
    expected = {
        (idx("00"), idx("10")): 1.0,
        (idx("10"), idx("01")): 1.0,
        (idx("01"), idx("00")): 1.0,
        (idx("01"), idx("11")): 1.0,
        (idx("11"), idx("10")): 1.0,
    }
    assert _rates(make_params(2, 0, 1, 1)) == expected
    r = _rates(make_params(2, 0.5, 1, 1))
    assert r[(idx("01"), idx("10"))] == 0.5


@given(st.integers(1, 6), st.floats(0, 0.95), st.floats(0.05, 3), st.floats(0.05, 3))
@settings(max_examples=30, deadline=None)
def test_generator_structure(n, q, a, b):
    g = build_generator(make_params(n, q, a, b)).toarray()
    assert np.allclose(g.sum(axis=1), 0, atol=1e-12)
    off = g - np.diag(np.diag(g))
    assert off.min() >= 0
    assert ((off > 0).sum(axis=1) <= n + 1).all()


def test_generator_capacity():
    with pytest.raises(CapacityError):
        build_generator(make_params(21, 0, 1, 1))


def test_stationary_examples():
    assert stationary_exact(make_params(1, 0.2, 0.3, 0.6)).prob("1") == pytest.approx(1 / 3)
    mu = stationary_exact(make_params(2, 0, 1, 1))
    assert np.allclose([mu.prob(s) for s in ("00", "01", "10", "11")], [0.2, 0.2, 0.4, 0.2], atol=1e-14)


@given(st.floats(0, 0.95), st.floats(0.05, 3), st.floats(0.05, 3))
@settings(max_examples=20, deadline=None)
def test_stationary_positive_and_balanced(q, a, b):
    p = make_params(4, q, a, b)
    mu = stationary_exact(p)
    assert mu.weights.min() > 0
    assert np.abs(build_generator(p).T @ mu.weights).max() <= 1e-12


def test_power_iteration_branch_matches_direct():
    # n = 15 is above the direct-solve limit; compare marginals with n = 15 by the
    # product-line closed form
    p = params_from_uv(15, 0.4, 0.5, 2.0)
    mu = stationary_exact(p)
    assert np.allclose(project(mu, (6, 9)).weights, bernoulli_product(1 / 1.5, 4).weights, atol=1e-10)


@pytest.mark.parametrize("u", [0.5, 1.0, 3.0])
def test_product_line(u):
    p = params_from_uv(6, 0.3, u, 1 / u)
    assert np.allclose(stationary_exact(p).weights, bernoulli_product(1 / (1 + u), 6).weights, atol=1e-10)


@given(st.floats(0, 0.9), st.floats(-0.9, 4), st.floats(-0.9, 4))
@settings(max_examples=25, deadline=None)
def test_marginal_sandwich(q, u, v):
    mu = stationary_exact(params_from_uv(5, q, u, v))
    lo = min(1 / (1 + u), v / (1 + v))
    hi = max(1 / (1 + u), v / (1 + v))
    m = mu.site_marginals()
    assert (m >= lo - 1e-10).all() and (m <= hi + 1e-10).all()


def test_current_examples():
    p = make_params(2, 0, 1, 1)
    assert current_exact(stationary_exact(p), p, 1) == pytest.approx(0.4)
    assert current_exact(point_mass("0000"), make_params(4, 0.3, 1, 1), 2) == 0
    with pytest.raises(ValidationError):
        current_exact(stationary_exact(p), p, 2)


@given(st.floats(0, 0.9), st.floats(0.05, 2), st.floats(0.05, 2))
@settings(max_examples=15, deadline=None)
def test_current_independent_of_bond(q, a, b):
    p = make_params(6, q, a, b)
    mu = stationary_exact(p)
    js = [current_exact(mu, p, i) for i in range(1, 6)]
    assert max(js) - min(js) <= 1e-12


def test_current_limit_examples():
    assert current_limit(make_params(3, 0, 0.3, 0.8)) == pytest.approx(0.21)
    assert current_limit(make_params(3, 0, 1, 1)) == pytest.approx(0.25)
    assert current_limit(make_params(3, 0.5, 1, 1)) == pytest.approx(1 / 8)
    assert current_limit(make_params(3, 0, 0.3, 0.3)) is None


def test_uniformization_rate():
    assert uniformization_rate(make_params(4, 0, 1, 1)) == 5
    assert uniformization_rate(make_params(4, 0.5, 1, 1)) == 1 + 1 + 4 * 1.5
