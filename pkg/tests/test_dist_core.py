"""Distribution core: moment oracle, sampling determinism, text round-trips."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammaln

from momsand import dist_core as dc
from momsand.errors import DegenerateZeroError, InvalidOrderError


def riesz_moment_oracle(q: float) -> float:
    # E (1 + cos U)^q = 2^q Gamma(q + 1/2) / (Gamma(q + 1) sqrt(pi))
    return 2.0**q * math.exp(gammaln(q + 0.5) - gammaln(q + 1.0)) / math.sqrt(math.pi)


def test_two_point_moments_closed_form():
    spec = dc.two_point(0.5, 1.5, 0.5)
    est = dc.abs_moment(spec, 1.0)
    assert est.value == pytest.approx(1.0, abs=1e-15)
    assert est.method == dc.FINITE_SUM
    assert est.abs_error == 0.0
    for q in (0.3, 1.0, 2.0, 3.7):
        expected = 0.5 * 0.5**q + 0.5 * 1.5**q
        assert dc.abs_moment(spec, q).value == pytest.approx(expected, rel=1e-15)


def test_finite_moments_match_fsum():
    spec = dc.finitely_supported([(0.2, 0.25), (1.0, 0.5), (3.0, 0.25)])
    for q in (0.5, 1.0, 2.0):
        expected = 0.25 * 0.2**q + 0.5 * 1.0**q + 0.25 * 3.0**q
        assert dc.abs_moment(spec, q).value == pytest.approx(expected, rel=1e-15)


def test_uniform_moments():
    spec = dc.uniform(0.0, 2.0)
    assert dc.abs_moment(spec, 1.0).value == pytest.approx(1.0, abs=1e-12)
    assert dc.abs_moment(spec, 2.0).value == pytest.approx(4.0 / 3.0, rel=1e-12)
    # straddling zero: E|X| on U(-1, 2) is (1/3)(1/2 + 2)
    spec2 = dc.uniform(-1.0, 2.0)
    assert dc.abs_moment(spec2, 1.0).value == pytest.approx(5.0 / 6.0, rel=1e-12)


def test_lognormal_and_exponential_moments():
    spec = dc.log_normal(0.0, 0.5)
    assert dc.abs_moment(spec, 2.0).value == pytest.approx(math.exp(0.5), rel=1e-12)
    spec2 = dc.exponential(2.0)
    expected = math.exp(gammaln(2.5)) / 2.0**1.5
    assert dc.abs_moment(spec2, 1.5).value == pytest.approx(expected, rel=1e-12)


def test_riesz_factor_moments_vs_gamma_oracle():
    spec = dc.riesz_factor()
    for q in (0.15, 0.5, 1.0, 2.0, 2.7, 3.0, 5.0, 7.3):
        est = dc.abs_moment(spec, q)
        assert est.method == dc.QUADRATURE
        assert est.value == pytest.approx(riesz_moment_oracle(q), rel=1e-12)
    assert dc.abs_moment(spec, 1.0).value == pytest.approx(1.0, rel=1e-13)
    assert dc.abs_moment(spec, 2.0).value == pytest.approx(1.5, rel=1e-13)
    assert dc.abs_moment(spec, 3.0).value == pytest.approx(2.5, rel=1e-13)


def test_scaled_copy_moment_scaling():
    base = dc.two_point(0.5, 1.5, 0.5)
    scaled = dc.scaled_copy(base, -2.0)
    for q in (0.5, 1.0, 3.0):
        assert dc.abs_moment(scaled, q).value == pytest.approx(
            2.0**q * dc.abs_moment(base, q).value, rel=1e-15
        )


def test_invalid_order_rejected():
    with pytest.raises(InvalidOrderError):
        dc.abs_moment(dc.two_point(0.5, 1.5, 0.5), 0.0)
    with pytest.raises(InvalidOrderError):
        dc.abs_moment(dc.riesz_factor(), -1.0)


def test_normalize_unit_p_moment():
    spec = dc.two_point(1.0, 3.0, 0.5)
    for p in (0.5, 1.0, 2.0):
        normed, scale = dc.normalize_unit_p_moment(spec, p)
        assert dc.abs_moment(normed, p).value == pytest.approx(1.0, abs=1e-12)
        assert scale == pytest.approx(dc.abs_moment(spec, p).value ** (-1.0 / p))


def test_normalize_degenerate_zero():
    spec = dc.finitely_supported([(0.0, 1.0)])
    with pytest.raises(DegenerateZeroError):
        dc.normalize_unit_p_moment(spec, 1.0)


def test_degenerate_modulus_detection():
    assert dc.is_degenerate_modulus(dc.rademacher_sign(), 1.0)
    assert dc.is_degenerate_modulus(dc.finitely_supported([(1.0, 1.0)]), 2.0)
    assert not dc.is_degenerate_modulus(dc.two_point(0.5, 1.5, 0.5), 1.0)
    assert not dc.is_degenerate_modulus(dc.uniform(0.0, 2.0), 1.0)


def test_quantile_finite_support_masses():
    spec = dc.finitely_supported([(0.5, 0.25), (1.5, 0.5), (2.5, 0.25)])
    u = np.linspace(0.0005, 0.9995, 2000)
    q = dc.quantile(spec, u)
    assert set(np.unique(q)) == {0.5, 1.5, 2.5}
    assert np.mean(q == 0.5) == pytest.approx(0.25, abs=0.01)
    assert np.mean(q == 1.5) == pytest.approx(0.5, abs=0.01)
    # monotone in u
    assert np.all(np.diff(q) >= 0.0)


def test_quantile_families_monotone():
    u = np.linspace(0.001, 0.999, 500)
    for spec in (
        dc.uniform(-1.0, 2.0),
        dc.log_normal(0.1, 0.7),
        dc.exponential(1.5),
        dc.riesz_factor(),
        dc.scaled_copy(dc.exponential(1.0), -1.0),
    ):
        q = dc.quantile(spec, u)
        assert np.all(np.isfinite(q))
        diffs = np.diff(q)
        # negative scale flips the direction, monotone either way
        assert np.all(diffs >= -1e-12) or np.all(diffs <= 1e-12)


def test_riesz_quantile_range():
    u = np.linspace(0.0, 1.0, 101)
    q = dc.quantile(dc.riesz_factor(), u)
    assert q.min() >= 0.0 and q.max() <= 2.0
    assert dc.quantile(dc.riesz_factor(), 0.5) == pytest.approx(1.0, abs=1e-12)


def test_sampling_determinism_and_stream_separation():
    spec = dc.two_point(0.5, 1.5, 0.5)
    src = dc.RandomSource(123, 0)
    a = dc.sample(spec, 1000, src.generator())
    b = dc.sample(spec, 1000, src.generator())
    assert np.array_equal(a, b)
    c = dc.sample(spec, 1000, dc.RandomSource(123, 1).generator())
    assert not np.array_equal(a, c)
    d = dc.sample(spec, 1000, src.generator(block=1))
    assert not np.array_equal(a, d)


def test_sample_products_shape_and_unit_head():
    src = dc.RandomSource(7, 0)
    prods = dc.sample_products(dc.uniform(0.5, 1.5), 4, src)
    assert prods.shape == (5,)
    assert prods[0] == 1.0
    redo = dc.sample_products(dc.uniform(0.5, 1.5), 4, dc.RandomSource(7, 0))
    assert np.array_equal(prods, redo)


def test_expect_kinked_integrand():
    spec = dc.uniform(0.0, 2.0)
    value, err = dc.expect(spec, lambda x: abs(x - 0.5), breaks=[0.5])
    # integral of |x - 1/2| / 2 over [0, 2]
    assert value == pytest.approx((0.125 + 1.125) / 2.0, rel=1e-12)
    assert err < 1e-9


def test_expect_finite_and_scaled():
    spec = dc.two_point(0.5, 1.5, 0.5)
    value, err = dc.expect(spec, lambda x: x * x)
    assert value == pytest.approx(1.25, rel=1e-15)
    assert err == 0.0
    flipped = dc.scaled_copy(spec, -1.0)
    value2, _ = dc.expect(flipped, lambda x: x)
    assert value2 == pytest.approx(-1.0, rel=1e-15)


def test_finite_support_contents():
    vals, probs = dc.finite_support(dc.two_point(0.5, 1.5, 0.25))
    assert list(vals) == [0.5, 1.5]
    assert list(probs) == [0.25, 0.75]
    vals, probs = dc.finite_support(dc.rademacher_sign())
    assert list(vals) == [-1.0, 1.0]
    assert list(probs) == [0.5, 0.5]
    vals, _ = dc.finite_support(dc.scaled_copy(dc.two_point(0.5, 1.5, 0.5), 2.0))
    assert list(vals) == [1.0, 3.0]
    assert dc.finite_support(dc.uniform(0.0, 1.0)) is None


def test_spec_text_round_trips():
    specs = [
        dc.two_point(0.5, 1.5, 0.5),
        dc.finitely_supported([(0.2, 0.25), (1.0, 0.5), (3.0, 0.25)]),
        dc.uniform(-1.0, 2.0),
        dc.log_normal(0.1, 0.7),
        dc.exponential(2.5),
        dc.riesz_factor(),
        dc.rademacher_sign(),
        dc.scaled_copy(dc.two_point(0.5, 1.5, 0.5), 0.8164965809277261),
    ]
    for spec in specs:
        text = dc.spec_to_text(spec)
        assert dc.parse_spec(text) == spec


def test_parse_spec_errors():
    for bad in (
        "nosuchfamily:a=1",
        "twopoint:a=0.5",
        "twopoint:a=0.5,b=1.5,pa=1.5",
        "uniform:lo=2,hi=1",
        "finite:atoms=1@0.5|2@0.6",
        "garbage",
    ):
        with pytest.raises(ValueError):
            dc.parse_spec(bad)


@settings(max_examples=50, deadline=None)
@given(
    a=st.floats(0.05, 0.95),
    b=st.floats(1.05, 8.0),
    pa=st.floats(0.05, 0.95),
)
def test_two_point_round_trip_property(a, b, pa):
    spec = dc.two_point(a, b, pa)
    assert dc.parse_spec(dc.spec_to_text(spec)) == spec
    assert dc.abs_moment(spec, 1.0).value == pytest.approx(
        a * pa + b * (1.0 - pa), rel=1e-14
    )


def test_generator_block_determinism():
    src = dc.RandomSource(99, 5)
    g1 = src.generator(block=3).random(8)
    g2 = src.generator(block=3).random(8)
    g3 = src.generator(block=4).random(8)
    assert np.array_equal(g1, g2)
    assert not np.array_equal(g1, g3)
    child = src.child(2)
    assert child.seed == 99 and child.stream_id == 7
