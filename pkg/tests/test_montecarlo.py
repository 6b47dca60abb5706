"""Sum-of-products moments: enumeration oracles, MC agreement, sandwich verdicts."""

import math

import numpy as np
import pytest

from momsand import dist_core as dc
from momsand import montecarlo as mc
from momsand.assumptions import fit_large_p, fit_small_p
from momsand.constants import optimize_large_p, optimize_small_p
from momsand.errors import EnumerationTooLargeError

TWO_POINT = dc.two_point(0.5, 1.5, 0.5)
LARGE_SPEC = dc.two_point(0.6, math.sqrt(1.64), 0.5)


def src(seed=0, stream=5):
    return dc.RandomSource(seed=seed, stream_id=stream)


def test_brute_force_anchor_all_ones():
    coeffs = mc.coefficient_set([1.0, 1.0, 1.0])
    out = mc.brute_force_lhs(TWO_POINT, coeffs, 1.0)
    assert out.exact
    assert out.mean == pytest.approx(3.0, abs=1e-12)


def test_brute_force_anchor_alternating():
    coeffs = mc.coefficient_set([1.0, -1.0, 1.0])
    out = mc.brute_force_lhs(TWO_POINT, coeffs, 1.0)
    assert out.mean == pytest.approx(1.0, abs=1e-12)


def test_brute_force_single_coefficient():
    coeffs = mc.coefficient_set([-2.0])
    out = mc.brute_force_lhs(TWO_POINT, coeffs, 1.7)
    assert out.mean == pytest.approx(2.0**1.7, rel=1e-14)


def test_brute_force_manual_two_term():
    # v = (1, 1), X in {a, b}: E|1 + X| = (|1+a| + |1+b|) / 2
    coeffs = mc.coefficient_set([1.0, 1.0])
    out = mc.brute_force_lhs(TWO_POINT, coeffs, 1.0)
    assert out.mean == pytest.approx(0.5 * (1.5 + 2.5), abs=1e-14)


def test_enumeration_cap_raises():
    atoms = [(float(i), 0.1) for i in range(10)]
    spec = dc.finitely_supported(atoms)
    coeffs = mc.coefficient_set([1.0] * 9)
    with pytest.raises(EnumerationTooLargeError):
        mc.brute_force_lhs(spec, coeffs, 1.0)


def test_enumerated_distribution_probabilities():
    coeffs = mc.coefficient_set([1.0, -1.0, 0.5])
    values, probs = mc.enumerate_lhs_distribution(TWO_POINT, coeffs, 1.0)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(values >= 0.0)
    values2, probs2 = mc.enumerate_lhs_distribution(TWO_POINT, coeffs, 1.0)
    assert np.array_equal(values, values2)
    assert np.array_equal(probs, probs2)


def test_estimate_matches_enumeration():
    coeffs = mc.coefficient_set([1.0, 0.5, -0.25, 1.0])
    exact = mc.brute_force_lhs(TWO_POINT, coeffs, 0.8).mean
    misses = 0
    for seed in range(10):
        est = mc.estimate_lhs(TWO_POINT, coeffs, 0.8, reps=20_000, src=src(seed))
        assert est.replications == 20_000
        assert not est.exact
        if abs(est.mean - exact) > 4.0 * est.std_error:
            misses += 1
    assert misses <= 1


def test_estimate_zero_terms_is_exact():
    # single coefficient, no random factors: deterministic value 3
    est = mc.estimate_lhs(TWO_POINT, mc.coefficient_set([3.0]), 1.0, reps=1000, src=src())
    assert est.exact
    assert est.replications == 0
    assert est.mean == pytest.approx(3.0)
    assert est.std_error == 0.0


def test_estimate_rejects_tiny_runs():
    coeffs = mc.coefficient_set([1.0, 1.0])
    with pytest.raises(ValueError):
        mc.estimate_lhs(TWO_POINT, coeffs, 1.0, reps=10, src=src())


def test_estimate_determinism_same_source():
    coeffs = mc.coefficient_set([1.0, -1.0, 2.0])
    a = mc.estimate_lhs(TWO_POINT, coeffs, 1.3, reps=8192, src=src(11))
    b = mc.estimate_lhs(TWO_POINT, coeffs, 1.3, reps=8192, src=src(11))
    c = mc.estimate_lhs(TWO_POINT, coeffs, 1.3, reps=8192, src=src(12))
    assert a == b
    assert a.mean != c.mean


def test_estimate_thread_count_invariance(monkeypatch):
    coeffs = mc.coefficient_set([1.0, 0.5, 0.5, -1.0])
    monkeypatch.setenv("MOMSAND_THREADS", "1")
    serial = mc.estimate_lhs(TWO_POINT, coeffs, 2.0, reps=20_000, src=src(3))
    monkeypatch.setenv("MOMSAND_THREADS", "4")
    threaded = mc.estimate_lhs(TWO_POINT, coeffs, 2.0, reps=20_000, src=src(3))
    assert serial.mean == threaded.mean
    assert serial.std_error == threaded.std_error


def test_scale_equivariance():
    base = mc.coefficient_set([1.0, -0.5, 0.25])
    scaled = mc.coefficient_set([4.0, -2.0, 1.0])
    for p in (0.5, 1.0, 2.0):
        lhs_base = mc.brute_force_lhs(TWO_POINT, base, p).mean
        lhs_scaled = mc.brute_force_lhs(TWO_POINT, scaled, p).mean
        assert lhs_scaled == pytest.approx(4.0**p * lhs_base, rel=1e-12)
        rhs_base = mc.rhs_sum(TWO_POINT, base, p)
        rhs_scaled = mc.rhs_sum(TWO_POINT, scaled, p)
        assert lhs_scaled / rhs_scaled == pytest.approx(lhs_base / rhs_base, rel=1e-12)


def test_norm_ordering_vector_coefficients():
    vectors = ((1.0, -2.0, 0.5), (0.0, 1.0, 1.0), (3.0, 0.0, 0.0))
    by_norm = {}
    for norm in mc.NORM_KINDS:
        coeffs = mc.CoefficientSet(vectors=vectors, norm=norm)
        by_norm[norm] = mc.brute_force_lhs(TWO_POINT, coeffs, 1.5).mean
    assert by_norm["sup"] <= by_norm["l2"] + 1e-12
    assert by_norm["l2"] <= by_norm["l1"] + 1e-12


def test_small_p_upper_bound_holds_exactly():
    rng = np.random.default_rng(404)
    for _ in range(25):
        n = int(rng.integers(1, 7))
        vec = rng.standard_normal(n) * rng.uniform(0.5, 2.0)
        coeffs = mc.coefficient_set([float(v) for v in vec])
        p = float(rng.choice([0.3, 0.5, 0.8, 1.0]))
        lhs = mc.brute_force_lhs(TWO_POINT, coeffs, p).mean
        rhs = mc.rhs_sum(TWO_POINT, coeffs, p)
        assert lhs <= rhs + 1e-12 * max(rhs, 1.0)


def test_rhs_sum_anchors():
    coeffs = mc.coefficient_set([1.0, 1.0, 1.0])
    # normalized spec: E|X| = 1, so each term contributes 1
    assert mc.rhs_sum(TWO_POINT, coeffs, 1.0) == pytest.approx(3.0, abs=1e-12)
    wide = dc.two_point(1.0, 3.0, 0.5)
    pair = mc.coefficient_set([1.0, 1.0])
    assert mc.rhs_sum(wide, pair, 1.0) == pytest.approx(1.0 + 2.0, abs=1e-12)
    assert mc.rhs_sum(TWO_POINT, mc.coefficient_set([0.0]), 1.0) == 0.0


def test_run_sandwich_alternating_passes():
    bundle = optimize_small_p(TWO_POINT, 1.0)
    coeffs = mc.coefficient_set([1.0, -1.0, 1.0])
    report = mc.run_sandwich(TWO_POINT, 1.0, coeffs, bundle, reps=10_000, src=src())
    assert report.verdict == mc.PASS
    assert report.lhs.exact
    assert report.ratio == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert report.lhs.mean >= bundle.lower_c * report.rhs_sum


def test_run_sandwich_regime_mismatch():
    bundle = optimize_small_p(TWO_POINT, 1.0)
    coeffs = mc.coefficient_set([1.0])
    with pytest.raises(ValueError):
        mc.run_sandwich(TWO_POINT, 2.0, coeffs, bundle, reps=1000, src=src())


def test_run_sandwich_single_term_ratio_one():
    bundle = optimize_small_p(TWO_POINT, 1.0)
    coeffs = mc.coefficient_set([2.0])
    report = mc.run_sandwich(TWO_POINT, 1.0, coeffs, bundle, reps=1000, src=src())
    assert report.verdict == mc.PASS
    assert report.ratio == pytest.approx(1.0, rel=1e-12)


def test_run_sandwich_nonnegative_p1_is_tight():
    bundle = optimize_small_p(TWO_POINT, 1.0)
    coeffs = mc.coefficient_set([0.3, 1.2, 0.7, 2.0])
    report = mc.run_sandwich(TWO_POINT, 1.0, coeffs, bundle, reps=1000, src=src())
    # nonnegative summands at p = 1: expectation is additive, ratio exactly 1
    assert report.ratio == pytest.approx(1.0, rel=1e-13)
    assert report.verdict == mc.PASS


def test_run_sandwich_large_p_estimate_path():
    bundle = optimize_large_p(LARGE_SPEC, 2.0)
    coeffs = mc.coefficient_set([1.0, -1.0, 0.5, 0.25])
    report = mc.run_sandwich(LARGE_SPEC, 2.0, coeffs, bundle, reps=5000, src=src(2))
    assert report.lhs.exact  # two-point, 2^4 outcomes: enumerated, not sampled
    assert report.verdict == mc.PASS


def test_khintchine_small_case_exact():
    out = mc.khintchine_counterexample(2, 4.0, reps=10, src=src())
    # (e1 + e1 e2)^4: values 0 or 16 with equal chance
    assert out["lhs"].exact
    assert out["lhs"].mean == pytest.approx(8.0, abs=1e-12)
    assert out["rhs_sum"] == pytest.approx(2.0, abs=1e-12)
    assert out["ratio"] == pytest.approx(4.0, abs=1e-12)


def test_khintchine_p2_no_growth():
    for n in (2, 5, 10):
        out = mc.khintchine_counterexample(n, 2.0, reps=10, src=src())
        assert out["ratio"] == pytest.approx(1.0, abs=1e-12)


def test_khintchine_fourth_moment_growth():
    out = mc.khintchine_counterexample(100, 4.0, reps=200_000, src=src(7))
    exact = 3 * 100**2 - 2 * 100
    est = out["lhs"]
    assert not est.exact
    assert est.std_error > 0
    assert abs(est.mean - exact) <= 4.0 * est.std_error
    assert out["ratio"] > 250.0


def test_csv_dump(tmp_path):
    coeffs = mc.coefficient_set([1.0, -1.0])
    path = tmp_path / "draws.csv"
    est = mc.estimate_lhs(TWO_POINT, coeffs, 1.0, reps=2048, src=src(), csv_path=str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "rep,value"
    assert len(lines) == 2049
    values = np.array([float(line.split(",")[1]) for line in lines[1:]])
    assert values.mean() == pytest.approx(est.mean, rel=1e-12)


def test_tail_small_p_certified_spec():
    cert = fit_small_p(TWO_POINT, 1.0)
    coeffs = mc.coefficient_set([1.0, 0.5, -0.5, 0.25])
    rows = mc.tail_check_small_p(TWO_POINT, coeffs, 1.0, cert.lam, (1.0, 2.0, 4.0, 8.0))
    assert len(rows) == 4
    assert all(row["ok"] for row in rows)
    assert all(row["tail_prob"] <= row["bound"] + 1e-12 for row in rows)
    bounds = [row["bound"] for row in rows]
    assert bounds == sorted(bounds, reverse=True)


def test_tail_large_p_certified_spec():
    cert = fit_large_p(LARGE_SPEC, 2.0)
    coeffs = mc.coefficient_set([1.0, -1.0, 0.5])
    rows = mc.tail_check_large_p(
        LARGE_SPEC, coeffs, 2.0, cert.q, cert.lam, (1.0, 2.0, 4.0, 8.0)
    )
    assert len(rows) == 4
    assert all(row["ok"] for row in rows)
    bounds = [row["bound"] for row in rows]
    assert bounds == sorted(bounds, reverse=True)
