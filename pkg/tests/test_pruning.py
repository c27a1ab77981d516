import math

import numpy as np
import pytest

from jacspec import pruning
from jacspec.errors import ConfigError, DimensionMismatch, EmptyMask
from jacspec.randomness import derive_stream, sample_gaussians


def _erf_series(x):
    # Maclaurin series, converges fast for |x| <= 2; independent of math.erf
    total = 0.0
    term = x
    k = 0
    while abs(term) > 1e-18:
        total += term / (2 * k + 1)
        k += 1
        term *= -x * x / k
    return 2.0 / math.sqrt(math.pi) * total


def test_erf_against_series_oracle():
    for x in (0.1, 0.5, 1.0, 1.7, -0.8):
        assert pruning.erf(x) == pytest.approx(_erf_series(x), abs=1e-14)
    assert pruning.erf(1.0) == pytest.approx(0.8427007929497149, abs=1e-15)


def test_erf_inv_roundtrip():
    for x in np.linspace(-3.0, 3.0, 601):
        y = pruning.erf(float(x))
        assert abs(pruning.erf_inv(y) - x) <= 1e-10


def test_erf_inv_against_bisection_oracle():
    def bisect(y, lo=-6.0, hi=6.0):
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if _erf_series(mid) < y:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    assert pruning.erf_inv(0.5) == pytest.approx(bisect(0.5), abs=1e-12)
    assert pruning.erf_inv(0.5) == pytest.approx(0.4769362762044699, abs=1e-13)
    assert pruning.erf_inv(-0.9) == pytest.approx(bisect(-0.9), abs=1e-12)
    assert pruning.erf_inv(0.0) == 0.0


def test_erf_inv_domain():
    with pytest.raises(ConfigError):
        pruning.erf_inv(1.0)
    with pytest.raises(ConfigError):
        pruning.erf_inv(-1.5)


def _weights(seed, n, variance=None):
    variance = 2.0 / n if variance is None else variance
    return sample_gaussians(derive_stream(seed, "tw", n), n * n, variance).reshape(n, n)


def test_random_mask_kept_count_and_determinism():
    n, s = 64, 0.25
    m1 = pruning.random_mask(derive_stream(1, "rm"), n, s)
    m2 = pruning.random_mask(derive_stream(1, "rm"), n, s)
    assert np.array_equal(m1.matrix, m2.matrix)
    mean, sd = (1 - s) * n * n, math.sqrt(n * n * s * (1 - s))
    assert abs(m1.kept_count - mean) < 5 * sd
    assert m1.realized_sparsity == pytest.approx(s, abs=5 * sd / (n * n))
    assert m1.scale == 1.0
    assert set(np.unique(m1.matrix)) <= {0.0, 1.0}


def test_random_mask_analytic_scale():
    m = pruning.random_mask(derive_stream(2, "rm"), 32, 0.75, scaling="analytic")
    assert m.scale == pytest.approx(2.0, rel=1e-15)
    assert set(np.unique(m.matrix)) <= {0.0, 2.0}


def test_random_factor_scaling_uses_realized_sparsity():
    m = pruning.random_mask(derive_stream(3, "rm"), 32, 0.5, scaling="random_factor")
    realized = 1.0 - m.kept_count / 1024
    assert m.scale == pytest.approx(1.0 / math.sqrt(1.0 - realized), rel=1e-12)


def test_threshold_mask_is_strict():
    w = np.array([[0.5, -0.5], [0.25, -1.0]])
    m = pruning.magnitude_mask_threshold(w, 2, 0.5)
    # entries at exactly |w| = t are dropped
    np.testing.assert_array_equal(m.matrix, [[0.0, 0.0], [0.0, 1.0]])
    assert m.kept_count == 1


def test_top_r_keeps_exact_count_and_breaks_ties_row_major():
    w = np.array([[0.5, -0.5, 0.1], [0.5, 0.2, -0.5], [0.3, 0.5, 0.05]])
    m = pruning.magnitude_mask_top_r(w, 3, 3)
    assert m.kept_count == 3
    # five entries tie at |w| = 0.5; the earlier row-major positions win
    oracle = sorted(range(9), key=lambda i: (-abs(w.ravel()[i]), i))[:3]
    expected = np.zeros(9)
    expected[oracle] = 1.0
    np.testing.assert_array_equal(m.matrix.ravel(), expected)


def test_top_r_matches_sorted_oracle_on_random_weights():
    n, r = 16, 40
    w = _weights(4, n)
    m = pruning.magnitude_mask_top_r(w, n, r)
    oracle = sorted(range(n * n), key=lambda i: (-abs(w.ravel()[i]), i))[:r]
    expected = np.zeros(n * n)
    expected[oracle] = 1.0
    np.testing.assert_array_equal(m.matrix.ravel(), expected)
    assert m.t == pytest.approx(pruning.top_r_threshold(n, r))
    assert m.r == r


def test_calibrated_scale_closed_form():
    # two kept entries with w^2 summing to 8 at n = 4: scale = sqrt(2 * 4 / 8) = 1
    w = np.zeros((4, 4))
    w[0, 0] = 2.0
    w[1, 1] = -2.0
    pattern = (w != 0).astype(float)
    assert pruning.calibrated_scale(w, pattern, 4) == pytest.approx(1.0, rel=1e-15)
    w[1, 1] = -4.0  # sum 20 -> sqrt(8/20)
    assert pruning.calibrated_scale(w, pattern, 4) == pytest.approx(math.sqrt(8.0 / 20.0), rel=1e-15)


def test_calibrated_matches_analytic_for_random_masks():
    # under random pruning the kept entries are an unbiased sample, so the
    # calibrated factor concentrates on (1 - s)^(-1/2)
    n, s = 1024, 0.5
    w = _weights(5, n)
    m = pruning.random_mask(derive_stream(5, "rm"), n, s, scaling="calibrated", weights=w)
    assert m.scale == pytest.approx(1.0 / math.sqrt(1.0 - s), rel=0.02)


def test_calibrated_second_moment_is_exactly_one():
    n = 64
    w = _weights(6, n)
    m = pruning.magnitude_mask_top_r(w, n, 500, scaling="calibrated")
    pattern = (m.matrix > 0).astype(float)
    stat = pruning.second_moment_average(w, pattern, m.scale)
    assert stat == pytest.approx(1.0, rel=1e-12)


def test_magnitude_calibrated_scale_below_random_analytic():
    # magnitude pruning keeps the big entries, so less upscaling is needed
    n = 256
    w = _weights(7, n)
    r = n * n // 8
    m = pruning.magnitude_mask_top_r(w, n, r, scaling="calibrated")
    random_analytic = 1.0 / math.sqrt(r / (n * n))
    assert m.scale < 0.75 * random_analytic


def test_magnitude_scale_analytic_formula():
    t, n = 0.12, 256
    b2 = math.sqrt(2 * math.pi) * math.exp(n * t * t / 2.0) / (t * n ** 1.5)
    assert pruning.magnitude_scale_analytic(t, n) == pytest.approx(math.sqrt(b2), rel=1e-12)


def test_threshold_validity_warnings_fire_past_the_bound():
    n = 256
    ok_t = math.sqrt((4 * math.log(n) - 7 * math.log(math.log(n))) / n) * 0.9
    bad_t = ok_t / 0.9 * 1.1
    assert pruning.threshold_validity_warnings(ok_t, n) == []
    assert pruning.threshold_validity_warnings(bad_t, n)


def test_expected_kept_fraction_against_monte_carlo():
    n, t = 100, 0.1
    w = _weights(8, n)
    mc = float(np.mean(np.abs(w) > t))
    assert pruning.expected_kept_fraction(t, n) == pytest.approx(mc, abs=0.02)


def test_top_r_threshold_median_example():
    # keeping half the entries puts the threshold at the |N(0, 2/n)| median
    n = 4
    t = pruning.top_r_threshold(n, 8)  # r/(n^2+1) close to 1/2
    assert t == pytest.approx((2.0 / math.sqrt(n)) * pruning.erf_inv(1.0 - 8.0 / 17.0), rel=1e-12)


def test_log_power_rank():
    assert pruning.log_power_rank(100, 2.0) == 2121  # ceil(100 * ln(100)^2)
    assert pruning.log_power_rank(2, 8.0) == 1  # clipped from below
    assert pruning.log_power_rank(4, 20.0) == 16  # clipped to n^2


def test_empty_mask_raises():
    w = _weights(9, 8)
    with pytest.raises(EmptyMask):
        pruning.magnitude_mask_threshold(w, 8, float(np.abs(w).max()) + 1.0)


def test_mask_validation_errors():
    with pytest.raises(ConfigError):
        pruning.random_mask(derive_stream(0, "rm"), 8, 1.0)
    with pytest.raises(ConfigError):
        pruning.random_mask(derive_stream(0, "rm"), 8, 0.5, scaling="typo")
    with pytest.raises(ConfigError):
        pruning.random_mask(derive_stream(0, "rm"), 8, 0.5, scaling="calibrated")
    with pytest.raises(ConfigError):
        pruning.magnitude_mask_threshold(_weights(0, 8), 8, -0.1)
    with pytest.raises(ConfigError):
        pruning.magnitude_mask_top_r(_weights(0, 8), 8, 0)
    with pytest.raises(DimensionMismatch):
        pruning.magnitude_mask_top_r(_weights(0, 8), 4, 2)


def test_edge_of_stability_margin_orders_regimes():
    n = 256
    assert pruning.edge_of_stability_margin(n, 0.5) > 30 * pruning.edge_of_stability_margin(n, 0.99)
    assert pruning.edge_of_stability_margin(n, 0.99) == pytest.approx(2.56 / math.log(256) ** 4, rel=1e-12)


def test_heuristic_breakdown_density():
    assert pruning.heuristic_breakdown_density(1000) == pytest.approx(0.003, rel=1e-12)
    assert pruning.heuristic_breakdown_density(256) == pytest.approx(math.log10(256) / 256, rel=1e-12)


def test_scale_report_fields():
    n = 128
    w = _weights(10, n)
    m = pruning.magnitude_mask_top_r(w, n, n * n // 4)
    rep = pruning.scale_report(w, m, n)
    assert rep.method == "magnitude_top_r"
    assert rep.ratio == pytest.approx(rep.analytic / rep.calibrated, rel=1e-15)
    assert rep.calibrated > 0
    # at the analytic scale the second-moment statistic reflects the overshoot
    assert rep.second_moment_stat == pytest.approx(
        pruning.second_moment_average(w, (m.matrix > 0).astype(float), rep.analytic), rel=1e-15
    )


def test_condition_checker_keep_all():
    n, mc = 64, 120
    stream = derive_stream(11, "cond")
    rep = pruning.check_stability_conditions(
        lambda st, w: np.ones((n, n)),
        lambda st: sample_gaussians(st, n * n, 2.0 / n).reshape(n, n),
        n, mc, stream,
    )
    assert rep.beta_n == 1.0
    assert rep.cond2_pooled <= 4 * rep.cond2_pooled_stderr
    assert rep.cond3_pooled <= 4 * rep.cond3_pooled_stderr


def test_condition_checker_random_mask_levels():
    n, mc, s = 64, 120, 0.5
    def masks(scaling):
        stream = derive_stream(12, "cond", scaling)
        return pruning.check_stability_conditions(
            lambda st, w: pruning.random_mask(st, n, s, scaling, weights=w).matrix,
            lambda st: sample_gaussians(st, n * n, 2.0 / n).reshape(n, n),
            n, mc, stream,
        )
    unscaled = masks("none")
    assert unscaled.cond2_pooled == pytest.approx(0.5, abs=0.05)
    scaled = masks("analytic")
    assert scaled.cond2_pooled <= 0.05
    assert scaled.beta_n == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_condition_checker_validation():
    with pytest.raises(ConfigError):
        pruning.check_stability_conditions(
            lambda st, w: np.ones((4, 4)), lambda st: np.ones((4, 4)), 4, 1, derive_stream(0, "c"),
        )
