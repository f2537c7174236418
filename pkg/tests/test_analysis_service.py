from fractions import Fraction

import mpmath
import pytest

from app.config import settings
from app.errors import DomainError, EnumerationRefusedError
from app.model.schema import FpPolynomial, IntervalPair, PredictorInput, PrimeContext
from app.service.analysis_service import AnalysisService
from app.service.field_service import FieldService


def _pair(i_length, j_length, i_offset=0, j_offset=0):
    return IntervalPair(i_offset=i_offset, i_length=i_length, j_offset=j_offset, j_length=j_length)


def test_count_nfij_small_square():
    f = FpPolynomial(ctx=PrimeContext(p=11), coeffs=(0, 0, 1))
    assert AnalysisService.count_nfij(f, _pair(3, 5)) == 2
    assert AnalysisService.count_nfij(f, _pair(3, 11)) == 3


def test_count_nfij_monomial_fills_its_range(small_ctx):
    f = FpPolynomial(ctx=small_ctx, coeffs=(0, 0, 1))
    assert AnalysisService.count_nfij(f, _pair(5, 25)) == 5


def test_count_nfij_refuses_huge_interval(small_ctx, monkeypatch):
    monkeypatch.setattr(settings, "NFIJ_BRUTE_FORCE_CAP", 10)
    f = FpPolynomial(ctx=small_ctx, coeffs=(1,))
    with pytest.raises(EnumerationRefusedError):
        AnalysisService.count_nfij(f, _pair(11, 5))


@pytest.mark.parametrize("ell, expected", [(1, 1), (2, 3), (5, 21)])
def test_kappa_bound(ell, expected):
    assert AnalysisService.kappa_bound(ell) == expected


def test_kappa_needs_positive_degree():
    with pytest.raises(DomainError):
        AnalysisService.kappa_bound(0)


def test_nfij_bound_is_trivial_for_full_range():
    p = 10007
    assert AnalysisService.nfij_bound(100, p - 1, p, 2) >= 100
    assert 0 < AnalysisService.nfij_bound(1, 1, p, 2) < 2


def test_random_counts_stay_under_reference_bound():
    ctx = PrimeContext(p=10007)
    bound = AnalysisService.nfij_bound(100, 100, ctx.p, 2)
    for seed in range(200):
        f = FieldService.random_polynomial(ctx, 2, 0, seed)
        assert AnalysisService.count_nfij(f, _pair(100, 100)) <= 10 * bound


def test_mf_bound_rho_one_ordering():
    report = AnalysisService.mf_bound(2, 10, 1000, 10007, 1, 0.1)
    assert report.lower_rho1 <= report.upper_rho1


def test_mf_bound_degree_one_exponents():
    report = AnalysisService.mf_bound(1, 50, 7, 10007, 1, 0.1)
    assert mpmath.almosteq(report.value, 7**2 * 50, rel_eps=1e-20)


def test_mf_bound_flags_at_word_size_parameters():
    p = FieldService.generate_prime(112, seed=0).p
    report = AnalysisService.mf_bound(5, 2**15, p >> 17, p, "0.5", 0.5)
    assert not report.h_condition
    assert not report.delta_condition
    assert not report.rho_condition


def test_mf_bound_rejects_rho_outside_unit_interval():
    with pytest.raises(DomainError):
        AnalysisService.mf_bound(2, 10, 100, 10007, 2, 0.1)


def test_coefficient_bounds():
    v, us = AnalysisService.coefficient_bounds(2, 1, 1000, 10)
    assert v == 1
    assert us == (100000, 10000, 1000)
    v, u = AnalysisService.leading_coefficient_bounds(3, "0.5", 1 << 20, 16)
    assert v == 16
    assert u == 4096


@pytest.mark.parametrize(
    "n, expected", [(0, Fraction(1)), (1, Fraction(1, 12)), (2, Fraction(1, 2160))]
)
def test_hilbert_det(n, expected):
    assert AnalysisService.hilbert_det(n) == expected


def test_hilbert_formula_matches_elimination():
    for n in range(7):
        assert AnalysisService.hilbert_det(n) == AnalysisService.hilbert_det_elimination(n)


def test_expected_volume_closed_form():
    assert AnalysisService.expected_vol_sq(0, 50, 9) == 9
    assert AnalysisService.expected_vol_sq(1, 30, 2) == Fraction(2 * 30**2, 3)
    with pytest.raises(DomainError):
        AnalysisService.expected_vol_sq(3, 10, 3)


def test_monte_carlo_degenerate_cases():
    single_row = AnalysisService.expected_vol_sq_mc(0, 10, 7, trials=20, seed=0)
    assert single_row.mean == 7
    assert single_row.standard_error == 0
    collapsed = AnalysisService.expected_vol_sq_mc(2, 0, 6, trials=5, seed=0)
    assert collapsed.mean == 0


def test_exact_volume_matches_small_enumeration():
    # n = 1, d = 2, t uniform on {-1, 0, 1}: E[(t1 - t2)^2] = 4/3
    assert AnalysisService.expected_vol_sq_exact(1, 1, 2) == Fraction(4, 3)


def test_closed_form_tracks_exact_volume():
    exact = AnalysisService.expected_vol_sq_exact(2, 100, 10)
    approx = AnalysisService.expected_vol_sq(2, 100, 10)
    assert abs(approx - exact) <= exact / 20


def test_monte_carlo_agrees_with_exact_volume():
    estimate = AnalysisService.expected_vol_sq_mc(2, 100, 10, trials=20_000, seed=1)
    exact = AnalysisService.expected_vol_sq_exact(2, 100, 10)
    assert abs(float(estimate.mean - exact)) <= 3 * estimate.standard_error


def test_monte_carlo_agrees_with_closed_form_volume():
    # The continuous form drifts from the discrete mean by O(1/h); a wide window hides it.
    estimate = AnalysisService.expected_vol_sq_mc(2, 10_000, 10, trials=20_000, seed=4)
    closed = AnalysisService.expected_vol_sq(2, 10_000, 10)
    assert abs(float(estimate.mean - closed)) <= 3 * estimate.standard_error


@pytest.mark.slow
@pytest.mark.parametrize("n, h, d", [(1, 1000, 4), (2, 100, 10), (3, 50, 12)])
def test_monte_carlo_agrees_with_exact_volume_long(n, h, d):
    estimate = AnalysisService.expected_vol_sq_mc(n, h, d, trials=100_000, seed=2)
    exact = AnalysisService.expected_vol_sq_exact(n, h, d)
    assert abs(float(estimate.mean - exact)) <= 3 * estimate.standard_error


@pytest.mark.parametrize(
    "n, log_h, delta_exp, d_max, crossover",
    [(5, 15, 17, 60, 23), (26, 31, 33, 500, 426), (26, 7, 33, 120, 73)],
)
def test_predictor_crossovers(n, log_h, delta_exp, d_max, crossover):
    found = AnalysisService.first_positive_d(n, 2**log_h, n + 2, d_max, delta_exponent=delta_exp)
    assert found == crossover
    before = PredictorInput(n=n, h=2**log_h, d=crossover - 1, delta_exponent=delta_exp)
    assert AnalysisService.predictor_s(before) <= 0


def test_predictor_never_positive_for_tiny_window():
    for d in range(13, 256):
        inp = PredictorInput(n=10, h=128, d=d, delta_exponent=9)
        assert AnalysisService.predictor_s(inp) < 0
    assert AnalysisService.first_positive_d(10, 128, 13, 255, delta_exponent=9) is None


def test_predictor_increases_with_d():
    values = [
        AnalysisService.predictor_s(PredictorInput(n=5, h=2**15, d=d, delta_exponent=17))
        for d in range(7, 151)
    ]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_predictor_with_concrete_prime():
    p = FieldService.generate_prime(112, seed=3).p
    delta = p >> 17
    assert AnalysisService.predictor_s(PredictorInput(n=5, h=2**15, d=23, p=p, delta=delta)) > 0
    assert AnalysisService.predictor_s(PredictorInput(n=5, h=2**15, d=22, p=p, delta=delta)) <= 0


def test_predictor_needs_d_above_n_plus_one():
    with pytest.raises(DomainError):
        AnalysisService.predictor_s(PredictorInput(n=5, h=2**15, d=6, delta_exponent=17))


def test_predictor_regime_flag():
    assert AnalysisService.predictor_in_regime(PredictorInput(n=5, h=2**15, d=23, delta_exponent=17))
    assert not AnalysisService.predictor_in_regime(PredictorInput(n=26, h=128, d=73, delta_exponent=33))


def test_wilson_interval():
    low, high = AnalysisService.wilson_interval(5, 10)
    assert low == pytest.approx(0.2366, abs=1e-4)
    assert high == pytest.approx(0.7634, abs=1e-4)
    assert AnalysisService.wilson_interval(0, 10)[0] == pytest.approx(0.0, abs=1e-12)
    assert AnalysisService.wilson_interval(10, 10)[1] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        AnalysisService.wilson_interval(11, 10)
