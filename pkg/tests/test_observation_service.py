import random

import pytest

from app.errors import DomainError
from app.model.schema import FpPolynomial, NoiseDistribution
from app.service.field_service import FieldService
from app.service.observation_service import ObservationService


def test_sample_points_stay_in_interval():
    points = ObservationService.sample_points(h=50, d=200, seed=4)
    assert len(points) == 200
    assert all(-50 <= t <= 50 for t in points)
    assert points == ObservationService.sample_points(h=50, d=200, seed=4)


def test_sample_window_points_rejects_empty_window():
    with pytest.raises(DomainError):
        ObservationService.sample_window_points(5, 5, 3, seed=0)


def test_observations_respect_error_bound(mersenne_ctx):
    f = FieldService.random_polynomial(mersenne_ctx, 3, 0, seed=1)
    points = ObservationService.sample_points(h=1000, d=50, seed=2)
    delta = 2**20
    for obs in ObservationService.observe_points(f, points, delta, seed=3):
        assert 0 <= obs.u < mersenne_ctx.p
        assert FieldService.dist_mod(obs.u - FieldService.poly_eval(f, obs.t), mersenne_ctx.p) <= delta


def test_zero_noise_reproduces_values(small_ctx):
    f = FpPolynomial(ctx=small_ctx, coeffs=(0, 5, 7))
    exact = ObservationService.observe_additive(f, 2, 0, seed=0)
    assert exact.u == 38
    quiet = ObservationService.observe_points(
        f, [1, 2, 3], 10, seed=0, distribution=NoiseDistribution.ZERO
    )
    assert [o.u for o in quiet] == [FieldService.poly_eval(f, t) for t in (1, 2, 3)]


def test_delta_must_stay_below_half_p(small_ctx):
    f = FpPolynomial(ctx=small_ctx, coeffs=(1,))
    ObservationService.observe_points(f, [0], 50, seed=0)
    with pytest.raises(DomainError):
        ObservationService.observe_points(f, [0], 51, seed=0)
    with pytest.raises(DomainError):
        ObservationService.observe_points(f, [0], -1, seed=0)


def test_lsb_observation_becomes_additive(mersenne_ctx):
    p = mersenne_ctx.p
    rng = random.Random(9)
    for s in (1, 8, 30, 60):
        for _ in range(20):
            f = FpPolynomial(ctx=mersenne_ctx, coeffs=(rng.randrange(p),))
            obs = ObservationService.lsb_observe(f, 0, s)
            u, delta, lam = ObservationService.lsb_to_additive(obs, mersenne_ctx)
            assert delta == 1 << (61 - s - 1)
            assert FieldService.dist_mod(lam * f.coeffs[0] - u, p) <= delta


def test_lsb_needs_s_below_bit_length(small_ctx):
    f = FpPolynomial(ctx=small_ctx, coeffs=(3,))
    obs = ObservationService.lsb_observe(f, 0, 7)
    with pytest.raises(DomainError):
        ObservationService.lsb_to_additive(obs, small_ctx)


def test_msb_observation_becomes_additive(mersenne_ctx):
    p = mersenne_ctx.p
    rng = random.Random(10)
    for s in (1, 5, 32, 60):
        for _ in range(20):
            value = rng.randrange(p)
            f = FpPolynomial(ctx=mersenne_ctx, coeffs=(value,))
            msbs = ObservationService.msb_observe(f, 0, s)
            u, delta = ObservationService.msb_to_additive(msbs, s, mersenne_ctx)
            assert FieldService.dist_mod(value - u, p) <= delta


def test_msb_rejects_oversized_prefix(mersenne_ctx):
    with pytest.raises(DomainError):
        ObservationService.msb_to_additive(4, 2, mersenne_ctx)


def test_himmo_parameters():
    params = ObservationService.himmo_parameters(5, 16)
    assert params.prime_bits == 112
    assert params.h == 2**15
    assert params.delta_exponent == 17
