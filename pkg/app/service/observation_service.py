import random
from typing import Optional, Sequence

from app.client.logger import logger
from app.config import settings
from app.errors import DomainError
from app.model.schema import (
    FpPolynomial,
    HimmoParameters,
    LsbObservation,
    NoiseDistribution,
    NoisyObservation,
    PrimeContext,
)
from app.service.field_service import FieldService


class ObservationService:
    """The attacker's view: points on a short interval and noisy values."""

    @staticmethod
    def sample_points(h: int, d: int, seed: int) -> list[int]:
        if h < 0 or d < 1:
            raise DomainError("need h >= 0 and d >= 1")
        return ObservationService.sample_window_points(-h, h + 1, d, seed)

    @staticmethod
    def sample_window_points(low: int, high: int, d: int, seed: int) -> list[int]:
        """d points i.i.d. uniform on [low, high), with replacement."""
        if high <= low or d < 1:
            raise DomainError(f"empty window [{low}, {high}) or d < 1")
        rng = random.Random(seed)
        return [rng.randrange(low, high) for _ in range(d)]

    @staticmethod
    def _noise(rng: random.Random, delta: int, distribution: NoiseDistribution) -> int:
        if distribution == NoiseDistribution.ZERO or delta == 0:
            return 0
        return rng.randint(-delta, delta)

    @staticmethod
    def _check_delta(delta: int, ctx: PrimeContext) -> None:
        if delta < 0:
            raise DomainError("delta must be nonnegative")
        if 2 * delta >= ctx.p:
            raise DomainError("delta >= p/2 carries no information about f(t)")

    @staticmethod
    def observe_additive(
        f: FpPolynomial,
        t: int,
        delta: int,
        seed: int,
        distribution: Optional[NoiseDistribution] = None,
    ) -> NoisyObservation:
        return ObservationService.observe_points(f, [t], delta, seed, distribution)[0]

    @staticmethod
    def observe_points(
        f: FpPolynomial,
        points: Sequence[int],
        delta: int,
        seed: int,
        distribution: Optional[NoiseDistribution] = None,
    ) -> list[NoisyObservation]:
        ctx = f.ctx
        ObservationService._check_delta(delta, ctx)
        distribution = distribution or settings.NOISE_DISTRIBUTION
        rng = random.Random(seed)
        observations = []
        for t in points:
            value = FieldService.poly_eval(f, t)
            u = (value + ObservationService._noise(rng, delta, distribution)) % ctx.p
            if FieldService.dist_mod(u - value, ctx.p) > delta:
                raise AssertionError("generated observation violates its error bound")
            observations.append(NoisyObservation(t=t, u=u, delta=delta))
        return observations

    @staticmethod
    def lsb_observe(f: FpPolynomial, t: int, s: int) -> LsbObservation:
        return LsbObservation(t=t, v=FieldService.poly_eval(f, t) % (1 << s), s=s)

    @staticmethod
    def msb_observe(f: FpPolynomial, t: int, s: int) -> int:
        """Top s bits of the r-bit representation of f(t)."""
        if not 0 <= s < f.ctx.r:
            raise DomainError("need 0 <= s < r")
        return FieldService.poly_eval(f, t) >> (f.ctx.r - s)

    @staticmethod
    def lsb_to_additive(obs: LsbObservation, ctx: PrimeContext) -> tuple[int, int, int]:
        """Turn s known low bits into an approximation of lambda*f(t).

        Returns (u, delta, lambda) with lambda = 2^{-s} mod p.
        """
        if obs.s >= ctx.r:
            raise DomainError(f"s = {obs.s} must be below the bit length r = {ctx.r}")
        lam = FieldService.mod_inverse(1 << obs.s, ctx)
        delta = 1 << (ctx.r - obs.s - 1)
        u = (lam * obs.v + delta) % ctx.p
        return u, delta, lam

    @staticmethod
    def msb_to_additive(value_msbs: int, s: int, ctx: PrimeContext) -> tuple[int, int]:
        """Midpoint approximation of a value whose top s bits are known."""
        if not 0 <= s < ctx.r:
            raise DomainError(f"s = {s} must be below the bit length r = {ctx.r}")
        if not 0 <= value_msbs < 1 << s:
            raise DomainError(f"msbs {value_msbs} do not fit in {s} bits")
        shift = ctx.r - s
        delta = 1 << (shift - 1)
        return (value_msbs * (1 << shift) + delta) % ctx.p, delta

    @staticmethod
    def himmo_parameters(n: int, b: int) -> HimmoParameters:
        """HIMMO-style sizes: p of (n+2)b bits, h = 2^{b-1}, delta = p/2^{b+1}."""
        if n < 0 or b < 1:
            raise DomainError("need n >= 0 and b >= 1")
        params = HimmoParameters(
            n=n, b=b, prime_bits=(n + 2) * b, h=1 << (b - 1), delta_exponent=b + 1
        )
        logger.debug("himmo parameters", n=n, b=b, prime_bits=params.prime_bits)
        return params
