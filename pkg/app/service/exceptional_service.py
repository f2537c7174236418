import math
import random
from fractions import Fraction
from typing import Optional, Sequence

from app.client.logger import logger
from app.config import settings
from app.errors import DomainError
from app.model.reference import (
    REFERENCE_DELTA,
    REFERENCE_FLAT_COEFFICIENTS,
    REFERENCE_H,
    REFERENCE_OSCILLATING_DEGREE,
    REFERENCE_PRIME,
)
from app.model.schema import (
    FlatSpec,
    FlatTransition,
    FpPolynomial,
    OscillatingPolynomial,
    OscillatingSpec,
    PrimeContext,
)
from app.service.field_service import FieldService


def _exact_shift(value: int, n: int) -> int:
    """value / 2^{n+1}; the closed forms guarantee divisibility."""
    q, rem = divmod(value, 1 << (n + 1))
    if rem:
        raise AssertionError("closed form is not divisible by 2^(n+1)")
    return q


class ExceptionalService:
    """Polynomials with large coefficients that stay small on short intervals."""

    @staticmethod
    def nearest_int(x) -> int:
        # Fraction rounding is half-to-even.
        return int(round(Fraction(x)))

    @staticmethod
    def construct_scaled(
        s: int,
        r: Sequence[int],
        K: int,
        H: int,
        ctx: PrimeContext,
        seed: int = 0,
    ) -> FpPolynomial:
        """A_i = r_i p / s^i + e_i with 0 <= e_i <= K / ((l+1) H^i).

        Then F(s u) = sum e_i (s u)^i as integers for u = 1..H/s, which lies
        in [0, K].
        """
        p, ell = ctx.p, len(r) - 1
        if s < 2 or ell < 0:
            raise DomainError("need s >= 2 and at least one coefficient")
        if not 1 <= K < p or H < 1:
            raise DomainError("need 1 <= K < p and H >= 1")
        if K <= ell * H**ell:
            logger.warn("K <= l*H^l: outside the interesting regime", K=K, H=H, ell=ell)
        rng = random.Random(seed)
        coeffs = []
        for i, ri in enumerate(r):
            if not 0 <= ri < s**i:
                raise DomainError(f"r_{i} must lie in [0, s^{i})")
            center = Fraction(ri * p, s**i)
            low = math.ceil(center)
            high = math.floor(center + Fraction(K, (ell + 1) * H**i))
            if low > high:
                raise DomainError(f"coefficient interval for A_{i} is empty")
            coeffs.append(rng.randint(low, high) % p)
        f = FpPolynomial(ctx=ctx, coeffs=tuple(coeffs))

        count = H // s
        us = range(1, count + 1)
        if count > settings.SCALED_CHECK_LIMIT:
            us = rng.sample(us, settings.SCALED_CHECK_LIMIT)
        for u in us:
            if FieldService.poly_eval(f, s * u) > K:
                raise AssertionError(f"F({s * u}) escaped [0, {K}]")
        return f

    @staticmethod
    def random_flat_spec(
        ctx: PrimeContext, n: int, h: int, delta: int, seed: int
    ) -> FlatSpec:
        """c_i uniform in [1, floor(delta i!/h^i) - 1]."""
        rng = random.Random(seed)
        c = []
        for i in range(1, n + 1):
            upper = delta * math.factorial(i) // h**i - 1
            if upper < 1:
                raise DomainError(f"no admissible c_{i}: delta * {i}!/h^{i} is too small")
            c.append(rng.randint(1, upper))
        return FlatSpec(ctx=ctx, n=n, h=h, delta=delta, c=tuple(c))

    @staticmethod
    def reference_flat_spec() -> FlatSpec:
        return FlatSpec(
            ctx=PrimeContext(p=REFERENCE_PRIME),
            n=len(REFERENCE_FLAT_COEFFICIENTS),
            h=REFERENCE_H,
            delta=REFERENCE_DELTA,
            c=REFERENCE_FLAT_COEFFICIENTS,
        )

    @staticmethod
    def construct_flat(spec: FlatSpec, seed: int = 0) -> FpPolynomial:
        """F(X) = sum c_i A_i X(X-1)...(X-i+1) with A_i = 1/i! mod p.

        On [0, h) F(t) equals sum c_i C(t, i) as an integer, which is below
        sum c_i h^i / i!.
        """
        ctx = spec.ctx
        if spec.n * spec.delta >= ctx.p:
            raise DomainError("n * delta must stay below p")
        f = FieldService.from_binomial_basis((0, *spec.c), ctx)
        bound = sum(Fraction(c * spec.h**i, math.factorial(i)) for i, c in enumerate(spec.c, 1))

        rng = random.Random(seed)
        checks = {0, min(1, spec.h - 1), spec.h - 1}
        checks.update(rng.randrange(spec.h) for _ in range(settings.FLAT_CHECK_SAMPLES))
        for t in sorted(checks):
            exact = sum(c * FieldService.binomial_int(t, i) for i, c in enumerate(spec.c, 1))
            if FieldService.poly_eval(f, t) != exact % ctx.p or not 0 <= exact < bound:
                raise AssertionError(f"flat bound fails at t = {t}")
        logger.debug("flat polynomial checked", points=len(checks), n=spec.n)
        return f

    @staticmethod
    def flat_transition(
        f: FpPolynomial,
        h: int,
        multiple: int,
        samples: int,
        threshold: Optional[float] = None,
    ) -> FlatTransition:
        """Profile F(x)/p on an even grid of [0, multiple*h) and report where it
        first reaches the threshold."""
        if multiple < 1 or samples < 1 or h < 1:
            raise DomainError("need positive h, multiple and samples")
        threshold = settings.FLAT_TRANSITION_THRESHOLD if threshold is None else threshold
        p = f.ctx.p
        profile = []
        first_x = None
        for j in range(samples):
            x = j * multiple * h // samples
            ratio = float(Fraction(FieldService.poly_eval(f, x), p))
            profile.append((x, ratio))
            if first_x is None and ratio >= threshold:
                first_x = x
        return FlatTransition(threshold=threshold, first_x=first_x, profile=tuple(profile))

    @staticmethod
    def oscillating_spec(
        ctx: PrimeContext, n: int, d0: int = 0, delta: Optional[int] = None
    ) -> OscillatingSpec:
        """D^i d(0) = round((-1/2)^{1+n-i} p) mod p for i = 1..n."""
        diffs = tuple(
            ExceptionalService.nearest_int(
                Fraction((-1) ** (1 + n - i) * ctx.p, 2 ** (1 + n - i))
            )
            % ctx.p
            for i in range(1, n + 1)
        )
        return OscillatingSpec(ctx=ctx, n=n, d0=d0, diffs=diffs, delta=delta)

    @staticmethod
    def reference_oscillating_spec() -> OscillatingSpec:
        n = REFERENCE_OSCILLATING_DEGREE
        return ExceptionalService.oscillating_spec(
            PrimeContext(p=REFERENCE_PRIME), n, 0, REFERENCE_PRIME >> n
        )

    @staticmethod
    def construct_oscillating(spec: OscillatingSpec) -> OscillatingPolynomial:
        """f = sum_i D^i d(0) C(X, i) with the differences taken as centered integers."""
        p = spec.ctx.p
        integer_diffs = (spec.d0, *(FieldService.centered_int(x, p) for x in spec.diffs))
        f = FieldService.from_binomial_basis(integer_diffs, spec.ctx)
        in_regime = None
        if spec.delta is not None:
            in_regime = 2 ** (spec.n + 1) * spec.delta > p
            if not in_regime:
                logger.warn("2^(n+1) * delta <= p: oscillation is not small", n=spec.n)
        return OscillatingPolynomial(
            spec=spec, polynomial=f, integer_diffs=integer_diffs, in_regime=in_regime
        )

    @staticmethod
    def integer_value(osc: OscillatingPolynomial, x: int) -> int:
        return sum(
            di * FieldService.binomial_int(x, i) for i, di in enumerate(osc.integer_diffs)
        )

    @staticmethod
    def c_value(osc: OscillatingPolynomial, x: int) -> int:
        # 2^{n+1} c(x) = (-1)^{n+1} [sum_{i<=n} (-2)^i C(x, i) - (-1)^x]
        n = osc.spec.n
        total = sum((-2) ** i * FieldService.binomial_int(x, i) for i in range(n + 1))
        sign = -1 if (n + 1) % 2 else 1
        return _exact_shift(sign * (total - (-1 if x % 2 else 1)), n)

    @staticmethod
    def d_value(osc: OscillatingPolynomial, x: int) -> int:
        n, p = osc.spec.n, osc.spec.ctx.p
        scale = 1 << (n + 1)
        total = scale * osc.integer_diffs[0]
        for i in range(1, n + 1):
            sign = -1 if (n + 1 - i) % 2 else 1
            weight = scale * osc.integer_diffs[i] - sign * 2**i * p
            total += weight * FieldService.binomial_int(x, i)
        sign = -1 if (n + 1) % 2 else 1
        total -= sign * p * (2 if x % 2 else 0)
        return _exact_shift(total, n)

    @staticmethod
    def oscillation_values(osc: OscillatingPolynomial, x: int) -> tuple[int, int]:
        """(d(x), c(x)) with f(x) = d(x) + p c(x) over the integers."""
        d, c = ExceptionalService.d_value(osc, x), ExceptionalService.c_value(osc, x)
        if d + osc.spec.ctx.p * c != ExceptionalService.integer_value(osc, x):
            raise AssertionError(f"oscillation identity fails at x = {x}")
        return d, c
