import random
from typing import Iterable, Sequence

import gmpy2
from sympy.functions.combinatorial.numbers import stirling

from app.client.logger import logger
from app.config import settings
from app.errors import DomainError
from app.model.schema import CenteredResidue, FpPolynomial, PrimeContext


class FieldService:
    """Exact arithmetic in F_p and polynomial evaluation.

    Residues are kept in [0, p-1]; centered representatives are produced on
    demand by `centered`.
    """

    @staticmethod
    def context(p: int) -> PrimeContext:
        if p < 2 or not gmpy2.is_prime(p, settings.MILLER_RABIN_ROUNDS):
            raise DomainError(f"{p} is not prime")
        return PrimeContext(p=p)

    @staticmethod
    def generate_prime(bits: int, seed: int) -> PrimeContext:
        """Seeded random prime with exactly `bits` bits."""
        if bits < 2:
            raise DomainError("a prime needs at least 2 bits")
        rng = random.Random(seed)
        while True:
            candidate = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
            p = int(gmpy2.next_prime(candidate - 1))
            if p.bit_length() == bits and gmpy2.is_prime(p, settings.MILLER_RABIN_ROUNDS):
                logger.debug("generated prime", bits=bits, seed=seed)
                return PrimeContext(p=p)

    @staticmethod
    def dist_mod(s: int, m: int) -> int:
        """|s|_m, the distance from s to the closest multiple of m."""
        if m < 1:
            raise DomainError("dist_mod needs a positive modulus")
        r = s % m
        return min(r, m - r)

    @staticmethod
    def centered(s: int, ctx: PrimeContext) -> CenteredResidue:
        return CenteredResidue(value=FieldService.centered_int(s, ctx.p))

    @staticmethod
    def centered_int(s: int, p: int) -> int:
        r = s % p
        return r - p if 2 * r > p else r

    @staticmethod
    def mod_inverse(a: int, ctx: PrimeContext) -> int:
        if a % ctx.p == 0:
            raise DomainError("zero has no inverse modulo p")
        return int(gmpy2.invert(a % ctx.p, ctx.p))

    @staticmethod
    def inv_factorial(i: int, ctx: PrimeContext) -> int:
        if not 0 <= i < ctx.p:
            raise DomainError(f"i! is not invertible modulo p for i = {i}")
        return int(gmpy2.invert(gmpy2.fac(i) % ctx.p, ctx.p))

    @staticmethod
    def poly_eval(f: FpPolynomial, t: int) -> int:
        p = f.ctx.p
        x = gmpy2.mpz(t % p)
        acc = gmpy2.mpz(0)
        for a in reversed(f.coeffs):
            acc = (acc * x + a) % p
        return int(acc)

    @staticmethod
    def poly_add(f: FpPolynomial, g: FpPolynomial) -> FpPolynomial:
        if f.ctx.p != g.ctx.p:
            raise DomainError("polynomials live over different primes")
        size = max(len(f.coeffs), len(g.coeffs))
        a = list(f.coeffs) + [0] * (size - len(f.coeffs))
        b = list(g.coeffs) + [0] * (size - len(g.coeffs))
        return FpPolynomial(
            ctx=f.ctx,
            coeffs=tuple((x + y) % f.ctx.p for x, y in zip(a, b)),
            support_low=min(f.support_low, g.support_low),
        )

    @staticmethod
    def polynomial(ctx: PrimeContext, coeffs: Iterable[int], support_low: int = 0) -> FpPolynomial:
        return FpPolynomial(
            ctx=ctx, coeffs=tuple(int(a) % ctx.p for a in coeffs), support_low=support_low
        )

    @staticmethod
    def random_polynomial(ctx: PrimeContext, n: int, k: int, seed: int) -> FpPolynomial:
        """Uniform coefficients a_k..a_n, zero below k."""
        if not 0 <= k <= n:
            raise DomainError("need 0 <= k <= n")
        rng = random.Random(seed)
        coeffs = [0] * k + [rng.randrange(ctx.p) for _ in range(k, n + 1)]
        return FpPolynomial(ctx=ctx, coeffs=tuple(coeffs), support_low=k)

    @staticmethod
    def binomial_int(t: int, i: int) -> int:
        """C(t, i) = t(t-1)...(t-i+1)/i!, valid for negative t."""
        if i < 0:
            raise DomainError("binomial index must be nonnegative")
        if t >= 0:
            return int(gmpy2.comb(t, i))
        # C(-m, i) = (-1)^i C(m+i-1, i)
        value = int(gmpy2.comb(-t + i - 1, i))
        return -value if i % 2 else value

    @staticmethod
    def falling_factorial_coefficients(i: int) -> list[int]:
        """Monomial coefficients of X(X-1)...(X-i+1), index 0 upward."""
        return [int(stirling(i, j, kind=1, signed=True)) for j in range(i + 1)]

    @staticmethod
    def from_binomial_basis(values: Sequence[int], ctx: PrimeContext, support_low: int = 0) -> FpPolynomial:
        """Convert sum_i values[i]*C(X, i) to the monomial basis modulo p."""
        p = ctx.p
        coeffs = [0] * len(values)
        for i, value in enumerate(values):
            if value % p == 0:
                continue
            weight = value * FieldService.inv_factorial(i, ctx) % p
            for j, s in enumerate(FieldService.falling_factorial_coefficients(i)):
                coeffs[j] = (coeffs[j] + weight * s) % p
        return FpPolynomial(ctx=ctx, coeffs=tuple(coeffs), support_low=support_low)
