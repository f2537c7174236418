import math
import random
from fractions import Fraction
from typing import Optional

import gmpy2
import mpmath
import numpy as np
from sympy import Matrix, Rational

from app.client.logger import logger
from app.config import settings
from app.errors import DomainError, EnumerationRefusedError
from app.model.schema import (
    FpPolynomial,
    IntegerLattice,
    IntervalPair,
    MfBoundReport,
    PredictorInput,
    VolumeEstimate,
)
from app.service.field_service import FieldService
from app.service.lattice_service import LatticeService, _zz_matrix


def _log_int(x: int) -> mpmath.mpf:
    return mpmath.log(mpmath.mpf(int(x)))


def _inverse_factorial_product(n: int) -> Fraction:
    product = 1
    for i in range(1, n + 1):
        product *= math.factorial(i)
    return Fraction(1, product)


class AnalysisService:
    """Oracles and reference values for the bounds and the success predictor.

    Bounds with implied constants or p^{o(1)} factors are evaluated with those
    factors dropped. They are reference values only.
    """

    @staticmethod
    def count_nfij(f: FpPolynomial, pair: IntervalPair) -> int:
        """#{t in I : F(t) mod p in J} by direct evaluation."""
        if pair.i_length > settings.NFIJ_BRUTE_FORCE_CAP:
            raise EnumerationRefusedError(
                "interval I", pair.i_length, settings.NFIJ_BRUTE_FORCE_CAP
            )
        p = f.ctx.p
        if pair.j_length >= p:
            return pair.i_length
        start = pair.j_offset + 1
        return sum(
            1
            for t in range(pair.i_offset + 1, pair.i_offset + pair.i_length + 1)
            if (FieldService.poly_eval(f, t) - start) % p < pair.j_length
        )

    @staticmethod
    def kappa_bound(ell: int) -> int:
        if ell < 1:
            raise DomainError("kappa is defined for l >= 1")
        return ell * ell - ell + 1

    @staticmethod
    def nfij_bound(H: int, K: int, p: int, ell: int) -> mpmath.mpf:
        """H ((K/p)^{1/2k} + (K/H^l)^{1/2k}) with k = kappa_bound(l)."""
        if not (1 <= H and 1 <= K):
            raise DomainError("need H, K >= 1")
        kappa = AnalysisService.kappa_bound(ell)
        with mpmath.workdps(settings.LOG_PRECISION_DIGITS):
            exponent = mpmath.mpf(1) / (2 * kappa)
            return H * (
                mpmath.power(mpmath.mpf(K) / p, exponent)
                + mpmath.power(mpmath.mpf(K) / mpmath.power(H, ell), exponent)
            )

    @staticmethod
    def mf_bound(
        n: int, h: int, delta: int, p: int, rho, eps: float
    ) -> MfBoundReport:
        with mpmath.workdps(settings.LOG_PRECISION_DIGITS):
            rho = mpmath.mpf(rho)
            if not 0 < rho <= 1:
                raise DomainError("rho must lie in (0, 1]")
            log_h, log_delta, log_p = _log_int(h), _log_int(delta), _log_int(p)
            two_pow = mpmath.power(2, n - 1)
            value = (
                mpmath.power(rho, -two_pow - mpmath.mpf(n * (n * n + 1)) / 2)
                * mpmath.power(delta, n + 1)
                * mpmath.power(h, mpmath.mpf(n * n - n + 2) / 2)
            )
            rho_floor = max(log_delta - log_p, -log_h / two_pow) + eps * log_p
            return MfBoundReport(
                value=value,
                upper_rho1=mpmath.power(delta, n) * mpmath.power(h, mpmath.mpf(n * (n + 1)) / 2),
                lower_rho1=mpmath.power(delta, n + 1)
                * mpmath.power(h, -mpmath.mpf(n * (n + 1)) / 2),
                h_condition=bool((n - 1) * log_h <= log_delta - eps * log_p),
                delta_condition=bool(log_delta < (1 - eps) * log_p),
                rho_condition=bool(mpmath.log(rho) >= rho_floor),
            )

    @staticmethod
    def coefficient_bounds(
        ell: int, rho, K: int, H: int
    ) -> tuple[mpmath.mpf, tuple[mpmath.mpf, ...]]:
        """Reference sizes of v and u_0..u_l with A_i v = u_i (mod p)."""
        with mpmath.workdps(settings.LOG_PRECISION_DIGITS):
            rho = mpmath.mpf(rho)
            v = mpmath.power(rho, -mpmath.mpf(ell * (ell + 1)) / 2)
            scale = mpmath.power(rho, -mpmath.mpf(ell * (ell - 1)) / 2) * K
            return v, tuple(scale * mpmath.power(H, ell - i) for i in range(ell + 1))

    @staticmethod
    def leading_coefficient_bounds(
        ell: int, rho, K: int, H: int
    ) -> tuple[mpmath.mpf, mpmath.mpf]:
        """Reference sizes of v and u with A_l v = u (mod p), from the
        exponential-sum argument: v up to rho^{-2^{l-1}}, u up to K H^{1-l}."""
        with mpmath.workdps(settings.LOG_PRECISION_DIGITS):
            rho = mpmath.mpf(rho)
            return (
                mpmath.power(rho, -mpmath.power(2, ell - 1)),
                mpmath.mpf(K) * mpmath.power(H, 1 - ell),
            )

    @staticmethod
    def hilbert_det(n: int) -> Fraction:
        """det of the (n+1)x(n+1) Hilbert matrix by the product formula."""
        if n < 0:
            raise DomainError("n must be nonnegative")
        numerator = 1
        for i in range(1, n + 1):
            numerator *= math.factorial(i) ** 4
        denominator = 1
        for i in range(1, 2 * n + 2):
            denominator *= math.factorial(i)
        return Fraction(numerator, denominator)

    @staticmethod
    def hilbert_det_elimination(n: int) -> Fraction:
        det = Matrix(n + 1, n + 1, lambda i, j: Rational(1, i + j + 1)).det()
        return Fraction(int(det.p), int(det.q))

    @staticmethod
    def expected_vol_sq(n: int, h: int, d: int) -> Fraction:
        """Continuous approximation of E[Vol(L_approx)^2] over uniform points."""
        if d < n + 1 or h < 1:
            raise DomainError("need d >= n+1 and h >= 1")
        return (
            _inverse_factorial_product(n) ** 2
            * math.comb(d, n + 1)
            * (2 * h) ** (n * (n + 1))
            * math.factorial(n + 1)
            * AnalysisService.hilbert_det(n)
        )

    @staticmethod
    def expected_vol_sq_exact(n: int, h: int, d: int) -> Fraction:
        """Exact E[Vol^2] for points uniform on {-h..h}.

        Cauchy-Binet over (n+1)-subsets, then Andreief's identity for the
        squared Vandermonde: (n+1)! det[E t^{i+j}].
        """
        if d < n + 1 or h < 0:
            raise DomainError("need d >= n+1 and h >= 0")
        power_sums = [sum(t**k for t in range(-h, h + 1)) for k in range(2 * n + 1)]
        moments = int(
            _zz_matrix([[power_sums[i + j] for j in range(n + 1)] for i in range(n + 1)]).det()
        )
        return (
            _inverse_factorial_product(n) ** 2
            * math.comb(d, n + 1)
            * math.factorial(n + 1)
            * Fraction(moments, (2 * h + 1) ** (n + 1))
        )

    @staticmethod
    def expected_vol_sq_mc(n: int, h: int, d: int, trials: int, seed: int) -> VolumeEstimate:
        """Monte Carlo mean of the Gram determinant of rows C(t, i), i = 0..n."""
        if trials < 1:
            raise DomainError("need at least one trial")
        if d < n + 1 or h < 0:
            raise DomainError("need d >= n+1 and h >= 0")
        rng = random.Random(seed)
        values = []
        with logger.span("expected_vol_sq_mc n={n} d={d} trials={trials}", n=n, d=d, trials=trials):
            for _ in range(trials):
                ts = [rng.randint(-h, h) for _ in range(d)]
                rows = tuple(
                    tuple(FieldService.binomial_int(t, i) for t in ts) for i in range(n + 1)
                )
                values.append(LatticeService.gram_determinant(IntegerLattice(rows=rows)))
        samples = np.array([float(v) for v in values])
        error = float(samples.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        return VolumeEstimate(mean=Fraction(sum(values), trials), standard_error=error, trials=trials)

    @staticmethod
    def predictor_s(inp: PredictorInput) -> mpmath.mpf:
        """Natural-log success predictor; positive S means the short-vector
        heuristic favours approximate recovery."""
        n, h, d = inp.n, inp.h, inp.d
        if d <= n + 1:
            raise DomainError(f"S needs d > n+1, got d = {d}")
        if not AnalysisService.predictor_in_regime(inp):
            logger.debug("d > h/10: outside the regime S was derived for", d=d, h=h)
        with mpmath.workdps(settings.LOG_PRECISION_DIGITS):
            if inp.delta_exponent is not None:
                leading = inp.delta_exponent * mpmath.log(2)
            else:
                leading = _log_int(inp.p) - _log_int(inp.delta)
            leading -= _log_int(d)
            factorials = sum(
                _log_int(gmpy2.fac(n + 1 + i)) - _log_int(gmpy2.fac(i))
                for i in range(1, n + 1)
            )
            bracket = (
                factorials
                - _log_int(gmpy2.comb(d, n + 1))
                - n * (n + 1) * _log_int(2 * h)
            )
            return leading + bracket / (2 * (d - n - 1))

    @staticmethod
    def predictor_in_regime(inp: PredictorInput) -> bool:
        return 10 * inp.d <= inp.h

    @staticmethod
    def first_positive_d(
        n: int,
        h: int,
        d_min: int,
        d_max: int,
        p: Optional[int] = None,
        delta: Optional[int] = None,
        delta_exponent: Optional[int] = None,
    ) -> Optional[int]:
        for d in range(max(d_min, n + 2), d_max + 1):
            inp = PredictorInput(
                n=n, h=h, d=d, p=p, delta=delta, delta_exponent=delta_exponent
            )
            if AnalysisService.predictor_s(inp) > 0:
                return d
        return None

    @staticmethod
    def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
        if trials < 1 or not 0 <= successes <= trials:
            raise DomainError("need 0 <= successes <= trials and trials >= 1")
        rate = successes / trials
        denominator = 1 + z * z / trials
        center = (rate + z * z / (2 * trials)) / denominator
        half = z * math.sqrt(rate * (1 - rate) / trials + z * z / (4 * trials * trials)) / denominator
        return max(0.0, center - half), min(1.0, center + half)
