from enum import Enum
from fractions import Fraction
from typing import Any, Optional

import gmpy2
from mpmath import mpf
from pydantic import BaseModel, ConfigDict, Field, model_validator


class NoiseDistribution(str, Enum):
    UNIFORM = "uniform"
    ZERO = "zero"


class CvpMethod(str, Enum):
    EXACT = "exact"
    BABAI = "babai"


class FrozenSchema(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class PrimeContext(FrozenSchema):
    p: int = Field(..., description="Prime modulus")
    r: int = Field(0, description="Bit length of p")

    @model_validator(mode="before")
    @classmethod
    def fill_bit_length(cls, data: Any) -> Any:
        if isinstance(data, dict) and not data.get("r") and "p" in data:
            data = {**data, "r": int(data["p"]).bit_length()}
        return data

    @model_validator(mode="after")
    def check_prime(self) -> "PrimeContext":
        from app.config import settings

        if self.p < 2 or self.r != self.p.bit_length():
            raise ValueError(f"bit length {self.r} does not match p")
        if not gmpy2.is_prime(self.p, settings.MILLER_RABIN_ROUNDS):
            raise ValueError("p is not prime")
        return self


class CenteredResidue(FrozenSchema):
    value: int = Field(..., description="Representative in (-p/2, p/2]")


class FpPolynomial(FrozenSchema):
    ctx: PrimeContext
    coeffs: tuple[int, ...] = Field(..., description="Residues a_0..a_n")
    support_low: int = Field(0, ge=0, description="All coefficients below this index are zero")

    @model_validator(mode="after")
    def check_coefficients(self) -> "FpPolynomial":
        if not self.coeffs:
            raise ValueError("polynomial needs at least one coefficient")
        if self.support_low > len(self.coeffs):
            raise ValueError("support_low beyond declared degree")
        for i, a in enumerate(self.coeffs):
            if not 0 <= a < self.ctx.p:
                raise ValueError(f"coefficient {i} is not reduced modulo p")
            if i < self.support_low and a != 0:
                raise ValueError(f"coefficient {i} below support_low is nonzero")
        return self

    @property
    def degree(self) -> int:
        """Declared degree n, which may carry a zero leading coefficient"""
        return len(self.coeffs) - 1

    @property
    def leading_zero(self) -> bool:
        return self.coeffs[-1] == 0


class NoisyObservation(FrozenSchema):
    t: int
    u: int = Field(..., ge=0)
    delta: int = Field(..., ge=0)


class LsbObservation(FrozenSchema):
    t: int
    v: int = Field(..., ge=0)
    s: int = Field(..., ge=0)

    @model_validator(mode="after")
    def check_range(self) -> "LsbObservation":
        if self.v >= 1 << self.s:
            raise ValueError(f"v must be below 2^{self.s}")
        return self


class IntegerLattice(FrozenSchema):
    rows: tuple[tuple[int, ...], ...]
    scale: int = Field(1, ge=1, description="rows / scale is the rational lattice")

    @model_validator(mode="after")
    def check_shape(self) -> "IntegerLattice":
        if not self.rows:
            raise ValueError("lattice needs at least one row")
        width = len(self.rows[0])
        if width == 0 or any(len(row) != width for row in self.rows):
            raise ValueError("lattice rows must be nonempty and of equal length")
        return self

    @property
    def dimension(self) -> int:
        return len(self.rows[0])

    @property
    def row_count(self) -> int:
        return len(self.rows)


class CvpSolution(FrozenSchema):
    vector: tuple[int, ...]
    sq_distance: Fraction
    exact: bool
    method: CvpMethod
    coefficients: Optional[tuple[int, ...]] = Field(
        None, description="Integer combination of the input basis rows"
    )
    nodes: int = 0


class InterpolationInstance(FrozenSchema):
    ctx: PrimeContext
    n: int = Field(..., ge=0)
    k: int = Field(..., ge=0)
    h: int = Field(..., ge=0)
    delta: int = Field(..., ge=0)
    points: tuple[int, ...]
    observations: tuple[int, ...]
    window: Optional[tuple[int, int]] = Field(
        None, description="Half-open point window [low, high); defaults to [-h, h]"
    )
    known_low: tuple[int, ...] = Field(
        (), description="Known coefficients a_0..a_{k-1}; empty means all zero"
    )

    @model_validator(mode="after")
    def check_instance(self) -> "InterpolationInstance":
        if self.k > self.n:
            raise ValueError("k must not exceed n")
        if len(self.points) != len(self.observations):
            raise ValueError("points and observations differ in length")
        if len(self.points) < self.m:
            raise ValueError(f"need at least n-k+1 = {self.m} observations")
        low, high = self.window_bounds
        for t in self.points:
            if not low <= t < high:
                raise ValueError(f"point {t} outside [{low}, {high})")
        if any(not 0 <= u < self.ctx.p for u in self.observations):
            raise ValueError("observations must be residues in [0, p-1]")
        if self.known_low and len(self.known_low) != self.k:
            raise ValueError("known_low must list exactly k coefficients")
        return self

    @property
    def d(self) -> int:
        return len(self.points)

    @property
    def m(self) -> int:
        return self.n + 1 - self.k

    @property
    def window_bounds(self) -> tuple[int, int]:
        return self.window if self.window is not None else (-self.h, self.h + 1)


class RecoveryResult(FrozenSchema):
    coefficients: tuple[int, ...] = Field(..., description="Recovered a_k..a_n")
    candidate: FpPolynomial
    cvp_sq_distance: Fraction
    verified: bool = Field(..., description="Every residual is within delta")
    within_residual_bound: bool = Field(
        ..., description="Every residual is within sqrt(d+m)*delta"
    )
    max_residual: int
    method: CvpMethod
    exact: bool


class ApproxRecoveryResult(FrozenSchema):
    candidate: FpPolynomial
    error_profile: tuple[tuple[int, Fraction], ...]
    success_fraction: float
    verified: bool = Field(..., description="Every observation residual is within delta")
    cvp_sq_distance: Fraction
    method: CvpMethod
    exact: bool

    @model_validator(mode="after")
    def check_profile(self) -> "ApproxRecoveryResult":
        if any(not 0 <= err <= Fraction(1, 2) for _, err in self.error_profile):
            raise ValueError("error profile values must lie in [0, 1/2]")
        return self


class ExceptionalWitness(FrozenSchema):
    v: int = Field(..., ge=1)
    u: tuple[int, ...] = Field(..., description="u_i with A_i*v = u_i (mod p)")
    bounds_met: tuple[Optional[bool], ...] = Field(
        ..., description="Per coefficient; None where no bound was supplied"
    )


class FlatSpec(FrozenSchema):
    ctx: PrimeContext
    n: int = Field(..., ge=1)
    h: int = Field(..., ge=1)
    delta: int = Field(..., ge=1)
    c: tuple[int, ...] = Field(..., description="c_1..c_n")

    @model_validator(mode="after")
    def check_range(self) -> "FlatSpec":
        if len(self.c) != self.n:
            raise ValueError(f"expected {self.n} values c_i, got {len(self.c)}")
        for i, c in enumerate(self.c, start=1):
            # 0 < c_i h^i / i! < delta, in integers
            if not 0 < c * self.h**i < self.delta * int(gmpy2.fac(i)):
                raise ValueError(f"c_{i} violates 0 < c_i h^i/i! < delta")
        return self


class OscillatingSpec(FrozenSchema):
    ctx: PrimeContext
    n: int = Field(..., ge=0)
    d0: int = 0
    diffs: tuple[int, ...] = Field(..., description="Residues of D^1 d(0)..D^n d(0)")
    delta: Optional[int] = None

    @model_validator(mode="after")
    def check_diffs(self) -> "OscillatingSpec":
        if len(self.diffs) != self.n:
            raise ValueError(f"expected {self.n} differences, got {len(self.diffs)}")
        if any(not 0 <= x < self.ctx.p for x in self.diffs):
            raise ValueError("differences must be residues")
        return self


class OscillatingPolynomial(FrozenSchema):
    spec: OscillatingSpec
    polynomial: FpPolynomial
    integer_diffs: tuple[int, ...] = Field(
        ..., description="D^0 d(0)..D^n d(0) as signed integers"
    )
    in_regime: Optional[bool] = None


class IntervalPair(FrozenSchema):
    i_offset: int = Field(..., description="I = {i_offset+1, ..., i_offset+i_length}")
    i_length: int = Field(..., ge=1)
    j_offset: int = Field(..., description="J = {j_offset+1, ..., j_offset+j_length}")
    j_length: int = Field(..., ge=1)


class PredictorInput(FrozenSchema):
    n: int = Field(..., ge=0)
    h: int = Field(..., ge=1)
    d: int
    p: Optional[int] = None
    delta: Optional[int] = None
    delta_exponent: Optional[int] = Field(
        None, description="Large-p mode: log(p/delta) = delta_exponent*log 2"
    )

    @model_validator(mode="after")
    def check_mode(self) -> "PredictorInput":
        if self.delta_exponent is None and (self.p is None or self.delta is None):
            raise ValueError("give either delta_exponent or both p and delta")
        if self.delta is not None and self.delta < 1:
            raise ValueError("delta must be positive")
        return self


class MfBoundReport(FrozenSchema):
    value: mpf = Field(..., description="Reference value, implied constants dropped")
    upper_rho1: mpf
    lower_rho1: mpf
    h_condition: bool
    delta_condition: bool
    rho_condition: bool


class VolumeEstimate(FrozenSchema):
    mean: Fraction
    standard_error: float
    trials: int


class HimmoParameters(FrozenSchema):
    n: int
    b: int
    prime_bits: int
    h: int
    delta_exponent: int


class FlatTransition(FrozenSchema):
    threshold: float
    first_x: Optional[int]
    profile: tuple[tuple[int, float], ...]
