from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.errors import ConfigError
from app.model.schema import PrimeContext


class ExactTrialRequest(BaseModel):
    p: int = Field(..., description="Prime modulus")
    n: int = Field(..., ge=0, description="Degree")
    k: int = Field(0, ge=0, description="Lowest unknown coefficient")
    h: int = Field(..., ge=0, description="Interval radius")
    delta: int = Field(..., ge=0, description="Noise bound")
    d: int = Field(..., ge=1, description="Number of observations")
    seed: int = Field(..., description="Trial seed")
    window: Optional[tuple[int, int]] = Field(
        None, description="Half-open point window; defaults to [-h, h]"
    )


class ApproxTrialRequest(ExactTrialRequest):
    grid: Optional[int] = Field(None, ge=1, description="Error-profile grid size")


class ExperimentConfig(BaseSettings):
    """Parameters shared by every command.

    Values come from command-line flags, then a key=value config file, then
    the defaults below. Environment variables are not consulted.
    """

    n: int = Field(5, ge=0, description="Degree")
    k: int = Field(0, ge=0, description="Lowest unknown coefficient")
    h: int = Field(2**15, ge=0, description="Interval radius")
    delta: Optional[int] = Field(None, ge=0, description="Noise bound")
    delta_exp: Optional[int] = Field(None, ge=1, description="delta = p >> delta_exp")
    prime_bits: int = Field(64, ge=2, description="Bits of a generated prime")
    prime: Optional[int] = Field(None, description="Explicit prime modulus")
    d: int = Field(23, ge=1, description="Number of observations")
    seed: int = Field(0, description="Master seed")
    trials: int = Field(1, ge=1, description="Number of seeded trials")
    grid: Optional[int] = Field(None, ge=1, description="Grid or sample size")
    out: Path = Field(Path("out"), description="Output directory")
    workers: int = Field(1, ge=1, description="Worker processes for trials")

    model_config = SettingsConfigDict(case_sensitive=False, extra="forbid")

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls,
        init_settings,
        env_settings,
        dotenv_settings,
        file_secret_settings,
    ):
        return init_settings, dotenv_settings

    @classmethod
    def load(cls, config_path: Optional[Path] = None, **flags: Any):
        """Flags override the config file, which overrides defaults."""
        if config_path is not None and not config_path.is_file():
            raise FileNotFoundError(f"config file not found: {config_path}")
        values = {key: value for key, value in flags.items() if value is not None}
        return cls(_env_file=config_path, **values)

    def resolve_prime(self) -> PrimeContext:
        from app.service.field_service import FieldService

        if self.prime is not None:
            return FieldService.context(self.prime)
        return FieldService.generate_prime(self.prime_bits, self.seed)

    def resolve_delta(self, ctx: PrimeContext) -> int:
        if self.delta is not None:
            delta = self.delta
        elif self.delta_exp is not None:
            delta = ctx.p >> self.delta_exp
        else:
            raise ConfigError("give either delta or delta_exp")
        if 2 * delta >= ctx.p:
            raise ConfigError(f"delta must be below p/2 (p has {ctx.r} bits)")
        return delta

    def record(self) -> dict[str, Any]:
        return self.model_dump(mode="json")


class GenConfig(ExperimentConfig):
    reveal_low: bool = Field(False, description="Publish a_0..a_{k-1} with the instance")

    @model_validator(mode="after")
    def check_instance_shape(self) -> "GenConfig":
        if self.h < 1:
            raise ValueError("h must be at least 1: the interval [-h, h] is degenerate")
        if self.k > self.n:
            raise ValueError("k must not exceed n")
        if self.d < self.n - self.k + 1:
            raise ValueError("d must be at least n-k+1")
        return self


class AttackConfig(GenConfig):
    instance: Optional[Path] = Field(
        None, description="Instance directory; seeded trials are run when absent"
    )


class SweepConfig(GenConfig):
    d_min: Optional[int] = Field(None, ge=1, description="First d of the sweep")
    d_max: Optional[int] = Field(None, ge=1, description="Last d of the sweep")

    @model_validator(mode="after")
    def check_range(self) -> "SweepConfig":
        low = self.n - self.k + 1
        if self.d_min is None:
            self.d_min = low
        if self.d_max is None:
            self.d_max = self.d_min + 10
        if self.d_min < low or self.d_max < self.d_min:
            raise ValueError(f"need {low} <= d_min <= d_max")
        return self


def _apply_word_size(config: ExperimentConfig, b: int) -> None:
    """Fill h, delta_exp and prime_bits from a word size b unless set explicitly."""
    explicit = config.model_fields_set
    if "h" not in explicit:
        config.h = 1 << (b - 1)
    if "delta_exp" not in explicit and "delta" not in explicit:
        config.delta_exp = b + 1
    if "prime_bits" not in explicit and "prime" not in explicit:
        config.prime_bits = (config.n + 2) * b


class ApproxConfig(ExperimentConfig):
    b: Optional[int] = Field(None, ge=2, description="Word size setting h, delta and p")
    window: Optional[int] = Field(
        None, ge=1, description="Points are drawn from [0, window); default [-h, h]"
    )

    @model_validator(mode="after")
    def check_approx(self) -> "ApproxConfig":
        if self.b is not None:
            _apply_word_size(self, self.b)
            if self.window is None and "h" not in self.model_fields_set:
                self.window = 1 << self.b
        if self.d < self.n + 1:
            raise ValueError("approximate recovery needs d >= n+1")
        return self

    def window_bounds(self) -> Optional[tuple[int, int]]:
        return None if self.window is None else (0, self.window)


class PredictConfig(ExperimentConfig):
    b: Optional[int] = Field(None, ge=2, description="Word size setting h and delta")
    d_min: Optional[int] = Field(None, ge=1, description="First d of the sweep")
    d_max: Optional[int] = Field(None, ge=1, description="Last d of the sweep")

    @model_validator(mode="after")
    def check_predict(self) -> "PredictConfig":
        if self.b is not None:
            _apply_word_size(self, self.b)
        if self.h < 1:
            raise ValueError("h must be at least 1")
        if self.d_min is None:
            self.d_min = self.n + 2
        if self.d_max is None:
            self.d_max = self.d_min + 200
        if self.d_min <= self.n + 1 or self.d_max < self.d_min:
            raise ValueError("need n+1 < d_min <= d_max")
        if self.prime is None and self.delta_exp is None:
            raise ValueError("large-p mode needs delta_exp (or b)")
        if self.prime is not None and self.delta is None and self.delta_exp is None:
            raise ValueError("give delta or delta_exp together with the prime")
        return self


class FlatConfig(ExperimentConfig):
    reference: bool = Field(False, description="Use the published flat instance")
    scan_multiple: Optional[int] = Field(
        None, ge=1, description="Also scan [0, scan_multiple*h) for the transition"
    )

    @model_validator(mode="after")
    def check_flat(self) -> "FlatConfig":
        if self.h < 1 or self.n < 1:
            raise ValueError("need h >= 1 and n >= 1")
        return self


class OscillateConfig(ExperimentConfig):
    reference: bool = Field(False, description="Use the published oscillating instance")
    d0: int = Field(0, description="d(0)")


class NfijConfig(ExperimentConfig):
    ell: int = Field(2, ge=1, description="Degree of F")
    i_length: int = Field(100, ge=1, description="H, the length of I = {1..H}")
    j_length: int = Field(100, ge=1, description="K, the length of J = {1..K}")
    s: Optional[int] = Field(
        None, ge=2, description="Use the scaled family with this base instead of random F"
    )
