from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field

from app.model.schema import NoiseDistribution


class Settings(BaseSettings):
    PROJECT_NAME: str = "noisy-interp"
    LOGFIRE_TOKEN: str | None = None
    LOGFIRE_ENVIRONMENT: str = "local"
    LOG_CONSOLE: bool = True
    LOG_LEVEL: str = "info"

    MILLER_RABIN_ROUNDS: int = Field(64, ge=64)
    LLL_DELTA: str = "0.99"
    ENUM_MAX_DIM: int = 64
    ENUM_MAX_NODES: int = 200_000
    VERIFY_CVP_MEMBERSHIP: bool = True
    NOISE_DISTRIBUTION: NoiseDistribution = NoiseDistribution.UNIFORM

    GRID_ENUMERATION_LIMIT: int = 2**20
    GRID_SAMPLE_SIZE: int = 1024
    NFIJ_BRUTE_FORCE_CAP: int = 10**7
    DETECTOR_SCAN_CAP: int = 10**6
    FLAT_CHECK_SAMPLES: int = 10**4
    SCALED_CHECK_LIMIT: int = 10**4
    FLAT_TRANSITION_THRESHOLD: float = 1e-3

    LOG_PRECISION_DIGITS: int = Field(40, ge=30)
    REGIME_EPSILON: float = 0.05
    WORKERS: int = 1

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", case_sensitive=False
    )


settings = Settings()
