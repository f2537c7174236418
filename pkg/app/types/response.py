from typing import Optional

from pydantic import BaseModel, Field

from app.model.schema import CvpMethod


class TrialOutcome(BaseModel):
    seed: int = Field(..., description="Trial seed")
    d: int = Field(..., description="Number of observations")
    success: bool = Field(..., description="Recovered polynomial equals the secret")
    verified: bool = Field(..., description="Every residual is within delta")
    cvp_sq_distance: str = Field(..., description="Exact squared distance as a fraction")
    method: CvpMethod
    exact: bool
    success_fraction: Optional[float] = Field(
        None, description="Share of the profile grid within delta (approx only)"
    )


class AttackSummary(BaseModel):
    n: int
    k: int
    h: int
    delta: int
    d: int
    seed: int
    success: bool = Field(..., description="Every trial recovered the secret")
    cvp_sq_distance: Optional[str] = Field(
        None, description="Squared distance of the single run, if there was one"
    )
    success_fraction: Optional[float] = None
    trials: int = 1
    successes: int = 0
    wilson_low: Optional[float] = None
    wilson_high: Optional[float] = None


class PredictRow(BaseModel):
    d: int
    s: str = Field(..., description="S at LOG_PRECISION_DIGITS digits")
    in_regime: bool = Field(..., description="d <= h/10")
