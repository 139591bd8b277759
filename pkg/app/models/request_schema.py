from typing import Optional

from pydantic import BaseModel, Field

from app.models.material_schema import MaterialKind


class ForceRequest(BaseModel):
    """What clients send to compute an approximate force or gradient"""
    radius_um: float = Field(..., gt=0)            # sphere radius
    a_um: float = Field(..., gt=0)                 # minimum separation
    temperature_k: float = Field(300.0, gt=0)
    material: MaterialKind = MaterialKind.drude    # tabulated uses the shipped Au sample
    plasma_ev: float = Field(9.0, gt=0)
    gamma_ev: float = Field(0.035, ge=0)


class OracleRequest(ForceRequest):
    """Force request plus optional multipole truncation overrides"""
    l_max: Optional[int] = Field(None, ge=1)
    m_max: Optional[int] = Field(None, ge=0)
    n_max: Optional[int] = Field(None, ge=1)


class ThetaResponse(BaseModel):
    """Curvature coefficients at one separation"""
    a_um: float
    theta: float        # force coefficient
    theta_tilde: float  # gradient coefficient


class PressureResponse(BaseModel):
    """Parallel-plate Lifshitz pressure (attractive magnitude)"""
    a_um: float
    temperature_k: float
    material: str
    pressure_mpa: float        # full Matsubara sum including n=0
    zero_mode_mpa: float       # n=0 term alone
    ideal_pressure_mpa: float  # T = 0 perfect mirrors
    n_max: int


class ComparisonResponse(BaseModel):
    """Approximate formula and PFA against the scattering oracle"""
    a_um: float
    radius_um: float
    approx_n: float        # N
    oracle_n: float        # N
    pfa_n: float           # N
    approx_error_percent: float
    pfa_error_percent: float
    l_max: int
    m_max: int
    n_max: int
