from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.geometry_schema import Geometry, MultipoleTruncation


class ThetaTable(BaseModel):
    """Curvature correction coefficients θ (force) and θ̃ (gradient) against separation"""
    model_config = ConfigDict(frozen=True)

    rows: Tuple[Tuple[float, float, float], ...]  # (a in m, θ, θ̃), ascending in a
    material: str = "Au"
    temperature: float = Field(300.0, gt=0)  # K
    source: str = ""

    @model_validator(mode="after")
    def check_rows(self):
        if len(self.rows) < 2:
            raise ValueError(f"a theta table needs at least 2 rows, got {len(self.rows)}")
        previous = 0.0
        for index, (gap, theta, theta_tilde) in enumerate(self.rows, start=1):
            if not gap > previous:
                raise ValueError(f"row {index}: separations must be positive and strictly increasing")
            if not (0.0 < theta < 1.0 and 0.0 < theta_tilde < 1.0):
                raise ValueError(f"row {index}: coefficients must lie in (0, 1)")
            previous = gap
        return self

    @property
    def gaps(self):
        return np.array([row[0] for row in self.rows])

    @property
    def a_range(self):
        return self.rows[0][0], self.rows[-1][0]


class ForceResult(BaseModel):
    """Approximate force or gradient with its channel breakdown.

    total = n0_exact + n_pos_pfa * de_correction_factor, evaluated with exactly
    that expression, so the recombination is bit-reproducible.
    """
    quantity: str                 # "force" (N) or "gradient" (N/m)
    total: float
    n0_exact: float               # exact classical n=0 channel
    n_pos_pfa: float              # PFA of the n>0 modes, uncorrected
    theta: float                  # θ for forces, θ̃ for gradients
    de_correction_factor: float   # 1 − θ a/R
    pfa_total: float              # full PFA including the n=0 plate term
    geometry: Geometry
    temperature: float            # K
    material: str
    n_max: int
    n0_share: float               # n0_exact / total
    thermal_length_ratio: float   # λ_T / a

    @model_validator(mode="after")
    def check_recombination(self):
        if self.total != self.n0_exact + self.n_pos_pfa * self.de_correction_factor:
            raise ValueError("total does not recombine from its breakdown")
        return self

    @property
    def magnitude(self):
        """Attractive magnitude |total|"""
        return abs(self.total)

    @property
    def pfa_deviation(self):
        """Relative deviation of the approximate total from the full PFA"""
        return (self.total - self.pfa_total) / self.pfa_total


class OracleResult(BaseModel):
    """Scattering-formula force or gradient (n>0 modes) plus the exact n=0 channel"""
    quantity: str
    total: float
    n0_exact: float
    n_pos: float
    derivative_error: float  # Richardson error estimate of the n>0 derivative
    geometry: Geometry
    temperature: float
    material: str
    truncation: MultipoleTruncation


class RoundTripBlock(BaseModel):
    """Round-trip matrix of one (n, m) block, indexed by (polarization, l).

    Rows and columns run over l = max(1, m)..l_max for TE, then the same range
    for TM. The matrix is similar to the physical round-trip operator, so its
    determinant and spectrum are the same.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: int = Field(..., ge=1)
    m: int
    l_min: int
    l_max: int
    matrix: np.ndarray

    @property
    def dimension(self):
        return self.matrix.shape[0]

    @property
    def spectral_radius(self):
        if self.matrix.size == 0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvals(self.matrix))))


class ConvergenceReport(BaseModel):
    """Oracle values along an ascending l_max schedule"""
    quantity: str
    l_max_values: List[int]
    values: List[float]
    deltas: List[Optional[float]]   # relative change from the previous entry; None for the first
    target_delta: float
    converged_l_max: Optional[int]  # smallest l_max whose delta is below target_delta
    geometry: Geometry
    temperature: float
    material: str
