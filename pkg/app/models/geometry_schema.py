import math
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.utils.units import C, HBAR, KB, matsubara_xi1


class Geometry(BaseModel):
    """Sphere of radius R at minimum gap a above the plate (SI lengths)"""
    model_config = ConfigDict(frozen=True)

    radius: float = Field(..., gt=0)  # R (m)
    gap: float = Field(..., gt=0)     # a (m)

    @property
    def x(self):
        """Inverse aspect ratio a/R"""
        return self.gap / self.radius

    @property
    def aspect_ratio(self):
        return self.radius / self.gap

    @property
    def z(self):
        """Bispherical parameter Z = 1/(1 + x + √(x(2+x)))"""
        x = self.x
        return 1.0 / (1.0 + x + math.sqrt(x * (2.0 + x)))

    @property
    def center_distance(self):
        """Distance from the sphere centre to the plate, R + a"""
        return self.radius + self.gap

    def with_gap(self, gap):
        return Geometry(radius=self.radius, gap=gap)


class MatsubaraGrid(BaseModel):
    """Matsubara frequencies ξ_n = n ξ_1 for n = 1..n_max"""
    model_config = ConfigDict(frozen=True)

    temperature: float = Field(..., gt=0)  # K
    n_max: int = Field(..., ge=1)

    @property
    def xi1(self):
        return matsubara_xi1(self.temperature)

    @property
    def frequencies(self):
        """ξ_1..ξ_n_max in rad/s"""
        return np.arange(1, self.n_max + 1, dtype=float) * self.xi1

    @property
    def thermal_length(self):
        return HBAR * C / (2.0 * math.pi * KB * self.temperature)

    def covers(self, gap):
        """True when n_max reaches the ceil(10 λ_T/a) truncation for this gap"""
        return self.n_max >= math.ceil(10.0 * self.thermal_length / gap)


class Polarization(str, Enum):
    TE = "TE"
    TM = "TM"


class PlateChannel(BaseModel):
    """One plane-wave reflection channel of the plate"""
    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=0)  # Matsubara index
    polarization: Polarization
    kperp: float = Field(..., ge=0)  # transverse wavevector (1/m)


class MultipoleTruncation(BaseModel):
    """Truncation of the multipole scattering sum"""
    model_config = ConfigDict(frozen=True)

    l_max: int = Field(..., ge=1)
    m_max: int = Field(..., ge=0)
    n_max: int = Field(..., ge=1)

    @model_validator(mode="after")
    def check_m_max(self):
        if self.m_max > self.l_max:
            raise ValueError(f"m_max ({self.m_max}) cannot exceed l_max ({self.l_max})")
        return self

    @classmethod
    def for_geometry(cls, geom, temperature, l_max: Optional[int] = None, m_max: Optional[int] = None,
                     n_max: Optional[int] = None):
        """Default truncation 6R/a, 6√(R/a), 10 λ_T/a with optional overrides.

        m_max is clipped to l_max when only l_max is overridden.
        """
        ratio = geom.aspect_ratio
        thermal = HBAR * C / (2.0 * math.pi * KB * temperature)
        l_max = l_max if l_max is not None else math.ceil(6.0 * ratio)
        if m_max is None:
            m_max = min(math.ceil(6.0 * math.sqrt(ratio)), l_max)
        n_max = n_max if n_max is not None else math.ceil(10.0 * thermal / geom.gap)
        return cls(l_max=l_max, m_max=m_max, n_max=n_max)
