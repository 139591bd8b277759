from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator


class MaterialKind(str, Enum):
    """How ε(iξ) is obtained"""
    drude = "drude"
    plasma = "plasma"
    tabulated = "tabulated"
    lorentz_drude = "lorentz_drude"


class DrudeParameters(BaseModel):
    """Drude term used to extrapolate tabulated data below its first frequency"""
    model_config = ConfigDict(frozen=True)

    plasma_frequency: float = Field(..., ge=0)  # rad/s; 0 switches the extrapolation off
    relaxation_rate: float = Field(0.0, ge=0)   # rad/s


class LorentzOscillator(BaseModel):
    """One interband oscillator Ω²/(ω_0² + ξ² + ξΓ) at imaginary frequency"""
    model_config = ConfigDict(frozen=True)

    strength: float = Field(..., ge=0)   # oscillator plasma frequency Ω (rad/s)
    resonance: float = Field(..., gt=0)  # ω_0 (rad/s)
    damping: float = Field(..., ge=0)    # Γ (rad/s)


class OpticalDataTable(BaseModel):
    """Imaginary part of the permittivity on the real frequency axis"""
    model_config = ConfigDict(frozen=True)

    rows: Tuple[Tuple[float, float], ...]  # (ω in rad/s, ε'' >= 0), strictly increasing in ω
    low_freq_extrapolation: DrudeParameters
    source: str = ""  # provenance notes carried over from the file header

    _frequencies: np.ndarray = PrivateAttr()
    _eps2: np.ndarray = PrivateAttr()

    @model_validator(mode="after")
    def check_rows(self):
        if len(self.rows) < 2:
            raise ValueError(f"an optical table needs at least 2 rows, got {len(self.rows)}")
        previous = 0.0
        for index, (omega, eps2) in enumerate(self.rows, start=1):
            if not omega > previous:
                raise ValueError(f"row {index}: frequencies must be positive and strictly increasing")
            if eps2 < 0:
                raise ValueError(f"row {index}: negative eps'' {eps2}")
            previous = omega
        return self

    def model_post_init(self, __context):
        data = np.array(self.rows, dtype=float)
        data.setflags(write=False)
        self._frequencies = data[:, 0]
        self._eps2 = data[:, 1]

    @property
    def frequencies(self):
        return self._frequencies

    @property
    def eps2(self):
        return self._eps2


class MaterialModel(BaseModel):
    """Dielectric response of sphere and plate (same material for both)"""
    model_config = ConfigDict(frozen=True)

    kind: MaterialKind
    plasma_frequency: float = Field(..., gt=0)  # ωp (rad/s)
    relaxation_rate: float = Field(0.0, ge=0)   # γ (rad/s), drude and lorentz_drude only
    data: Optional[OpticalDataTable] = None     # tabulated only
    oscillators: Tuple[LorentzOscillator, ...] = ()  # lorentz_drude only
    name: str = "Au"

    @model_validator(mode="after")
    def check_kind(self):
        if self.kind == MaterialKind.tabulated and self.data is None:
            raise ValueError("a tabulated material needs an optical data table")
        if self.kind == MaterialKind.plasma and self.relaxation_rate != 0.0:
            raise ValueError("the plasma model has no relaxation rate")
        return self

    @property
    def label(self):
        """Short description used in output metadata"""
        if self.kind == MaterialKind.tabulated:
            return f"{self.name}:tabulated({len(self.data.rows)} rows)"
        return f"{self.name}:{self.kind.value}"
