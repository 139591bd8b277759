import os
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models.material_schema import MaterialKind


class OutputFormat(str, Enum):
    csv = "csv"
    json = "json"


class GridKind(str, Enum):
    linear = "linear"
    log = "log"


class RunConfig(BaseModel):
    """Batch run settings, in boundary units (μm, K, eV)"""
    model_config = ConfigDict(extra="forbid")

    radius_um: float = Field(5.0, gt=0)           # sphere radius R
    a_um: Optional[float] = Field(None, gt=0)     # single separation
    a_min_um: Optional[float] = Field(None, gt=0)  # separation range
    a_max_um: Optional[float] = Field(None, gt=0)
    a_points: Optional[int] = Field(None, ge=1)   # points in the range
    a_step_um: Optional[float] = Field(None, gt=0)  # or a fixed step (linear grids only)
    a_grid: GridKind = GridKind.linear
    temperature_k: float = Field(300.0, gt=0)
    material: MaterialKind = MaterialKind.drude
    plasma_ev: float = Field(9.0, gt=0)
    gamma_ev: float = Field(0.035, ge=0)
    optical_data: Optional[str] = None   # tabulated material file; shipped Au sample when unset
    theta_table: Optional[str] = None    # θ table file; shipped Au table when unset
    format: OutputFormat = OutputFormat.csv
    output: Optional[str] = None         # output path; stdout when unset
    l_max: Optional[int] = Field(None, ge=1)
    m_max: Optional[int] = Field(None, ge=0)
    n_max: Optional[int] = Field(None, ge=1)
    schedule: Optional[List[int]] = None  # ascending l_max values for converge
    target_delta: float = Field(1e-4, gt=0)
    oracle: bool = False                  # add the scattering-formula column to force tables
    threads: Optional[int] = Field(None, ge=1)

    @field_validator("schedule", mode="before")
    @classmethod
    def split_schedule(cls, value):
        if isinstance(value, str):
            return [int(part) for part in value.replace(",", " ").split()]
        return value

    @field_validator("optical_data", "theta_table")
    @classmethod
    def file_exists(cls, value):
        if value is not None and not os.path.isfile(value):
            raise ValueError(f"file not found: {value}")
        return value

    @model_validator(mode="after")
    def check_separations(self):
        ranged = self.a_min_um is not None or self.a_max_um is not None
        if self.a_um is not None and ranged:
            raise ValueError("give either a_um or a_min_um/a_max_um, not both")
        if ranged:
            if self.a_min_um is None or self.a_max_um is None:
                raise ValueError("a range needs both a_min_um and a_max_um")
            if self.a_min_um > self.a_max_um:
                raise ValueError(f"empty range: a_min_um {self.a_min_um} > a_max_um {self.a_max_um}")
            if self.a_points is None and self.a_step_um is None:
                raise ValueError("a range needs a_points or a_step_um")
            if self.a_step_um is not None and self.a_grid == GridKind.log:
                raise ValueError("a_step_um only applies to linear grids; use a_points for log grids")
        if self.schedule is not None:
            if not self.schedule or any(b <= a for a, b in zip(self.schedule, self.schedule[1:])):
                raise ValueError(f"schedule must be strictly ascending, got {self.schedule}")
        return self

    def separations_um(self):
        """Requested separations in μm; empty when none were given"""
        if self.a_um is not None:
            return [self.a_um]
        if self.a_min_um is None:
            return []
        lo, hi = self.a_min_um, self.a_max_um
        if self.a_step_um is not None:
            count = int((hi - lo) / self.a_step_um + 1e-9) + 1
            return [round(lo + k * self.a_step_um, 12) for k in range(count)]
        if self.a_points == 1:
            return [lo]
        if self.a_grid == GridKind.log:
            ratio = (hi / lo) ** (1.0 / (self.a_points - 1))
            return [lo * ratio ** k for k in range(self.a_points - 1)] + [hi]
        step = (hi - lo) / (self.a_points - 1)
        return [lo + k * step for k in range(self.a_points - 1)] + [hi]
