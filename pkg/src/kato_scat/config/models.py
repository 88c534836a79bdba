# src/kato_scat/config/models.py

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from kato_scat.config.parser import parse_intervals, split_list


def _float_list(value):
    if isinstance(value, str):
        return [float(item) for item in split_list(value)]
    return value


def _complex_pairs(value):
    """'0.5j, 1+1j' or [[re, im], ...] -> [[re, im], ...]."""
    if isinstance(value, str):
        value = [complex(item) for item in split_list(value)]
    pairs = []
    for item in value:
        if isinstance(item, (list, tuple)):
            pairs.append([float(item[0]), float(item[1])])
        else:
            item = complex(item)
            pairs.append([item.real, item.imag])
    return pairs


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PotentialSection(Section):
    family: Literal["zero", "step", "stack", "exponential", "gaussian", "sampled"] = "step"
    v0: float = -1.9
    a: float = Field(1.0, gt=0)
    theta: float = 0.0
    intervals: list[tuple[float, float, float, float]] = Field(default_factory=list)
    amplitude_re: float = -1.0
    amplitude_im: float = 0.0
    rate: float = Field(1.0, gt=0)
    width: float = Field(1.0, gt=0)
    csv: Path | None = None
    tail_kind: Literal["exponential", "power"] = "exponential"
    tail_rate: float = Field(1.0, gt=0)

    @field_validator("intervals", mode="before")
    @classmethod
    def split_intervals(cls, value):
        return parse_intervals(value) if isinstance(value, str) else value

    @model_validator(mode="after")
    def check_sources(self):
        if self.family == "sampled":
            if self.csv is None:
                raise ValueError("family 'sampled' needs a csv path")
            if not self.csv.is_file():
                raise ValueError(f"potential csv not found: {self.csv}")
        if self.family == "stack" and not self.intervals:
            raise ValueError("family 'stack' needs at least one interval")
        return self


class GridSection(Section):
    x_max: float | None = Field(None, gt=0)
    n: int = Field(2000, ge=64)
    n_u: int = Field(4096, ge=64)
    order: int = Field(10, ge=2)


class TolerancesSection(Section):
    grid: float = 1e-4
    tail: float = 1e-8
    residual: float = 1e-10
    contour_margin: float = 1e-2
    singular: float = 1e-3
    quadrature: float = 1e-3
    jordan: float = 1e-8
    step: float = 1e-4
    inverse: float = 1e-3
    completeness: float = 5e-3
    kernel: float = 1e-4
    intertwining: float = 1e-3
    spectral_mapping: float = 1e-2
    nonstationary: float = 1e-2
    semigroup: float = 1e-2
    determinant: float = 1e-6

    @field_validator("*")
    @classmethod
    def check_positive(cls, value, info):
        if value <= 0:
            raise ValueError(f"tolerance '{info.field_name}' must be positive, got {value}")
        return value


class LatticeSection(Section):
    big_lambda: float = Field(400.0, gt=0)
    n_kappa: int = Field(1200, ge=10)
    n_negative: int = Field(200, ge=10)
    lambda_min: float = Field(1e-4, gt=0)
    eps_ladder: list[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025, 0.0125])
    method: Literal["forms", "spectral"] = "forms"
    k_values: list[list[float]] = Field(
        default_factory=lambda: [[0.0, 0.5], [0.0, 1.0], [0.0, 2.0], [1.0, 1.0], [2.0, 0.5]]
    )
    k_max: float = Field(20.0, gt=0)

    @field_validator("eps_ladder", mode="before")
    @classmethod
    def split_ladder(cls, value):
        return _float_list(value)

    @field_validator("k_values", mode="before")
    @classmethod
    def split_wavenumbers(cls, value):
        return _complex_pairs(value)

    @field_validator("eps_ladder")
    @classmethod
    def check_ladder(cls, value):
        if not value or any(item <= 0 for item in value):
            raise ValueError("eps ladder needs positive entries")
        return value

    @property
    def ks(self) -> list[complex]:
        return [complex(re, im) for re, im in self.k_values]


class EvolutionSection(Section):
    t_ladder: list[float] = Field(default_factory=lambda: [2.0, 4.0, 8.0, 16.0])
    dt: float = Field(5e-3, gt=0)
    x_max: float | None = Field(None, gt=0)
    packet_center: float | None = None
    packet_width: float = Field(1.5, gt=0)
    packet_momentum: float = 4.0

    @field_validator("t_ladder", mode="before")
    @classmethod
    def split_ladder(cls, value):
        return _float_list(value)


class RuntimeSection(Section):
    threads: int = Field(1, ge=1)
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    store: Path | None = None
    out: Path | None = None

    @field_validator("log_level", mode="before")
    @classmethod
    def upper_case(cls, value):
        return value.upper() if isinstance(value, str) else value


class RunConfig(Section):
    """Fully resolved configuration of one command; embedded verbatim in every report."""

    command: str = "spectrum"
    potential: PotentialSection = Field(default_factory=PotentialSection)
    grid: GridSection = Field(default_factory=GridSection)
    tolerances: TolerancesSection = Field(default_factory=TolerancesSection)
    lattice: LatticeSection = Field(default_factory=LatticeSection)
    evolution: EvolutionSection = Field(default_factory=EvolutionSection)
    runtime: RuntimeSection = Field(default_factory=RuntimeSection)

    def canonical_json(self) -> str:
        """Config JSON without runtime plumbing; the basis of report hashes."""
        return self.model_dump_json(exclude={"runtime"})
