"""Result and configuration models written to JSON lines."""

from __future__ import annotations

import math
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .groups import parse_group


class NcLpReport(BaseModel):
    """Noncommutative Lᵖ norm of a group-algebra element along a radius sweep."""

    p: float
    radii: List[int]
    values: List[float]
    extrapolation: Optional[float] = None
    converged: bool = False
    diverging: bool = False

    @field_validator("values")
    @classmethod
    def nonnegative(cls, v: List[float]) -> List[float]:
        if any(x < 0 for x in v):
            raise ValueError("nc-Lp values must be nonnegative")
        return v


class ApproxKernelRecord(BaseModel):
    n: int
    radius: int
    scale: float = Field(description="Factor the element was divided by")
    y_norm: float = Field(description="max f_n over the truncated spectrum")
    ratio: float = Field(description="|L_a y_n| / |y_n| in operator norm")
    delta_e_ratio: float = Field(description="Same ratio on the delta_e column of y_n")
    certified_sup: float = Field(description="max sqrt(lambda) f_n(lambda)")
    bound: float = Field(description="1/(1+n)")
    lambda_min: float

    @field_validator("ratio", "delta_e_ratio")
    @classmethod
    def nonnegative(cls, v: float) -> float:
        if v < 0:
            raise ValueError("ratios are nonnegative")
        return v


class ProbeRecord(BaseModel):
    """One radius of a modulus plus range-distance sweep."""

    group: str
    element: str
    p: float
    radius: int
    distance: float = Field(description="Certified upper l1 distance to the target")
    lower: float = Field(description="LP lower bound on the same distance")
    argmin_norm: float
    directions: int
    duality_gap: float
    modulus: float = Field(description="Upper estimate of the injectivity modulus")


class WillisRecord(ProbeRecord):
    t_a: Tuple[float, float]
    t_b: Tuple[float, float]

    @field_validator("t_a", "t_b")
    @classmethod
    def unimodular(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if abs(math.hypot(*v) - 1) > 1e-12:
            raise ValueError(f"coefficient {v} is not of modulus 1")
        return v


class TrendSummary(BaseModel):
    radii: List[int]
    distances: List[float]
    monotone: bool
    plateau: bool
    spread: Optional[float] = None


class HerzRecord(BaseModel):
    group: str
    element: str
    p: float
    radius: int
    samples: int
    norm_lower: float
    norm_upper: float
    max_ratio: float
    constant_floor: float = Field(description="Empirical C_p >= max_ratio / norm_upper")
    cp_candidate: float
    violation: bool

    @model_validator(mode="after")
    def amenable_group(self) -> "HerzRecord":
        if not parse_group(self.group).amenable:
            raise ValueError(f"{self.group} is not amenable")
        return self


class FiniteSurjunctivityRecord(BaseModel):
    group: str
    element: str
    order: int
    rank: int
    injective: bool
    surjective: bool


class ExperimentRecord(BaseModel):
    """Container for exploratory runs."""

    experiment: str
    group: str
    label: str
    element: str
    p: Optional[float] = None
    note: str = ""
    records: List[Dict[str, Any]] = Field(default_factory=list)
    summary: Optional[Dict[str, Any]] = None


class ExperimentConfig(BaseModel):
    """Resolved configuration of one CLI run."""

    model_config = ConfigDict(ser_json_inf_nan="strings")

    command: str
    group: str = "F2"
    elem: Optional[str] = None
    p: float = 1.0
    radii: List[int] = Field(default_factory=lambda: [1, 2, 3])
    r: int = 4
    n: List[int] = Field(default_factory=lambda: [1, 10, 100])
    ta: str = "w"
    tb: str = "w2"
    samples: int = 100
    restarts: int = 4
    points: int = 64
    seed: int = 0
    exact: bool = False
    matrix: Optional[str] = None
    out: Optional[str] = None
    csv: Optional[str] = None
    plot_dir: Optional[str] = None
    tolerances: Dict[str, float] = Field(default_factory=dict)

    @field_validator("radii")
    @classmethod
    def sorted_radii(cls, v: List[int]) -> List[int]:
        if any(r < 0 for r in v):
            raise ValueError("radii must be >= 0")
        return sorted(set(v))
