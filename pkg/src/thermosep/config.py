"""Run configuration: strict JSON schema validated with pydantic."""

from __future__ import annotations

import json
import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

TASKS = (
    "gibbs_scan",
    "order_classify",
    "hightemp_report",
    "quasifree_scan",
    "continuum_scaling",
    "fluctuation_sweep",
)


class ConfigError(ValueError):
    """Malformed or invalid configuration (exit code 1)."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _beta_list(v: list, allow_inf: bool) -> list[float]:
    out = []
    for b in v:
        x = float(b)
        if math.isnan(x) or x < 0:
            raise ValueError(f"beta values must be >= 0, got {b!r}")
        if math.isinf(x) and not allow_inf:
            raise ValueError("beta grid must be finite for this task")
        out.append(x)
    if not out:
        raise ValueError("grid must be nonempty")
    return out


class TermConfig(_Strict):
    coefficient: float
    factors: list[tuple[int, str]]


class ModelConfig(_Strict):
    preset: Optional[str] = None
    n_sites: int = Field(ge=2, le=12)
    boundary: Literal["periodic", "open"] = "periodic"
    params: dict[str, float] = Field(default_factory=dict)
    terms: Optional[list[TermConfig]] = None
    site_dim: int = Field(default=2, ge=2)
    name: Optional[str] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.preset is None) == (self.terms is None):
            raise ValueError("give exactly one of 'preset' or 'terms'")
        return self


class Tolerances(_Strict):
    ppt: float = Field(default=1e-10, gt=0)
    beta: float = Field(default=1e-6, gt=0)


class GibbsScanConfig(_Strict):
    model: ModelConfig
    beta: list[float]
    max_region: int = Field(default=2, ge=1)
    contiguous: bool = True
    pairs: Optional[list[tuple[list[int], list[int]]]] = None

    @field_validator("beta", mode="before")
    @classmethod
    def _b(cls, v):
        return _beta_list(v, False)


class OrderClassifyConfig(_Strict):
    model: ModelConfig
    beta: list[float]
    N_max: int = Field(default=2, ge=1)
    contiguous: bool = True
    max_pairs: int = Field(default=20000, ge=1)

    @field_validator("beta", mode="before")
    @classmethod
    def _b(cls, v):
        return _beta_list(v, False)


class HightempConfig(_Strict):
    models: list[ModelConfig] = Field(min_length=1)
    max_region: int = Field(default=2, ge=1)
    beta_hi: float = Field(default=10.0, gt=0, le=50)
    n_grid: int = Field(default=64, ge=2)


class QuasifreeConfig(_Strict):
    statistics: Literal["fermi", "bose"] = "fermi"
    n_modes: Optional[int] = Field(default=None, ge=2, le=256)
    hopping: float = 1.0
    onsite: float | list[float] = 0.0
    periodic: bool = False
    V: Optional[list[list[float]]] = None
    mu: float = 1.0
    beta: list[float]
    regions: list[tuple[list[int], list[int]]] = Field(min_length=1)
    bisect_tol: float = Field(default=1e-4, gt=0)

    @field_validator("beta", mode="before")
    @classmethod
    def _b(cls, v):
        return _beta_list(v, False)

    @model_validator(mode="after")
    def _source(self):
        if (self.n_modes is None) == (self.V is None):
            raise ValueError("give exactly one of 'n_modes' (hopping chain) or 'V'")
        return self


class ContinuumConfig(_Strict):
    families: list[Literal["gaussian", "cosine", "hermite1"]] = Field(min_length=1)
    beta: list[float]
    variant: Literal["exact", "literal"] = "exact"
    negative_control: bool = True
    tol: float = Field(default=1e-6, gt=0)

    @field_validator("beta", mode="before")
    @classmethod
    def _b(cls, v):
        out = _beta_list(v, False)
        if min(out) <= 0:
            raise ValueError("continuum scaling needs beta > 0")
        return out


class FluctuationConfig(_Strict):
    c: list[float] = Field(min_length=1)
    lam: list[float] = Field(alias="lambda", min_length=1)
    alpha: list[float] = Field(min_length=1)
    beta: list[float]

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @field_validator("alpha")
    @classmethod
    def _a(cls, v):
        for a in v:
            if not 0.0 < a < 1.0:
                raise ValueError(f"alpha must lie in (0, 1), got {a}")
        return v

    @field_validator("beta", mode="before")
    @classmethod
    def _b(cls, v):
        return _beta_list(v, True)


SECTIONS = {
    "gibbs_scan": GibbsScanConfig,
    "order_classify": OrderClassifyConfig,
    "hightemp_report": HightempConfig,
    "quasifree_scan": QuasifreeConfig,
    "continuum_scaling": ContinuumConfig,
    "fluctuation_sweep": FluctuationConfig,
}


class RunConfig(_Strict):
    task: Literal[TASKS]
    params: dict
    tolerances: Tolerances = Field(default_factory=Tolerances)
    out: Optional[str] = None
    workers: Optional[int] = Field(default=None, ge=1)
    raw_paper_forms: bool = False

    @property
    def section(self):
        return SECTIONS[self.task].model_validate(self.params)

    @model_validator(mode="after")
    def _check_section(self):
        SECTIONS[self.task].model_validate(self.params)
        return self


def _format_validation(exc: ValidationError) -> str:
    lines = []
    for e in exc.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config; errors carry line/column or the field path."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from exc
