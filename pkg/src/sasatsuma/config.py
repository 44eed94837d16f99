"""Run configuration schema (one JSON document per run)."""

from __future__ import annotations

import hashlib
import json
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import InvalidInputError

SCHEMA_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DatumSpec(_Strict):
    """Either a named analytic profile or a file of ``x, Re u0, Im u0`` records."""

    profile: Optional[Literal["gaussian", "sech", "soliton", "zero"]] = None
    params: dict = Field(default_factory=dict)
    file: Optional[str] = None
    n: int = 512
    x_range: Optional[Tuple[float, float]] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.profile is None) == (self.file is None):
            raise ValueError("give exactly one of 'profile' or 'file'")
        return self


class ScatterSpec(_Strict):
    K: float = 12.0
    n_k: int = 1025
    adapt: bool = True


class Lattice(_Strict):
    start: float
    stop: float
    num: int = Field(ge=1)


class ReconstructSpec(_Strict):
    record: str
    x: Lattice
    t: List[float] = Field(default_factory=lambda: [0.0])
    nodes: int = 384
    scale: float = 4.0


class PainleveSpec(_Strict):
    s: Tuple[float, float]
    y_min: float = -8.0
    y_max: float = 4.0
    dy: float = 0.01
    window: Tuple[float, float] = (-6.0, 2.0)
    ode_anchor: float = 0.0


class SpongeSpec(_Strict):
    start: float
    ramp: float
    strength: float


class EvolveSpec(_Strict):
    L: float = 80.0
    n: int = 1024
    dt: float = 1e-3
    T: float = 1.0
    dealias_fraction: float = 2.0 / 3.0
    sponge: Optional[SpongeSpec] = None
    check_edges: bool = True
    snapshots: List[float] = Field(default_factory=list)


class AsymptoticsSpec(_Strict):
    M: float = 1.0
    t_list: List[float] = Field(default_factory=lambda: [25.0, 50.0, 100.0, 200.0])
    L: float = 400.0
    n: int = 2048
    dt: float = 0.01
    sponge_start: float = 100.0
    sponge_ramp: float = 40.0
    sponge_strength: float = 5.0


class RunConfig(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    datum: Optional[DatumSpec] = None
    scatter: Optional[ScatterSpec] = None
    reconstruct: Optional[ReconstructSpec] = None
    painleve: Optional[PainleveSpec] = None
    evolve: Optional[EvolveSpec] = None
    asymptotics: Optional[AsymptoticsSpec] = None
    tolerances: dict = Field(default_factory=dict)
    threads: Optional[int] = None


def load_config(text):
    """Parse and validate a JSON config; unknown keys are rejected."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"config is not valid JSON: {exc}") from exc
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise InvalidInputError(f"config rejected: {exc}") from exc


def config_hash(cfg: RunConfig):
    canon = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()
