"""Strict JSON run configuration."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import ModelError
from .model import BlochModel, RealSpaceModel, make_hatano_nelson

TASKS = ("spectrum", "winding", "skin", "phase-diagram", "thirdq-check",
         "oracle-check", "dynamics", "figure2")
Task = Literal["spectrum", "winding", "skin", "phase-diagram", "thirdq-check",
               "oracle-check", "dynamics", "figure2"]

ComplexPair = Tuple[float, float]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelConfig(_Strict):
    type: Literal["hatano_nelson", "custom"] = "hatano_nelson"
    t: float = 1.0
    gamma_l: float = Field(0.0, ge=0)
    gamma_g: float = Field(0.0, ge=0)
    n_sites: int = Field(40, ge=1)
    boundary: Literal["periodic", "open"] = "periodic"
    variant: Literal["standard", "flipped_gain"] = "standard"
    hopping: Optional[List[List[ComplexPair]]] = None
    loss_coeffs: Optional[List[List[ComplexPair]]] = None
    gain_coeffs: Optional[List[List[ComplexPair]]] = None

    @model_validator(mode="after")
    def _check_kind(self):
        custom = (self.hopping, self.loss_coeffs, self.gain_coeffs)
        if self.type == "custom" and self.hopping is None:
            raise ValueError("custom models require 'hopping'")
        if self.type == "hatano_nelson" and any(c is not None for c in custom):
            raise ValueError("hopping/loss_coeffs/gain_coeffs are only valid for custom models")
        return self

    def build(self, boundary: str | None = None) -> tuple[RealSpaceModel, BlochModel | None]:
        """Real-space model (and Bloch model for translation-invariant chains)."""
        boundary = boundary or self.boundary
        if self.type == "hatano_nelson":
            return make_hatano_nelson(self.t, self.gamma_l, self.gamma_g, self.n_sites,
                                      boundary, self.variant)

        def cplx(rows):
            if not rows:
                return np.zeros((0, len(self.hopping)), dtype=complex)
            a = np.array(rows, dtype=float)
            if a.ndim != 3:
                raise ModelError("coefficient rows must have equal length")
            return a[..., 0] + 1j * a[..., 1]

        return RealSpaceModel(cplx(self.hopping), cplx(self.loss_coeffs),
                              cplx(self.gain_coeffs), boundary), None


def _default_axis() -> list[float]:
    return [round(0.1 * i, 10) for i in range(11)]


class RunConfig(_Strict):
    model: ModelConfig = Field(default_factory=ModelConfig)
    task: Task
    k_grid: int = Field(1024, ge=64)
    matrix: Literal["post", "eff", "z"] = "eff"
    e_ref: Union[Literal["centroid"], ComplexPair] = "centroid"
    gamma_l_values: List[float] = Field(default_factory=_default_axis, min_length=1)
    gamma_g_values: List[float] = Field(default_factory=_default_axis, min_length=1)
    t_grid: Optional[List[float]] = None
    t_max: float = Field(5.0, gt=0)
    n_times: int = Field(50, ge=1)
    occupied: List[int] = Field(default_factory=lambda: [1])
    dynamics_method: Literal["auto", "exact", "covariance"] = "auto"
    skin_threshold: float = Field(0.05, gt=0)
    prefix: Optional[str] = None
    out_dir: str = "."

    @field_validator("prefix")
    @classmethod
    def _plain_prefix(cls, v):
        if v is not None and (not v or "/" in v or "\\" in v):
            raise ValueError("prefix must be a plain file-name stem")
        return v

    @model_validator(mode="after")
    def _check(self):
        if any(g < 0 for g in self.gamma_l_values + self.gamma_g_values):
            raise ValueError("rate grids must be non-negative")
        n = self.model.n_sites if self.model.type == "hatano_nelson" else len(self.model.hopping or [])
        if any(not 1 <= s <= n for s in self.occupied) or len(set(self.occupied)) != len(self.occupied):
            raise ValueError(f"occupied sites must be distinct and within 1..{n}")
        if self.t_grid is not None:
            t = np.asarray(self.t_grid)
            if t.size == 0 or np.any(t < 0) or np.any(np.diff(t) < 0):
                raise ValueError("t_grid must be non-empty, non-negative and ascending")
        return self

    def times(self) -> np.ndarray:
        if self.t_grid is not None:
            return np.asarray(self.t_grid, dtype=float)
        return np.linspace(0.0, self.t_max, self.n_times)

    def canonical(self) -> dict:
        """Parameters that determine results (output location excluded)."""
        return self.model_dump(mode="json", exclude={"out_dir"})

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def load_config(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config root must be a JSON object")
    return data
