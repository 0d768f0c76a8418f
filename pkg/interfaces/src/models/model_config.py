"""Model descriptors parsed from JSON documents."""

import json
from pathlib import Path
from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..lattice.geometry import MAX_ALPHABET_SIZE
from .potential import Potential, dyson_truncated_potential, ising_potential, potts_potential


class ModelParams(BaseModel):
    """``{model, beta, h, J, N, alpha, R, d}``; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    model: Literal["ising", "potts", "dyson"]
    beta: float = Field(ge=0)
    h: float = 0.0
    J: float = 1.0
    N: int = Field(default=2, ge=2, le=MAX_ALPHABET_SIZE)
    alpha: float = Field(default=2.0, gt=1)
    R: int = Field(default=1, ge=1)
    d: int = Field(default=2, ge=1)

    @model_validator(mode="after")
    def _dyson_is_one_dimensional(self) -> "ModelParams":
        if self.model == "dyson" and self.d != 1:
            raise ValueError("the Dyson model requires d = 1")
        return self

    @property
    def alphabet_size(self) -> int:
        return self.N if self.model == "potts" else 2

    def with_beta(self, beta: float) -> "ModelParams":
        return self.model_copy(update={"beta": beta})


def build_potential(params: ModelParams) -> Potential:
    """Construct the potential a descriptor names."""
    if params.model == "ising":
        return ising_potential(params.beta, params.h, d=params.d, J=params.J)
    if params.model == "potts":
        return potts_potential(params.beta, params.N, d=params.d)
    return dyson_truncated_potential(params.beta, params.alpha, params.R, d=params.d)


def load_model_params(source: Union[str, Path, dict]) -> ModelParams:
    """Parse a model descriptor from a dict, a JSON string or a JSON file path."""
    if isinstance(source, dict):
        return ModelParams.model_validate(source)
    path = Path(source)
    if path.suffix == ".json" and path.exists():
        with open(path, "r", encoding="utf-8") as f:
            return ModelParams.model_validate(json.load(f))
    return ModelParams.model_validate_json(str(source))
