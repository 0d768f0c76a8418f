"""Experiment specifications: the JSON documents the scenario runner executes."""

import json
from pathlib import Path
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..lattice.geometry import Boundary, Geometry, Window
from ..models.model_config import ModelParams
from ..sampling.sampler import KernelKind

SCENARIOS = (
    "certify",
    "gcb-test",
    "blowup",
    "frequency-lemma",
    "entropy-probe",
    "critical-variance",
    "phase-coexistence",
    "deviation-rates",
)

ScenarioName = Literal[
    "certify",
    "gcb-test",
    "blowup",
    "frequency-lemma",
    "entropy-probe",
    "critical-variance",
    "phase-coexistence",
    "deviation-rates",
]

BoundaryName = Literal["plus", "minus"]


def make_boundary(name: Optional[str], alphabet_size: int) -> Optional[Boundary]:
    if name is None:
        return None
    return Boundary.plus(alphabet_size) if name == "plus" else Boundary.minus()


class GeometrySpec(BaseModel):
    """Window shape: geometry kind, radius n, optional explicit side, boundary for fixed cubes."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: str = "fixed"
    n: int = Field(default=1, ge=0)
    side: Optional[int] = Field(default=None, ge=1)
    boundary: Optional[BoundaryName] = None

    @field_validator("kind")
    @classmethod
    def _known_kind(cls, value: str) -> str:
        return Geometry.parse(value).value

    @model_validator(mode="before")
    @classmethod
    def _plus_by_default(cls, data):
        if isinstance(data, dict) and data.get("boundary") is None:
            if Geometry.parse(data.get("kind", "fixed")) is Geometry.FIXED:
                data = {**data, "boundary": "plus"}
        return data

    @model_validator(mode="after")
    def _boundary_matches_kind(self) -> "GeometrySpec":
        if self.geometry is not Geometry.FIXED and self.boundary is not None:
            raise ValueError(f"boundary spins only apply to fixed cubes, not {self.kind}")
        return self

    @property
    def geometry(self) -> Geometry:
        return Geometry(self.kind)

    def window(self, d: int, alphabet_size: int) -> Window:
        if self.side is not None:
            return Window.with_side(d, self.side, self.geometry, alphabet_size)
        return Window(d=d, n=self.n, geometry=self.geometry, alphabet_size=alphabet_size)

    def make_boundary(self, alphabet_size: int) -> Optional[Boundary]:
        return make_boundary(self.boundary, alphabet_size)


class SamplingSpec(BaseModel):
    """Chain settings; a missing burn-in is chosen from the temperature."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kernel: KernelKind = KernelKind.HEAT_BATH
    sweeps_burnin: Optional[int] = Field(default=None, ge=1)
    sweeps_between_samples: int = Field(default=1, ge=1)
    n_samples: int = Field(default=1000, ge=1)
    n_chains: int = Field(default=4, ge=1)
    random_order: bool = False


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    dir: Optional[str] = None
    report: str = "report.json"


class ScenarioParameters(BaseModel):
    """Scenario knobs. Each scenario reads the subset it needs."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    mode: Literal["auto", "exact", "empirical"] = "auto"
    D: Optional[float] = Field(default=None, gt=0)
    eps: Optional[float] = Field(default=None, gt=0)
    u: Optional[float] = Field(default=None, gt=0)
    k: int = Field(default=0, ge=0)
    lambda_grid: Optional[List[float]] = None
    n_list: List[int] = Field(default_factory=list)
    sides: List[int] = Field(default_factory=list)
    observable: Literal["spin", "magnetization", "neighbour-product"] = "magnetization"
    two_sided: bool = False
    threshold: Optional[float] = None
    n_sets: int = Field(default=100, ge=1)
    set_seed: Optional[int] = Field(default=None, ge=0, lt=2**64)
    max_set_size: int = Field(default=4, ge=1)
    n_pairs: int = Field(default=10000, ge=1)
    exhaustive_pair_cap: int = Field(default=2**16, ge=1)
    reference_model: Optional[ModelParams] = None
    reference_boundary: Optional[BoundaryName] = None
    expect: Optional[Literal["zero", "constant", "decreasing", "increasing", "flat"]] = None
    min_abs_magnetization: float = Field(default=0.5, ge=0)
    separation_sigmas: float = Field(default=6.0, gt=0)

    @field_validator("n_list", "sides")
    @classmethod
    def _sorted_unique(cls, value: List[int]) -> List[int]:
        if any(v < 0 for v in value):
            raise ValueError("window sizes must be nonnegative")
        return sorted(set(value))


class ExperimentSpec(BaseModel):
    """One reproducible experiment: everything it does follows from these fields and the seed."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    scenario: ScenarioName
    model: ModelParams
    geometry: GeometrySpec = Field(default_factory=GeometrySpec)
    sampling: SamplingSpec = Field(default_factory=SamplingSpec)
    seed: int = Field(default=0, ge=0, lt=2**64)
    outputs: OutputSpec = Field(default_factory=OutputSpec)
    parameters: ScenarioParameters = Field(default_factory=ScenarioParameters)

    def window(self) -> Window:
        return self.geometry.window(self.model.d, self.model.alphabet_size)

    def boundary(self) -> Optional[Boundary]:
        return self.geometry.make_boundary(self.model.alphabet_size)

    def updated(self, **changes) -> "ExperimentSpec":
        """Copy with top-level or dotted (``"parameters.eps"``) fields replaced, revalidated."""
        data = self.model_dump(mode="json")
        for key, value in changes.items():
            target = data
            *parents, leaf = key.split(".")
            for part in parents:
                target = target[part]
            target[leaf] = value
        return ExperimentSpec.model_validate(data)


def load_spec(source: Union[str, Path, dict]) -> ExperimentSpec:
    """Parse an experiment spec from a dict or a JSON file.

    Raises:
        pydantic.ValidationError: On unknown keys or invalid values
        OSError: If the file cannot be read
    """
    if isinstance(source, dict):
        return ExperimentSpec.model_validate(source)
    with open(source, "r", encoding="utf-8") as f:
        return ExperimentSpec.model_validate(json.load(f))
