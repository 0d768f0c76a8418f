"""Experiment runner: executes scenarios and sweeps, writes JSON reports and CSV tables."""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..concentration.gcb import Verdict
from ..config import LabConfig, get_config, load_defaults
from ..exceptions import ScenarioError
from ..sampling.rng import derive_seed
from .scenarios import SCENARIOS, ScenarioResult
from .spec import ExperimentSpec

EXIT_USAGE = 3
SWEEP_PARAMETERS = ("beta", "n", "epsilon", "lambda")
PROGRAM = "gibbs-lab"


def _jsonable(value):
    """Plain JSON types; non-finite floats become strings so reports stay strict JSON."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def dump_report(header: Dict[str, object], body: Dict[str, object]) -> str:
    """Report text; everything run-dependent apart from the body is confined to the header."""
    return json.dumps({"header": _jsonable(header), "body": _jsonable(body)}, indent=2, sort_keys=True, allow_nan=False) + "\n"


@dataclass
class RunOutcome:
    scenario: str
    verdict: Verdict
    out_dir: Path
    report_path: Path
    result: Optional[ScenarioResult] = None

    @property
    def exit_code(self) -> int:
        return self.verdict.exit_code


@dataclass
class SweepOutcome:
    parameter: str
    grid: List[float]
    verdict: Verdict
    table: pd.DataFrame
    out_dir: Path
    points: List[RunOutcome] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return self.verdict.exit_code


class ExperimentRunner:
    """Runs experiment specs and writes their artifacts."""

    def __init__(self, config: Optional[LabConfig] = None):
        """Initialize the runner.

        Args:
            config: Settings; the process-wide ``LabConfig`` by default
        """
        self.config = config or get_config()
        self.logger = logging.getLogger(__name__)

    def _out_dir(self, spec: ExperimentSpec, out_dir: Optional[Union[str, Path]]) -> Path:
        if out_dir is not None:
            path = Path(out_dir)
        elif spec.outputs.dir is not None:
            path = Path(spec.outputs.dir)
        else:
            path = self.config.output_dir / f"{spec.scenario}-{spec.seed}"
        path.mkdir(parents=True, exist_ok=True)
        return path

    def _header(self) -> Dict[str, object]:
        return {
            "program": PROGRAM,
            "generated_at": datetime.now(timezone.utc).isoformat(),
            "defaults_version": load_defaults().version,
        }

    def write_result(self, spec: ExperimentSpec, result: ScenarioResult, out_dir: Path) -> Path:
        """Write ``<table>.csv`` files and the JSON report into ``out_dir``."""
        tables = {}
        for name, frame in result.tables.items():
            filename = f"{name}.csv"
            frame.to_csv(out_dir / filename, index=False)
            tables[name] = filename
        body = {
            "scenario": result.scenario,
            "seed": spec.seed,
            "spec": spec.model_dump(mode="json"),
            "verdict": result.verdict.value,
            "exit_code": result.verdict.exit_code,
            "summary": result.summary,
            "tables": tables,
            "notes": result.notes,
        }
        report_path = out_dir / spec.outputs.report
        report_path.write_text(dump_report(self._header(), body), encoding="utf-8")
        return report_path

    def run(
        self,
        spec: ExperimentSpec,
        out_dir: Optional[Union[str, Path]] = None,
        seed: Optional[int] = None,
    ) -> RunOutcome:
        """Run one scenario and write its report.

        Args:
            spec: Experiment spec
            out_dir: Output directory (spec's ``outputs.dir``, else ``outputs/<scenario>-<seed>``)
            seed: Replaces the spec's seed

        Returns:
            RunOutcome with the verdict and the report location
        """
        if seed is not None:
            spec = spec.updated(seed=seed)
        scenario = SCENARIOS.get(spec.scenario)
        if scenario is None:
            raise ScenarioError(f"unknown scenario {spec.scenario!r}")
        out = self._out_dir(spec, out_dir)
        self.logger.info(f"Running {spec.scenario} for {spec.model.model} beta={spec.model.beta} seed={spec.seed}")
        try:
            result = scenario(spec, self.config)
        except Exception as e:
            self.logger.error(f"Scenario {spec.scenario} failed: {str(e)}")
            raise
        report_path = self.write_result(spec, result, out)
        self.logger.info(f"{spec.scenario}: {result.verdict.value} -> {report_path}")
        return RunOutcome(spec.scenario, result.verdict, out, report_path, result)

    def point_spec(self, spec: ExperimentSpec, parameter: str, value: float) -> ExperimentSpec:
        """The spec of one sweep point, with its own derived seed."""
        changes: Dict[str, object] = {"seed": derive_seed(spec.seed, f"{parameter}={value!r}")}
        if parameter == "beta":
            changes["model.beta"] = float(value)
        elif parameter == "n":
            if float(value) != int(value):
                raise ScenarioError(f"window radius must be an integer, got {value}")
            changes["geometry.n"] = int(value)
            changes["geometry.side"] = None
        elif parameter == "epsilon":
            changes["parameters.eps"] = float(value)
        elif parameter == "lambda":
            changes["parameters.lambda_grid"] = [float(value)]
        else:
            raise ScenarioError(f"cannot sweep {parameter!r}; choose one of {', '.join(SWEEP_PARAMETERS)}")
        return spec.updated(**changes)

    def sweep(
        self,
        spec: ExperimentSpec,
        parameter: str,
        grid: Sequence[float],
        out_dir: Optional[Union[str, Path]] = None,
    ) -> SweepOutcome:
        """Run the spec at every grid point and concatenate the summaries.

        Points run in parallel; the combined table is ordered by grid
        position, so it does not depend on the thread count.

        Returns:
            SweepOutcome whose table has one row per point (``sweep.csv``)
        """
        if not grid:
            raise ScenarioError("sweep grid is empty")
        specs = [self.point_spec(spec, parameter, value) for value in grid]
        out = self._out_dir(spec, out_dir)
        dirs = [out / f"{parameter}-{i:03d}" for i in range(len(specs))]
        self.logger.info(f"Sweeping {parameter} over {len(specs)} points for {spec.scenario}")
        try:
            with ThreadPoolExecutor(max_workers=min(self.config.threads, len(specs))) as pool:
                points = list(pool.map(lambda item: self.run(item[0], item[1]), zip(specs, dirs)))
        except Exception as e:
            self.logger.error(f"Sweep over {parameter} failed: {str(e)}")
            raise

        rows = []
        for value, point in zip(grid, points):
            row = {"parameter": parameter, "value": value, "verdict": point.verdict.value}
            row.update({k: v for k, v in point.result.summary.items() if isinstance(v, (int, float, str, bool)) or v is None})
            rows.append(row)
        table = pd.DataFrame(rows)
        table.to_csv(out / "sweep.csv", index=False)
        verdict = Verdict.combine([p.verdict for p in points])
        body = {
            "scenario": spec.scenario,
            "parameter": parameter,
            "grid": list(grid),
            "verdict": verdict.value,
            "exit_code": verdict.exit_code,
            "points": [{"value": v, "dir": d.name, "verdict": p.verdict.value} for v, d, p in zip(grid, dirs, points)],
        }
        (out / "sweep.json").write_text(dump_report(self._header(), body), encoding="utf-8")
        return SweepOutcome(parameter, list(grid), verdict, table, out, points)
