"""Run configuration (JSON) shared by all CLI subcommands."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Optional

from .clouds import EllipsoidRegion
from .fields import FieldModelConfig
from .leads import BUILTIN_MODEL_IDS

DEFAULT_THETAS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


class ConfigError(ValueError):
    """Raised for malformed or inconsistent run configurations."""


@dataclass(frozen=True)
class LeadPlacementConfig:
    model_id: str = "boston_cartesia_8"
    tip: tuple[float, float, float] = (0.0, 0.0, 0.0)
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    roll_degrees: float = 0.0

    @property
    def roll_radians(self) -> float:
        return math.radians(self.roll_degrees)


@dataclass(frozen=True)
class SyntheticSpec:
    seed: int
    regions: tuple[EllipsoidRegion, ...]


@dataclass(frozen=True)
class ScenarioConfig:
    """Exactly one of the three sources is set."""

    synthetic: Optional[SyntheticSpec] = None
    cloud_csv: Optional[str] = None
    transfer_csv: Optional[str] = None
    transfer_cloud_csv: Optional[str] = None  # labels for the transfer source
    voxel_length_mm: Optional[float] = None

    def __post_init__(self) -> None:
        sources = [self.synthetic is not None, self.cloud_csv is not None,
                   self.transfer_csv is not None]
        if sum(sources) != 1:
            raise ConfigError("scenario must specify exactly one of synthetic, cloud_csv, transfer")
        if self.transfer_csv is not None and self.transfer_cloud_csv is None:
            raise ConfigError("a transfer scenario needs cloud_csv for the point labels")
        if self.transfer_csv is not None and self.voxel_length_mm is not None:
            raise ConfigError("cannot downsample a transfer scenario (rows would misalign)")
        if self.voxel_length_mm is not None and not self.voxel_length_mm > 0:
            raise ConfigError("scenario voxel_length_mm must be > 0")


@dataclass(frozen=True)
class ProblemConfig:
    e_th_t: float = 0.2
    e_th_c: float = 0.2
    i_max_contact_mA: float = 5.0
    i_max_total_mA: float = 8.0
    thetas: tuple[float, ...] = DEFAULT_THETAS

    def __post_init__(self) -> None:
        for name, v in (("e_th_t", self.e_th_t), ("e_th_c", self.e_th_c)):
            if not v > 0:
                raise ConfigError(f"{name} must be > 0, got {v}")
        if not 0 < self.i_max_contact_mA <= self.i_max_total_mA:
            raise ConfigError("need 0 < i_max_contact_mA <= i_max_total_mA")
        for t in self.thetas:
            if not 0.0 <= t <= 1.0:
                raise ConfigError(f"theta values must lie in [0, 1], got {t}")


@dataclass(frozen=True)
class SolverConfig:
    time_limit_s: float = 1500.0
    gap_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.time_limit_s > 0:
            raise ConfigError("time_limit_s must be > 0")
        if not self.gap_tol >= 0:
            raise ConfigError("gap_tol must be >= 0")


@dataclass(frozen=True)
class RunConfig:
    lead: LeadPlacementConfig
    field_model: FieldModelConfig
    scenario: ScenarioConfig
    problem: ProblemConfig
    solver: SolverConfig
    output_dir: str = "out"


def _vec3(value: Any, name: str) -> tuple[float, float, float]:
    try:
        x, y, z = (float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a list of 3 numbers: {exc}") from None
    return (x, y, z)


def _region_from_dict(d: dict, index: int) -> EllipsoidRegion:
    try:
        return EllipsoidRegion(
            name=str(d["name"]),
            center=_vec3(d["center"], f"regions[{index}].center"),
            semi_axes=_vec3(d["semi_axes"], f"regions[{index}].semi_axes"),
            count=int(d["count"]),
            label=str(d["label"]).strip().lower(),
        )
    except KeyError as exc:
        raise ConfigError(f"regions[{index}] missing key {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"regions[{index}]: {exc}") from None


def _build(section: dict, name: str, builder):
    try:
        return builder(**section)
    except TypeError as exc:
        raise ConfigError(f"{name}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def run_config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("run config must be a JSON object")
    unknown = set(data) - {"lead", "field_model", "scenario", "problem", "solver", "output_dir"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    lead_raw = dict(data.get("lead", {}))
    if "tip" in lead_raw:
        lead_raw["tip"] = _vec3(lead_raw["tip"], "lead.tip")
    if "axis" in lead_raw:
        lead_raw["axis"] = _vec3(lead_raw["axis"], "lead.axis")
    lead = _build(lead_raw, "lead", LeadPlacementConfig)
    if lead.model_id not in BUILTIN_MODEL_IDS:
        raise ConfigError(f"lead.model_id must be one of {BUILTIN_MODEL_IDS}")

    field_model = _build(dict(data.get("field_model", {})), "field_model", FieldModelConfig)

    scenario_raw = data.get("scenario")
    if not isinstance(scenario_raw, dict):
        raise ConfigError("config must contain a 'scenario' object")
    unknown = set(scenario_raw) - {"synthetic", "cloud_csv", "transfer", "voxel_length_mm"}
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    synthetic = None
    if "synthetic" in scenario_raw:
        syn = scenario_raw["synthetic"]
        regions_raw = syn.get("regions")
        if not regions_raw:
            raise ConfigError("scenario.synthetic.regions must be a non-empty list")
        regions = tuple(_region_from_dict(r, i) for i, r in enumerate(regions_raw))
        synthetic = SyntheticSpec(seed=int(syn.get("seed", 0)), regions=regions)
    transfer = scenario_raw.get("transfer", {})
    scenario = ScenarioConfig(
        synthetic=synthetic,
        cloud_csv=scenario_raw.get("cloud_csv"),
        transfer_csv=transfer.get("transfer_csv") if transfer else None,
        transfer_cloud_csv=transfer.get("cloud_csv") if transfer else None,
        voxel_length_mm=scenario_raw.get("voxel_length_mm"),
    )

    problem_raw = dict(data.get("problem", {}))
    if "thetas" in problem_raw:
        problem_raw["thetas"] = tuple(float(t) for t in problem_raw["thetas"])
    problem = _build(problem_raw, "problem", ProblemConfig)
    solver = _build(dict(data.get("solver", {})), "solver", SolverConfig)

    return RunConfig(
        lead=lead, field_model=field_model, scenario=scenario,
        problem=problem, solver=solver,
        output_dir=str(data.get("output_dir", "out")),
    )


def load_run_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return run_config_from_dict(data)


def region_to_dict(region: EllipsoidRegion) -> dict:
    return {
        "name": region.name,
        "center": list(region.center),
        "semi_axes": list(region.semi_axes),
        "count": region.count,
        "label": region.label,
    }
