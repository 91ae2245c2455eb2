"""
Run configuration, validated from a TOML file.

Every model forbids unknown keys. A scene is either a `pair` of identical
generated bodies a surface gap apart, or an explicit list of `objects`.
"""

import re
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveFloat,
    ValidationError,
    ValidationInfo,
    field_validator,
    model_validator,
)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from casimir_bem.core.errors import ConfigError, MultiTaskError
from casimir_bem.models.system_matrix import Formulation, Precision

Vector3 = Tuple[float, float, float]

_TASK_LINE = re.compile(r"^\s*task\s*=", re.MULTILINE)


class Task(str, Enum):
    ENERGY = "energy"
    FORCE = "force"
    SPECTRUM = "spectrum"
    BREAKDOWN = "breakdown"
    SWEEP = "sweep"


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SphereSpec(StrictModel):
    generator: Literal["sphere"]
    radius: PositiveFloat = Field(..., description="Sphere radius, L")
    subdivisions: int = Field(2, ge=0, le=6, description="Icosphere refinement level")
    grading: float = Field(
        1.0, gt=0, le=1, description="Mesh spacing factor at the focus; 1 is uniform"
    )
    focus: Optional[Vector3] = Field(
        None, description="Refinement direction; a pair points each sphere at the other"
    )

    def params(self) -> Dict[str, Any]:
        params = {"radius": self.radius, "subdivisions": self.subdivisions, "grading": self.grading}
        if self.focus is not None:
            params["focus"] = self.focus
        return params


class CapsuleSpec(StrictModel):
    generator: Literal["capsule"]
    total_length: PositiveFloat = Field(..., description="Tip-to-tip length, L")
    radius: PositiveFloat = Field(..., description="Cylinder and cap radius, L")
    resolution: int = Field(2, ge=1, description="4·resolution vertices around each ring")
    axis: Vector3 = Field((0.0, 0.0, 1.0), description="Capsule axis")

    @model_validator(mode="after")
    def caps_fit(self):
        if self.total_length < 2.0 * self.radius:
            raise ValueError(
                f"total_length {self.total_length} is shorter than the diameter {2.0 * self.radius}"
            )
        return self

    def params(self) -> Dict[str, Any]:
        return {
            "total_length": self.total_length,
            "radius": self.radius,
            "resolution": self.resolution,
            "axis": self.axis,
        }


class PlateSpec(StrictModel):
    generator: Literal["plate"]
    side: PositiveFloat = Field(..., description="Square side, L")
    resolution: int = Field(4, ge=1, description="Cells per side")

    def params(self) -> Dict[str, Any]:
        return {"side": self.side, "resolution": self.resolution}


class OffSpec(StrictModel):
    generator: Literal["off"]
    path: Path = Field(..., description="OFF file, relative to the config file")

    @field_validator("path")
    @classmethod
    def file_exists(cls, value: Path, info: ValidationInfo) -> Path:
        base = (info.context or {}).get("base_dir")
        resolved = value if value.is_absolute() or base is None else Path(base) / value
        if not resolved.is_file():
            raise ValueError(f"mesh file {resolved} does not exist")
        return resolved


BodySpec = Annotated[Union[SphereSpec, CapsuleSpec, PlateSpec], Field(discriminator="generator")]


class _Placed(StrictModel):
    translate: Vector3 = Field((0.0, 0.0, 0.0), description="Rigid displacement, L")


class PlacedSphere(SphereSpec, _Placed):
    pass


class PlacedCapsule(CapsuleSpec, _Placed):
    pass


class PlacedPlate(PlateSpec, _Placed):
    pass


class PlacedOff(OffSpec, _Placed):
    pass


ObjectSpec = Annotated[
    Union[PlacedSphere, PlacedCapsule, PlacedPlate, PlacedOff],
    Field(discriminator="generator"),
]


class PairSpec(StrictModel):
    """Two copies of `body`; object 1 sits `gap` beyond object 0 along `axis`."""

    body: BodySpec
    gap: PositiveFloat = Field(..., description="Surface-to-surface gap, L")
    axis: Vector3 = Field((1.0, 0.0, 0.0), description="Separation axis")


class SceneSpec(StrictModel):
    pair: Optional[PairSpec] = None
    objects: Optional[List[ObjectSpec]] = None

    @model_validator(mode="after")
    def one_layout(self):
        if (self.pair is None) == (self.objects is None):
            raise ValueError("scene needs exactly one of 'pair' or 'objects'")
        if self.objects is not None and not self.objects:
            raise ValueError("scene.objects is empty")
        return self


class QuadratureSpec(StrictModel):
    nodes: int = Field(20, ge=2, description="Size of the κ rule")
    kappa0: Union[Literal["auto"], PositiveFloat] = Field(
        "auto", description="κ map scale; auto = 1/(2·minimum gap)"
    )
    order: Optional[Literal[1, 3, 6, 12]] = Field(
        None, description="Triangle rule size; default CASIMIR_BEM_QUADRATURE_ORDER"
    )
    near_order: Optional[Literal[1, 3, 6, 12]] = Field(
        None, description="Outer rule for near pairs; default CASIMIR_BEM_NEAR_QUADRATURE_ORDER"
    )
    charge_neutral: Optional[bool] = Field(
        None, description="Eliminate one charge per component; default CASIMIR_BEM_CHARGE_NEUTRAL"
    )


class ForceSpec(StrictModel):
    object: int = Field(1, ge=0, description="Displaced object")
    direction: Optional[Vector3] = Field(
        None, description="Displacement direction; default points away from the others"
    )


class SweepSpec(StrictModel):
    variable: Literal["gap"] = "gap"
    values: Optional[List[PositiveFloat]] = None
    start: Optional[PositiveFloat] = None
    stop: Optional[PositiveFloat] = None
    steps: Optional[int] = Field(None, ge=2)

    @model_validator(mode="after")
    def monotone_range(self):
        ranged = (self.start, self.stop, self.steps)
        if self.values is None and any(v is None for v in ranged):
            raise ValueError("sweep needs 'values' or all of 'start', 'stop', 'steps'")
        if self.values is not None and any(v is not None for v in ranged):
            raise ValueError("sweep takes either 'values' or a start/stop/steps range")
        points = self.points()
        if not points:
            raise ValueError("sweep range is empty")
        diffs = [b - a for a, b in zip(points, points[1:])]
        if not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
            raise ValueError("sweep values must be strictly monotone")
        return self

    def points(self) -> List[float]:
        if self.values is not None:
            return list(self.values)
        step = (self.stop - self.start) / (self.steps - 1)
        return [self.start + i * step for i in range(self.steps)]


class OutputSpec(StrictModel):
    directory: Path = Field(Path("casimir-out"), description="Artifact directory")
    dump_matrices: bool = Field(False, description="Write .npy dumps of Z at every node")


class RunConfig(StrictModel):
    task: Task
    formulation: Literal["EFIE", "AEFIE", "both"] = "AEFIE"
    precision: Literal["single", "double", "both"] = "double"
    threads: Optional[int] = Field(None, ge=1)
    scene: SceneSpec
    quadrature: QuadratureSpec = Field(default_factory=QuadratureSpec)
    force: ForceSpec = Field(default_factory=ForceSpec)
    sweep: Optional[SweepSpec] = None
    output: OutputSpec = Field(default_factory=OutputSpec)

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "task": "energy",
                "scene": {
                    "pair": {
                        "body": {"generator": "sphere", "radius": 1.0, "subdivisions": 2},
                        "gap": 1.0,
                    }
                },
            }
        },
    )

    @model_validator(mode="after")
    def task_requirements(self):
        if self.task is Task.SWEEP:
            if self.sweep is None:
                raise ValueError("task 'sweep' needs a [sweep] section")
            if self.scene.pair is None:
                raise ValueError("task 'sweep' varies the gap of a scene.pair")
        n_objects = 2 if self.scene.pair is not None else len(self.scene.objects)
        if self.task in (Task.FORCE, Task.BREAKDOWN) and self.force.object >= n_objects:
            raise ValueError(f"force.object {self.force.object} is not in a {n_objects}-object scene")
        return self

    @property
    def formulations(self) -> List[Formulation]:
        if self.formulation == "both":
            return [Formulation.EFIE, Formulation.AEFIE]
        return [Formulation(self.formulation)]

    @property
    def precisions(self) -> List[Precision]:
        if self.precision == "both":
            return [Precision.SINGLE, Precision.DOUBLE]
        return [Precision(self.precision)]


def _problems(err: ValidationError) -> List[str]:
    problems = []
    for item in err.errors():
        where = ".".join(str(p) for p in item["loc"]) or "<root>"
        problems.append(f"{where}: {item['msg']}")
    return problems


def _merge_task(data: Dict[str, Any], task: Optional[str]) -> Dict[str, Any]:
    declared = data.get("task")
    if isinstance(declared, list):
        if len(declared) != 1:
            raise MultiTaskError(f"exactly one task per run, got {declared}")
        declared = declared[0]
    if task is not None and declared is not None and declared != task:
        raise MultiTaskError(f"config declares task '{declared}' but '{task}' was requested")
    merged = dict(data)
    merged["task"] = task if task is not None else declared
    if merged["task"] is None:
        del merged["task"]
    return merged


def validate_config(data: Dict[str, Any], base_dir: Optional[Path] = None, task: Optional[str] = None) -> RunConfig:
    data = _merge_task(data, task)
    try:
        return RunConfig.model_validate(data, context={"base_dir": base_dir})
    except ValidationError as err:
        raise ConfigError("invalid run configuration", _problems(err)) from err


def parse_config(path, task: Optional[str] = None) -> RunConfig:
    """
    Read and validate a TOML run configuration.

    `task` (from a subcommand) fills in a missing task and must agree with a
    declared one. Every validation problem of the file is reported at once.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    if len(_TASK_LINE.findall(text)) > 1:
        raise MultiTaskError(f"{path} declares more than one task")
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{path} is not valid TOML: {err}") from err
    return validate_config(data, base_dir=path.parent, task=task)


def apply_overrides(config: RunConfig, **overrides) -> RunConfig:
    """
    Re-validate `config` with CLI overrides applied.

    Recognised keys: formulation, precision, nodes, out, threads; None values
    leave the config untouched.
    """
    data = config.model_dump(mode="json")
    if overrides.get("formulation") is not None:
        data["formulation"] = overrides["formulation"]
    if overrides.get("precision") is not None:
        data["precision"] = overrides["precision"]
    if overrides.get("nodes") is not None:
        data["quadrature"]["nodes"] = overrides["nodes"]
    if overrides.get("out") is not None:
        data["output"]["directory"] = str(overrides["out"])
    if overrides.get("threads") is not None:
        data["threads"] = overrides["threads"]
    return validate_config(data)
