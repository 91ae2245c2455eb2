from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from casimir_bem.models.system_matrix import Formulation, Precision

UNITS = {"length": "L", "energy": "hbar*c/L", "force": "hbar*c/L^2"}


class SpectrumSample(BaseModel):
    """
    One κ node of an energy or force integral.
    """

    kappa: float = Field(..., description="Imaginary wavenumber, 1/L")
    weight: float = Field(..., description="Quadrature weight of this node")
    integrand: float = Field(
        ..., description="ln det ratio (energy) or trace difference (force)"
    )
    formulation: Formulation
    precision: Precision
    condition_estimate: float = Field(
        ..., description="1-norm condition estimate of Z at this node"
    )
    numerically_singular: bool = False

    model_config = ConfigDict(frozen=True, use_enum_values=False)


class CasimirResult(BaseModel):
    """
    Integrated Casimir energy or force with its sampled spectrum.

    Energy is in ħc/L, force in ħc/L² along `direction` for `object_i`.
    """

    energy: Optional[float] = Field(None, description="Casimir energy, hbar*c/L")
    force: Optional[float] = Field(None, description="Force along direction, hbar*c/L^2")
    object_i: Optional[int] = Field(None, description="Displaced object for the force")
    direction: Optional[List[float]] = Field(None, description="Unit displacement vector")
    formulation: Formulation
    precision: Precision
    nodes: int = Field(..., description="Size of the κ rule")
    kappa0: float = Field(..., description="Scale of the κ map, 1/L")
    spectrum: List[SpectrumSample] = Field(default_factory=list)
    warnings: List[str] = Field(
        default_factory=list, description="Diagnostics raised while integrating"
    )

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "energy": -0.0123,
                "formulation": "AEFIE",
                "precision": "double",
                "nodes": 20,
                "kappa0": 0.5,
                "spectrum": [],
                "warnings": [],
            }
        }
    )

    @property
    def value(self) -> float:
        return self.energy if self.energy is not None else self.force

    @property
    def tail_ratio(self) -> float:
        """|integrand at the largest κ| relative to the spectrum peak."""
        if not self.spectrum:
            return 0.0
        peak = max(abs(s.integrand) for s in self.spectrum)
        return abs(self.spectrum[-1].integrand) / peak if peak > 0 else 0.0


class BreakdownRow(BaseModel):
    kappa: float
    formulation: Formulation
    precision: Precision
    integrand: Optional[float] = None
    condition_estimate: Optional[float] = None
    relative_error: Optional[float] = Field(
        None, description="Against the double-precision A-EFIE integrand at the same κ"
    )
    status: str = Field("ok", description="'ok' or the error that stopped this row")


class SweepRow(BaseModel):
    separation: float = Field(..., description="Surface gap, L")
    formulation: Formulation
    precision: Precision
    energy: Optional[float] = None
    force: Optional[float] = None
    proximity_force: Optional[float] = Field(
        None, description="Proximity-force estimate for a sphere pair at this gap"
    )


class ObjectStatistics(BaseModel):
    object_id: int
    vertices: int
    triangles: int
    interior_edges: int
    boundary_edges: int
    euler_characteristic: int
    area: float
    rwg_edges: int = Field(..., description="RWG unknowns e on this object")
    patches: int = Field(..., description="Charge patches p on this object")


class RunResult(BaseModel):
    """
    Content of result.json: everything needed to interpret and repeat a run.
    """

    task: str
    units: Dict[str, str] = Field(default_factory=lambda: dict(UNITS))
    results: List[CasimirResult] = Field(default_factory=list)
    breakdown: List[BreakdownRow] = Field(default_factory=list)
    sweep: List[SweepRow] = Field(default_factory=list)
    mesh: List[ObjectStatistics] = Field(default_factory=list)
    config: Dict[str, Any] = Field(..., description="Effective configuration echo")
    wall_clock_seconds: float
    artifacts: List[str] = Field(default_factory=list)
