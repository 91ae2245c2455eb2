from .scene import TriScene
from .basis import RwgBasis
from .system_matrix import (
    BlockLayout,
    Formulation,
    GradientMatrix,
    Precision,
    SystemMatrix,
)
from .spectral import LogDet, SpectrumDiagnostics
from .quadrature import KappaQuadrature, TriangleRule

__all__ = [
    "TriScene",
    "RwgBasis",
    "BlockLayout",
    "Formulation",
    "GradientMatrix",
    "Precision",
    "SystemMatrix",
    "LogDet",
    "SpectrumDiagnostics",
    "KappaQuadrature",
    "TriangleRule",
]
