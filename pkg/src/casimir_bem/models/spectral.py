from dataclasses import dataclass
from typing import Optional

import numpy as np

from casimir_bem.models.system_matrix import Precision


@dataclass(frozen=True)
class LogDet:
    sign: float
    log_abs: float
    numerically_singular: bool = False
    min_pivot_ratio: float = 1.0

    @property
    def value(self) -> float:
        """det itself; overflows for large matrices, use for small checks."""
        return self.sign * float(np.exp(self.log_abs))


@dataclass(frozen=True, eq=False)
class SpectrumDiagnostics:
    eigenvalues: np.ndarray  # complex for the nonsymmetric AEFIE matrix
    condition_estimate: float
    precision: Precision

    @property
    def log_abs_product(self) -> float:
        return float(np.sum(np.log(np.abs(self.eigenvalues.astype(np.complex128)))))


@dataclass(frozen=True, eq=False)
class LuFactors:
    """Pivoted LU of one matrix, shared by its log-determinant, solves and condition estimate."""

    lu: np.ndarray
    piv: np.ndarray
    anorm: float
    max_abs: float
    kappa: Optional[float] = None

    @property
    def n(self) -> int:
        return int(self.lu.shape[0])

    @property
    def dtype(self) -> np.dtype:
        return self.lu.dtype
