import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class TriangleRule:
    """Symmetric rule on the reference triangle; weights sum to 1."""

    barycentric: np.ndarray  # (q, 3)
    weights: np.ndarray  # (q,)

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    def points(self, corners: np.ndarray) -> np.ndarray:
        """(m, 3, 3) triangle corners -> (m, q, 3) physical points."""
        return np.einsum("qk,mkc->mqc", self.barycentric, corners)


@dataclass(frozen=True, eq=False)
class KappaQuadrature:
    """Gauss–Legendre rule on (-1, 1) mapped onto κ ∈ (0, ∞)."""

    nodes: np.ndarray
    weights: np.ndarray
    kappa0: float

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])

    def integrate(self, values) -> float:
        return math.fsum(float(w) * float(v) for w, v in zip(self.weights, values))
