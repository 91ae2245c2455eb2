from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np


class Formulation(str, Enum):
    EFIE = "EFIE"
    AEFIE = "AEFIE"


class Precision(str, Enum):
    SINGLE = "single"
    DOUBLE = "double"

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.float32 if self is Precision.SINGLE else np.float64)

    @classmethod
    def of(cls, dtype) -> "Precision":
        return cls.SINGLE if np.dtype(dtype) == np.float32 else cls.DOUBLE


@dataclass(frozen=True)
class BlockLayout:
    """Current unknowns first, then charge unknowns (AEFIE only)."""

    n_current: int
    n_charge: int = 0

    @property
    def size(self) -> int:
        return self.n_current + self.n_charge

    @property
    def current(self) -> slice:
        return slice(0, self.n_current)

    @property
    def charge(self) -> slice:
        return slice(self.n_current, self.size)


@dataclass(frozen=True, eq=False)
class SystemMatrix:
    """
    Dense Wick-rotated system matrix at one κ.

    `objects[i]` is the object owning unknown i; it is the block metadata used
    to build the infinite-separation normalization.
    """

    kind: Formulation
    kappa: float
    entries: np.ndarray
    precision: Precision
    layout: BlockLayout
    objects: Optional[np.ndarray]

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])

    @property
    def V(self) -> np.ndarray:
        return self.entries[self.layout.current, self.layout.current]

    @property
    def DtP(self) -> np.ndarray:
        return self.entries[self.layout.current, self.layout.charge]

    @property
    def D(self) -> np.ndarray:
        return self.entries[self.layout.charge, self.layout.current]

    @property
    def charge_block(self) -> np.ndarray:
        return self.entries[self.layout.charge, self.layout.charge]


@dataclass(frozen=True, eq=False)
class GradientMatrix:
    """∂Z/∂t for a rigid displacement t·direction of `displaced_object`."""

    kind: Formulation
    kappa: float
    entries: np.ndarray
    precision: Precision
    layout: BlockLayout
    objects: np.ndarray
    displaced_object: int
    direction: np.ndarray

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])
