from typing import Any, Optional, Sequence, Tuple


class CasimirBemError(Exception):
    """Base class for every error raised by the package."""


class InvalidArgumentError(CasimirBemError, ValueError):
    pass


class MeshError(CasimirBemError):
    pass


class NonManifoldError(MeshError):
    def __init__(self, message: str, edge: Optional[Tuple[int, int]] = None):
        super().__init__(message)
        self.edge = edge


class OffParseError(MeshError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DegenerateTriangleError(MeshError):
    pass


class UnknownObjectError(CasimirBemError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown object"


class AssemblyError(CasimirBemError):
    pass


class MissingBlockMetadataError(AssemblyError):
    pass


class SingularMatrixError(CasimirBemError):
    def __init__(self, message: str, kappa: Optional[float] = None):
        if kappa is not None:
            message = f"{message} (kappa={kappa:.6g})"
        super().__init__(message)
        self.kappa = kappa


class DimensionMismatchError(CasimirBemError, ValueError):
    pass


class ConfigError(CasimirBemError):
    def __init__(self, message: str, problems: Sequence[str] = ()):
        if problems:
            message = message + "\n" + "\n".join(f"  - {p}" for p in problems)
        super().__init__(message)
        self.problems = list(problems)


class MultiTaskError(ConfigError):
    pass


class NodeEvaluationError(CasimirBemError):
    """A κ-node failed; the samples evaluated before it are kept."""

    def __init__(self, message: str, kappa: float, partial_spectrum: Sequence[Any] = ()):
        super().__init__(f"{message} (kappa={kappa:.6g})")
        self.kappa = kappa
        self.partial_spectrum = list(partial_spectrum)
