"""
Dense spectral linear algebra on system matrices.

Every routine factorizes in the dtype of its input, so single-precision
matrices go through the single-precision LAPACK drivers.
"""

import dataclasses
import logging
import math
from typing import Optional, Tuple, Union

import numpy as np
from scipy.linalg import eigvals, get_lapack_funcs, lu_solve

from casimir_bem.core.config import settings
from casimir_bem.core.errors import DimensionMismatchError, InvalidArgumentError, SingularMatrixError
from casimir_bem.models.spectral import LogDet, LuFactors, SpectrumDiagnostics
from casimir_bem.models.system_matrix import GradientMatrix, Precision, SystemMatrix

logger = logging.getLogger(__name__)

MatrixLike = Union[np.ndarray, SystemMatrix, GradientMatrix]


def _entries(matrix: MatrixLike) -> np.ndarray:
    a = matrix.entries if isinstance(matrix, (SystemMatrix, GradientMatrix)) else np.asarray(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    if a.dtype not in (np.float32, np.float64):
        a = a.astype(np.float64)
    return a


def _kappa(matrix: MatrixLike) -> Optional[float]:
    return getattr(matrix, "kappa", None)


def lu_factorize(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray, int]:
    """Partial-pivoting LU in the dtype of `a`; info > 0 marks an exact zero pivot."""
    getrf, = get_lapack_funcs(("getrf",), (a,))
    lu, piv, info = getrf(a, overwrite_a=False)
    if info < 0:
        raise InvalidArgumentError(f"getrf rejected argument {-info}")
    return lu, piv, int(info)


def factorize(matrix: MatrixLike) -> LuFactors:
    """
    One pivoted LU of `matrix`, reusable by logdet, logdet_derivative and
    condition_estimate. Raises SingularMatrixError on an exact zero pivot.
    """
    a = _entries(matrix)
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError("matrix has non-finite entries")
    kappa = _kappa(matrix)
    if a.shape[0] == 0:
        return LuFactors(lu=a, piv=np.zeros(0, dtype=np.int32), anorm=0.0, max_abs=0.0, kappa=kappa)
    lu, piv, info = lu_factorize(a)
    if info > 0 or np.any(np.diag(lu) == 0):
        raise SingularMatrixError("exact zero pivot in LU factorization", kappa=kappa)
    return LuFactors(
        lu=lu,
        piv=piv,
        anorm=float(np.abs(a.astype(np.float64)).sum(axis=0).max()),
        max_abs=float(np.abs(a).max()),
        kappa=kappa,
    )


def _factors(matrix: Union[MatrixLike, LuFactors]) -> LuFactors:
    return matrix if isinstance(matrix, LuFactors) else factorize(matrix)


def logdet(matrix: Union[MatrixLike, LuFactors], strict: Optional[bool] = None) -> LogDet:
    """
    ln|det| and sign from pivoted LU.

    The sign is the pivot parity times the signs of U's diagonal. A pivot with
    |u_ii| < n·eps·max|A| marks the result numerically singular; `strict`
    (default settings.STRICT_SINGULAR) turns that mark into an error.
    """
    f = _factors(matrix)
    n = f.n
    if n == 0:
        return LogDet(sign=1.0, log_abs=0.0)

    diag = np.diag(f.lu)
    swaps = int(np.count_nonzero(f.piv != np.arange(n)))
    negatives = int(np.count_nonzero(diag < 0))
    sign = -1.0 if (swaps + negatives) % 2 else 1.0
    log_abs = math.fsum(np.log(np.abs(diag.astype(np.float64))))

    ratio = float(np.abs(diag).min()) / f.max_abs
    singular = ratio < n * float(np.finfo(f.dtype).eps)
    if singular:
        strict = settings.STRICT_SINGULAR if strict is None else strict
        message = "numerically singular factorization: min |u_ii| / max |A| = %.3e"
        if strict:
            raise SingularMatrixError(message % ratio, kappa=f.kappa)
        logger.warning(message, ratio)
    return LogDet(sign=sign, log_abs=log_abs, numerically_singular=singular, min_pivot_ratio=ratio)


def _check_pair(Z: MatrixLike, other: MatrixLike) -> None:
    a, b = _entries(Z), _entries(other)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape} vs {b.shape}")
    kind_a, kind_b = getattr(Z, "kind", None), getattr(other, "kind", None)
    if kind_a is not None and kind_b is not None and kind_a != kind_b:
        raise DimensionMismatchError(f"formulation mismatch: {kind_a.value} vs {kind_b.value}")
    kappa_a, kappa_b = _kappa(Z), _kappa(other)
    if kappa_a is not None and kappa_b is not None and kappa_a != kappa_b:
        raise InvalidArgumentError(f"kappa mismatch: {kappa_a} vs {kappa_b}")


def logdet_ratio(Z: MatrixLike, Z_inf: MatrixLike, method: str = "lu") -> float:
    """ln|det Z| - ln|det Z_inf|; method="eig" sums ln|λ| over dense eigenvalues instead."""
    _check_pair(Z, Z_inf)
    if method == "lu":
        return logdet(Z).log_abs - logdet(Z_inf).log_abs
    if method == "eig":
        lam = eigvals(_entries(Z))
        lam_inf = eigvals(_entries(Z_inf))
        if np.any(lam == 0) or np.any(lam_inf == 0):
            raise SingularMatrixError("zero eigenvalue", kappa=_kappa(Z))
        return math.fsum(np.log(np.abs(lam)).astype(np.float64)) - math.fsum(
            np.log(np.abs(lam_inf)).astype(np.float64)
        )
    raise InvalidArgumentError(f"unknown logdet method '{method}', expected 'lu' or 'eig'")


def logdet_derivative(Z: MatrixLike, dZ: MatrixLike, factors: Optional[LuFactors] = None) -> float:
    """tr(Z⁻¹ dZ), one solve per nonzero column of dZ; `factors` reuses an LU of Z."""
    _check_pair(Z, dZ)
    da = _entries(dZ)
    cols = np.flatnonzero(np.any(da != 0, axis=0))
    if cols.size == 0:
        return 0.0
    f = factors if factors is not None else factorize(Z)
    X = lu_solve((f.lu, f.piv), da[:, cols].astype(f.dtype, copy=False), check_finite=False)
    return math.fsum(X[cols, np.arange(cols.size)].astype(np.float64))


def generalized_eigen_trace(Z: MatrixLike, dZ: MatrixLike) -> float:
    """Σ α over dZ·x = α Z·x from a dense generalized eigensolve."""
    _check_pair(Z, dZ)
    alpha = eigvals(_entries(dZ), _entries(Z))
    if not np.all(np.isfinite(alpha)):
        raise SingularMatrixError("infinite generalized eigenvalue", kappa=_kappa(Z))
    return float(np.sum(alpha).real)


def condition_estimate(matrix: Union[MatrixLike, LuFactors]) -> float:
    """1-norm condition estimate (LAPACK gecon) from the LU factors; +inf when singular."""
    if isinstance(matrix, LuFactors):
        f = matrix
    else:
        try:
            f = factorize(matrix)
        except (SingularMatrixError, InvalidArgumentError):
            return math.inf
    if f.n == 0:
        return 1.0
    if f.anorm == 0:
        return math.inf
    gecon, = get_lapack_funcs(("gecon",), (f.lu,))
    rcond, info = gecon(f.lu, f.anorm, norm="1")
    if info != 0 or rcond == 0:
        return math.inf
    return float(1.0 / rcond)


def cast_precision(matrix: MatrixLike, target: Union[Precision, str]):
    """Round entries to `target`; system matrices keep their metadata."""
    precision = Precision(target)
    if isinstance(matrix, (SystemMatrix, GradientMatrix)):
        if matrix.precision is precision:
            return matrix
        return dataclasses.replace(
            matrix, entries=matrix.entries.astype(precision.dtype), precision=precision
        )
    return np.asarray(matrix).astype(precision.dtype, copy=False)


def spectrum_diagnostics(matrix: MatrixLike) -> SpectrumDiagnostics:
    a = _entries(matrix)
    return SpectrumDiagnostics(
        eigenvalues=eigvals(a),
        condition_estimate=condition_estimate(a),
        precision=Precision.of(a.dtype),
    )
