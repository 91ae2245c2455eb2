"""
Casimir energy and force from determinant ratios over imaginary wavenumber.

    E = (1/2π) ∫ ln[det Z(κ) / det Z∞(κ)] dκ            (ħc/L)
    F = -(1/2π) ∫ [tr(Z⁻¹∂Z) - tr(Z∞⁻¹∂Z∞)] dκ           (ħc/L²)

κ nodes are independent and may be evaluated on a thread pool; the final
reduction always runs in node order with exactly rounded summation.
"""

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar, Union

import numpy as np

from casimir_bem.core.config import settings
from casimir_bem.core.errors import (
    AssemblyError,
    CasimirBemError,
    MissingBlockMetadataError,
    NodeEvaluationError,
    UnknownObjectError,
)
from casimir_bem.models.basis import RwgBasis
from casimir_bem.models.quadrature import KappaQuadrature
from casimir_bem.models.scene import TriScene
from casimir_bem.models.system_matrix import Formulation, GradientMatrix, Precision, SystemMatrix
from casimir_bem.schemas.result_schema import CasimirResult, SpectrumSample
from casimir_bem.services.assembly import BemAssembler
from casimir_bem.services.spectral import (
    condition_estimate,
    factorize,
    logdet,
    logdet_derivative,
)

logger = logging.getLogger(__name__)

TAIL_TOLERANCE = 1e-6
T = TypeVar("T")


def normalization_matrix(Z: SystemMatrix, basis: Optional[RwgBasis] = None) -> SystemMatrix:
    """
    Z∞: Z with every entry coupling two different objects set to zero.

    The D and -κ²I blocks never couple objects, so only V and the charge
    potential block change.
    """
    if Z.objects is None:
        raise MissingBlockMetadataError("system matrix carries no per-unknown object ids")
    objects = np.asarray(Z.objects)
    if objects.shape[0] != Z.n:
        raise MissingBlockMetadataError(
            f"object ids cover {objects.shape[0]} unknowns, matrix has {Z.n}"
        )
    if basis is not None and Z.layout.n_current != basis.e:
        raise MissingBlockMetadataError("matrix was not assembled on this basis")
    same = objects[:, None] == objects[None, :]
    entries = np.where(same, Z.entries, Z.entries.dtype.type(0))
    return dataclasses.replace(Z, entries=entries)


def _normalized_gradient(dZ: GradientMatrix) -> GradientMatrix:
    same = dZ.objects[:, None] == dZ.objects[None, :]
    return dataclasses.replace(
        dZ, entries=np.where(same, dZ.entries, dZ.entries.dtype.type(0))
    )


def default_direction(scene: TriScene, object_i: int) -> np.ndarray:
    """Unit vector from the other objects' centroid towards object_i."""
    if not 0 <= object_i < scene.n_objects:
        raise UnknownObjectError(f"scene has no object {object_i}")
    if scene.n_objects < 2:
        return np.array([1.0, 0.0, 0.0])
    others = [scene.object_centroid(k) for k in range(scene.n_objects) if k != object_i]
    u = scene.object_centroid(object_i) - np.mean(others, axis=0)
    norm = np.linalg.norm(u)
    if norm == 0:
        raise UnknownObjectError(f"object {object_i} shares its centroid with the others")
    return u / norm


def assembler_for(scene: TriScene, assembler: Optional[BemAssembler]) -> BemAssembler:
    if assembler is None:
        return BemAssembler(scene)
    if assembler.scene is not scene:
        raise AssemblyError("assembler was built for a different scene")
    return assembler


def energy_sample(
    assembler: BemAssembler,
    kappa: float,
    formulation: Union[Formulation, str],
    precision: Union[Precision, str],
    weight: float = 0.0,
) -> SpectrumSample:
    Z = assembler.assemble(formulation, kappa, precision)
    Z_inf = normalization_matrix(Z, assembler.basis)
    factors = factorize(Z)
    ld, ld_inf = logdet(factors), logdet(Z_inf)
    cond = condition_estimate(factors)
    integrand = ld.log_abs - ld_inf.log_abs
    logger.debug("energy node kappa=%.6g integrand=%.6e cond=%.3e", kappa, integrand, cond)
    return SpectrumSample(
        kappa=kappa,
        weight=weight,
        integrand=integrand,
        formulation=Formulation(formulation),
        precision=Precision(precision),
        condition_estimate=cond,
        numerically_singular=ld.numerically_singular or ld_inf.numerically_singular,
    )


def force_sample(
    assembler: BemAssembler,
    kappa: float,
    object_i: int,
    direction_u: Sequence[float],
    formulation: Union[Formulation, str],
    precision: Union[Precision, str],
    weight: float = 0.0,
) -> SpectrumSample:
    Z = assembler.assemble(formulation, kappa, precision)
    dZ = assembler.assemble_gradient(formulation, kappa, object_i, direction_u, precision)
    Z_inf = normalization_matrix(Z, assembler.basis)
    factors = factorize(Z)
    trace = logdet_derivative(Z, dZ, factors=factors)
    trace_inf = logdet_derivative(Z_inf, _normalized_gradient(dZ))
    if abs(trace_inf) > 1e-12 * max(abs(trace), 1.0):
        raise AssemblyError(
            f"gradient couples unknowns of one object (tr Z∞⁻¹∂Z∞ = {trace_inf:.3e})"
        )
    cond = condition_estimate(factors)
    integrand = trace - trace_inf
    logger.debug("force node kappa=%.6g integrand=%.6e cond=%.3e", kappa, integrand, cond)
    return SpectrumSample(
        kappa=kappa,
        weight=weight,
        integrand=integrand,
        formulation=Formulation(formulation),
        precision=Precision(precision),
        condition_estimate=cond,
    )


def energy_integrand(
    scene: TriScene,
    kappa: float,
    formulation: Union[Formulation, str] = Formulation.AEFIE,
    precision: Union[Precision, str] = Precision.DOUBLE,
    assembler: Optional[BemAssembler] = None,
) -> float:
    """ln det Z(κ) - ln det Z∞(κ)."""
    return energy_sample(assembler_for(scene, assembler), kappa, formulation, precision).integrand


def force_integrand(
    scene: TriScene,
    kappa: float,
    object_i: int,
    direction_u: Optional[Sequence[float]] = None,
    formulation: Union[Formulation, str] = Formulation.AEFIE,
    precision: Union[Precision, str] = Precision.DOUBLE,
    assembler: Optional[BemAssembler] = None,
) -> float:
    """tr(Z⁻¹∂Z) - tr(Z∞⁻¹∂Z∞) for object_i displaced along direction_u."""
    u = default_direction(scene, object_i) if direction_u is None else direction_u
    return force_sample(
        assembler_for(scene, assembler), kappa, object_i, u, formulation, precision
    ).integrand


def evaluate_nodes(
    fn: Callable[[int, float, float], T],
    quad: KappaQuadrature,
    threads: Optional[int] = None,
) -> List[T]:
    """
    fn(index, kappa, weight) on every node, results in node order.

    A failing node raises NodeEvaluationError carrying the results of all
    earlier nodes.
    """
    workers = threads or settings.THREADS or 1
    nodes = [(q, float(k), float(w)) for q, (k, w) in enumerate(zip(quad.nodes, quad.weights))]

    if workers == 1:
        done: List[T] = []
        for q, k, w in nodes:
            try:
                done.append(fn(q, k, w))
            except CasimirBemError as err:
                raise NodeEvaluationError(str(err), kappa=k, partial_spectrum=done) from err
        return done

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, q, k, w) for q, k, w in nodes]
        done = []
        for (q, k, _), future in zip(nodes, futures):
            try:
                done.append(future.result())
            except CasimirBemError as err:
                for pending in futures[q + 1 :]:
                    pending.cancel()
                raise NodeEvaluationError(str(err), kappa=k, partial_spectrum=done) from err
        return done


def _spectrum_warnings(spectrum: List[SpectrumSample], n_objects: int, energy: bool) -> List[str]:
    warnings = []
    if energy and n_objects > 1:
        positive = [s.kappa for s in spectrum if s.integrand > 0]
        if positive:
            warnings.append(
                f"energy integrand positive at {len(positive)} node(s), first at kappa={positive[0]:.6g}"
            )
    singular = [s.kappa for s in spectrum if s.numerically_singular]
    if singular:
        warnings.append(f"numerically singular factorization at {len(singular)} node(s)")
    peak = max((abs(s.integrand) for s in spectrum), default=0.0)
    if peak > 0 and abs(spectrum[-1].integrand) >= TAIL_TOLERANCE * peak:
        warnings.append(
            f"spectrum not decayed at kappa={spectrum[-1].kappa:.6g}: "
            f"{abs(spectrum[-1].integrand) / peak:.3e} of peak"
        )
    for message in warnings:
        logger.warning(message)
    return warnings


def integrate_energy(
    scene: TriScene,
    quad: KappaQuadrature,
    formulation: Union[Formulation, str] = Formulation.AEFIE,
    precision: Union[Precision, str] = Precision.DOUBLE,
    assembler: Optional[BemAssembler] = None,
    threads: Optional[int] = None,
) -> CasimirResult:
    assembler = assembler_for(scene, assembler)
    formulation, precision = Formulation(formulation), Precision(precision)

    spectrum = evaluate_nodes(
        lambda q, k, w: energy_sample(assembler, k, formulation, precision, weight=w),
        quad,
        threads,
    )
    energy = quad.integrate([s.integrand for s in spectrum]) / (2.0 * math.pi)
    logger.info(
        "energy %s/%s over %d nodes: %.10e hbar*c/L",
        formulation.value,
        precision.value,
        quad.size,
        energy,
    )
    return CasimirResult(
        energy=energy,
        formulation=formulation,
        precision=precision,
        nodes=quad.size,
        kappa0=quad.kappa0,
        spectrum=spectrum,
        warnings=_spectrum_warnings(spectrum, scene.n_objects, energy=True),
    )


def integrate_force(
    scene: TriScene,
    quad: KappaQuadrature,
    object_i: int = 1,
    direction_u: Optional[Sequence[float]] = None,
    formulation: Union[Formulation, str] = Formulation.AEFIE,
    precision: Union[Precision, str] = Precision.DOUBLE,
    assembler: Optional[BemAssembler] = None,
    threads: Optional[int] = None,
) -> CasimirResult:
    """
    Force on object_i along u; with the default u (pointing away from the
    other objects) an attraction is negative.
    """
    assembler = assembler_for(scene, assembler)
    formulation, precision = Formulation(formulation), Precision(precision)
    if direction_u is None:
        u = default_direction(scene, object_i)
    else:
        u = np.asarray(direction_u, dtype=np.float64)
        u = u / np.linalg.norm(u)

    spectrum = evaluate_nodes(
        lambda q, k, w: force_sample(assembler, k, object_i, u, formulation, precision, weight=w),
        quad,
        threads,
    )
    force = -quad.integrate([s.integrand for s in spectrum]) / (2.0 * math.pi)
    logger.info(
        "force on object %d along %s, %s/%s: %.10e hbar*c/L^2",
        object_i,
        np.array2string(u, precision=4),
        formulation.value,
        precision.value,
        force,
    )
    return CasimirResult(
        force=force,
        object_i=object_i,
        direction=[float(x) for x in u],
        formulation=formulation,
        precision=precision,
        nodes=quad.size,
        kappa0=quad.kappa0,
        spectrum=spectrum,
        warnings=_spectrum_warnings(spectrum, scene.n_objects, energy=False),
    )
