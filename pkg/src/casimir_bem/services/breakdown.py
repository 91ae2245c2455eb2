"""
Low-frequency breakdown table: force integrands of EFIE and A-EFIE in single
and double precision, judged against double-precision A-EFIE.
"""

import logging
from itertools import product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from casimir_bem.core.errors import CasimirBemError
from casimir_bem.models.quadrature import KappaQuadrature
from casimir_bem.models.scene import TriScene
from casimir_bem.models.system_matrix import Formulation, Precision
from casimir_bem.schemas.result_schema import BreakdownRow
from casimir_bem.services.assembly import BemAssembler
from casimir_bem.services.casimir import (
    assembler_for,
    default_direction,
    evaluate_nodes,
    force_sample,
)

logger = logging.getLogger(__name__)

RELATIVE_ERROR_FLOOR = 1e-3
REFERENCE = (Formulation.AEFIE, Precision.DOUBLE)

Series = Tuple[Formulation, Precision]


def relative_errors(values: Sequence[Optional[float]], reference: Sequence[float]) -> List[Optional[float]]:
    """|x - ref| / max(|ref|, floor · max|ref|) node by node; None where x is missing."""
    ref = np.abs(np.asarray(reference, dtype=np.float64))
    floor = RELATIVE_ERROR_FLOOR * float(ref.max()) if ref.size else 0.0
    out: List[Optional[float]] = []
    for x, r, r_abs in zip(values, reference, ref):
        if x is None or not np.isfinite(x):
            out.append(None)
            continue
        scale = max(float(r_abs), floor)
        out.append(abs(x - r) / scale if scale > 0 else (0.0 if x == r else float("inf")))
    return out


def breakdown_experiment(
    scene: TriScene,
    quad: KappaQuadrature,
    precisions: Iterable[Union[Precision, str]] = (Precision.SINGLE, Precision.DOUBLE),
    formulations: Iterable[Union[Formulation, str]] = (Formulation.EFIE, Formulation.AEFIE),
    object_i: int = 1,
    direction_u: Optional[Sequence[float]] = None,
    assembler: Optional[BemAssembler] = None,
    threads: Optional[int] = None,
) -> List[BreakdownRow]:
    """
    One row per (series, κ). A node that fails is recorded with its error in
    `status` and no integrand; the table itself never raises for a node.
    """
    assembler = assembler_for(scene, assembler)
    u = default_direction(scene, object_i) if direction_u is None else direction_u
    series: List[Series] = [
        (Formulation(f), Precision(p)) for f, p in product(formulations, precisions)
    ]
    needed = series if REFERENCE in series else [REFERENCE, *series]

    samples: Dict[Series, list] = {}
    for formulation, precision in needed:

        def row(q, k, w, formulation=formulation, precision=precision):
            try:
                s = force_sample(assembler, k, object_i, u, formulation, precision, weight=w)
                return s.integrand, s.condition_estimate, "ok"
            except CasimirBemError as err:
                logger.warning(
                    "%s/%s failed at kappa=%.6g: %s", formulation.value, precision.value, k, err
                )
                return None, None, f"{type(err).__name__}: {err}"

        samples[(formulation, precision)] = evaluate_nodes(row, quad, threads)

    reference = [value for value, _, _ in samples[REFERENCE]]
    if any(v is None for v in reference):
        failed = [float(k) for k, v in zip(quad.nodes, reference) if v is None]
        logger.warning("reference series failed at kappa=%s; errors left blank there", failed)
    ref_values = [0.0 if v is None else v for v in reference]

    rows: List[BreakdownRow] = []
    for formulation, precision in series:
        values = [value for value, _, _ in samples[(formulation, precision)]]
        errors = relative_errors(values, ref_values)
        for k, (value, cond, status), err, ref in zip(
            quad.nodes, samples[(formulation, precision)], errors, reference
        ):
            rows.append(
                BreakdownRow(
                    kappa=float(k),
                    formulation=formulation,
                    precision=precision,
                    integrand=value,
                    condition_estimate=cond,
                    relative_error=None if ref is None else err,
                    status=status,
                )
            )
    return rows


def max_relative_error(rows: Iterable[BreakdownRow], formulation, precision, first: Optional[int] = None) -> float:
    """Largest relative error of one series, optionally over its `first` lowest-κ nodes only."""
    picked = sorted(
        (r for r in rows if r.formulation == Formulation(formulation) and r.precision == Precision(precision)),
        key=lambda r: r.kappa,
    )
    if first is not None:
        picked = picked[:first]
    errors = [r.relative_error for r in picked if r.relative_error is not None]
    return max(errors) if errors else float("nan")
