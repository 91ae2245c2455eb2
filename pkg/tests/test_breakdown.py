import numpy as np
import pytest

from casimir_bem.core.errors import SingularMatrixError
from casimir_bem.models.system_matrix import Formulation, Precision
from casimir_bem.schemas.result_schema import SpectrumSample
from casimir_bem.services import breakdown
from casimir_bem.services.breakdown import (
    RELATIVE_ERROR_FLOOR,
    breakdown_experiment,
    max_relative_error,
    relative_errors,
)
from casimir_bem.services.kappa_grid import build_kappa_grid


def test_relative_errors_use_the_reference():
    assert relative_errors([1.1, 2.0], [1.0, 2.0]) == pytest.approx([0.1, 0.0])


def test_relative_errors_have_a_floor():
    errors = relative_errors([1e-9, 1.0], [0.0, 1.0])

    assert errors[0] == pytest.approx(1e-9 / RELATIVE_ERROR_FLOOR)


def test_missing_values_have_no_error():
    assert relative_errors([None, float("nan"), 1.0], [1.0, 1.0, 1.0]) == [None, None, 0.0]


class DummyForce:
    """Stands in for force_sample: a fixed integrand per series, EFIE/single fails at low kappa."""

    values = {
        (Formulation.AEFIE, Precision.DOUBLE): 1.0,
        (Formulation.AEFIE, Precision.SINGLE): 1.0001,
        (Formulation.EFIE, Precision.DOUBLE): 1.001,
        (Formulation.EFIE, Precision.SINGLE): 1.5,
    }

    def __init__(self, kappa_fail):
        self.kappa_fail = kappa_fail
        self.calls = []

    def __call__(self, assembler, kappa, object_i, direction_u, formulation, precision, weight=0.0):
        self.calls.append((formulation, precision, kappa))
        if (formulation, precision) == (Formulation.EFIE, Precision.SINGLE) and kappa < self.kappa_fail:
            raise SingularMatrixError("stub pivot", kappa=kappa)
        return SpectrumSample(
            kappa=kappa,
            weight=weight,
            integrand=self.values[(formulation, precision)] * kappa,
            formulation=formulation,
            precision=precision,
            condition_estimate=1.0 / kappa,
        )


def test_table_has_one_row_per_series_and_node(sphere_pair, pair_assembler, monkeypatch):
    """
    GIVEN a stubbed force sampler and a 5-node κ rule
    WHEN the breakdown table is built for all four series
    THEN there is one row per series and node
    """
    quad = build_kappa_grid(0.5, 5)
    stub = DummyForce(kappa_fail=float(quad.nodes[1]))
    monkeypatch.setattr(breakdown, "force_sample", stub)

    rows = breakdown_experiment(sphere_pair, quad, assembler=pair_assembler)

    assert len(rows) == 4 * 5
    assert {(r.formulation, r.precision) for r in rows} == set(DummyForce.values)


def test_failed_rows_are_recorded_not_raised(sphere_pair, pair_assembler, monkeypatch):
    """
    GIVEN a stub whose single-precision EFIE fails below the third node
    WHEN the breakdown table is built
    THEN the two failures become rows with a status and no values
    """
    quad = build_kappa_grid(0.5, 5)
    monkeypatch.setattr(breakdown, "force_sample", DummyForce(kappa_fail=float(quad.nodes[2])))

    rows = breakdown_experiment(sphere_pair, quad, assembler=pair_assembler)
    failed = [r for r in rows if r.status != "ok"]

    assert len(failed) == 2
    assert all(r.formulation is Formulation.EFIE and r.precision is Precision.SINGLE for r in failed)
    assert all(r.integrand is None and r.relative_error is None for r in failed)
    assert failed[0].status.startswith("SingularMatrixError")


def test_errors_against_double_aefie(sphere_pair, pair_assembler, monkeypatch):
    """
    GIVEN a stub with a fixed integrand ratio per series
    WHEN the breakdown table is built
    THEN each series' relative error is its ratio to double-precision A-EFIE
    """
    quad = build_kappa_grid(0.5, 4)
    monkeypatch.setattr(breakdown, "force_sample", DummyForce(kappa_fail=0.0))

    rows = breakdown_experiment(sphere_pair, quad, assembler=pair_assembler)

    assert max_relative_error(rows, Formulation.AEFIE, Precision.DOUBLE) == 0.0
    assert max_relative_error(rows, "AEFIE", "single") == pytest.approx(1e-4, rel=1e-6)
    assert max_relative_error(rows, Formulation.EFIE, Precision.SINGLE) == pytest.approx(0.5)
    assert max_relative_error(rows, Formulation.EFIE, Precision.DOUBLE, first=2) == pytest.approx(1e-3, rel=1e-6)


def test_reference_is_computed_even_when_not_requested(sphere_pair, pair_assembler, monkeypatch):
    """
    GIVEN only single-precision EFIE is requested
    WHEN the breakdown table is built
    THEN the double-precision A-EFIE reference is still sampled but not reported
    """
    quad = build_kappa_grid(0.5, 3)
    stub = DummyForce(kappa_fail=0.0)
    monkeypatch.setattr(breakdown, "force_sample", stub)

    rows = breakdown_experiment(
        sphere_pair,
        quad,
        precisions=[Precision.SINGLE],
        formulations=[Formulation.EFIE],
        assembler=pair_assembler,
    )

    assert len(rows) == 3
    assert (Formulation.AEFIE, Precision.DOUBLE, float(quad.nodes[0])) in stub.calls
    assert rows[0].relative_error == pytest.approx(0.5)


def test_double_precision_formulations_agree(sphere_pair, pair_assembler):
    quad = build_kappa_grid(0.5, 4)

    rows = breakdown_experiment(
        sphere_pair,
        quad,
        precisions=[Precision.DOUBLE],
        assembler=pair_assembler,
    )

    assert all(r.status == "ok" for r in rows)
    assert max_relative_error(rows, Formulation.EFIE, Precision.DOUBLE) < 1e-6
    assert all(np.isfinite(r.condition_estimate) for r in rows)
