import math

import numpy as np
import pytest

from casimir_bem.core.errors import (
    AssemblyError,
    MissingBlockMetadataError,
    NodeEvaluationError,
    SingularMatrixError,
)
from casimir_bem.models.system_matrix import Formulation, Precision, SystemMatrix
from casimir_bem.services import casimir, spectral
from casimir_bem.services.assembly import BemAssembler
from casimir_bem.services.casimir import (
    default_direction,
    energy_integrand,
    force_integrand,
    integrate_energy,
    integrate_force,
    normalization_matrix,
)
from casimir_bem.services.geometry import pair_scene, scale_scene, translate_object
from casimir_bem.services.kappa_grid import build_kappa_grid
from casimir_bem.services.spectral import generalized_eigen_trace, logdet_derivative, logdet_ratio

X = (1.0, 0.0, 0.0)
SPHERE = {"radius": 1.0, "subdivisions": 0}


def test_normalization_of_single_object(icosahedron):
    Z = BemAssembler(icosahedron).assemble_aefie(0.5)

    assert np.array_equal(normalization_matrix(Z).entries, Z.entries)


def test_normalization_drops_cross_blocks(pair_assembler):
    Z = pair_assembler.assemble_aefie(0.5)
    Z_inf = normalization_matrix(Z, pair_assembler.basis)
    same = Z.objects[:, None] == Z.objects[None, :]

    assert np.all(Z_inf.entries[~same] == 0)
    assert np.array_equal(Z_inf.entries[same], Z.entries[same])
    assert np.array_equal(Z_inf.D, Z.D)
    assert np.array_equal(Z_inf.charge_block, Z.charge_block)
    assert np.any(Z.entries[~same] != 0)


def test_normalization_needs_object_ids(pair_assembler):
    Z = pair_assembler.assemble_efie(0.5)
    bare = SystemMatrix(
        kind=Z.kind,
        kappa=Z.kappa,
        entries=Z.entries.copy(),
        precision=Z.precision,
        layout=Z.layout,
        objects=None,
    )

    with pytest.raises(MissingBlockMetadataError):
        normalization_matrix(bare)


def test_single_object_integrand_is_zero(icosahedron):
    assembler = BemAssembler(icosahedron)

    for kind in Formulation:
        assert energy_integrand(icosahedron, 0.7, kind, assembler=assembler) == 0.0
    assert force_integrand(icosahedron, 0.7, 0, X, assembler=assembler) == 0.0


@pytest.mark.parametrize("kappa", [0.05, 0.5, 2.0])
def test_energy_integrand_is_negative(sphere_pair, pair_assembler, kappa):
    assert energy_integrand(sphere_pair, kappa, assembler=pair_assembler) < 0


@pytest.mark.parametrize("kappa", [0.1, 0.5, 1.0])
def test_formulations_agree_on_energy(sphere_pair, pair_assembler, kappa):
    efie = energy_integrand(sphere_pair, kappa, Formulation.EFIE, assembler=pair_assembler)
    aefie = energy_integrand(sphere_pair, kappa, Formulation.AEFIE, assembler=pair_assembler)

    assert efie == pytest.approx(aefie, rel=1e-6)


def test_charge_neutrality_does_not_change_energy(sphere_pair):
    full = BemAssembler(sphere_pair, charge_neutral=False)
    reduced = BemAssembler(sphere_pair, charge_neutral=True)

    assert energy_integrand(sphere_pair, 0.5, assembler=full) == pytest.approx(
        energy_integrand(sphere_pair, 0.5, assembler=reduced), rel=1e-8
    )


def test_unit_constants_cancel_in_ratios(pair_assembler):
    eta0, c0 = 376.730313668, 299792458.0
    Z = pair_assembler.assemble_aefie(0.5)
    Z_inf = normalization_matrix(Z, pair_assembler.basis)
    dZ = pair_assembler.assemble_gradient(Formulation.AEFIE, 0.5, 1, X)
    rows = np.where(np.arange(Z.n) < Z.layout.n_current, eta0, 1.0)
    cols = np.where(np.arange(Z.n) < Z.layout.n_current, 1.0, 1.0 / c0)

    def si(a):
        return rows[:, None] * np.asarray(a) * cols[None, :]

    assert logdet_ratio(si(Z.entries), si(Z_inf.entries)) == pytest.approx(
        logdet_ratio(Z, Z_inf), rel=1e-6
    )
    assert logdet_derivative(si(Z.entries), si(dZ.entries)) == pytest.approx(
        logdet_derivative(Z, dZ), rel=1e-6
    )


@pytest.mark.parametrize("kind", [Formulation.EFIE, Formulation.AEFIE])
def test_force_integrand_is_energy_derivative(sphere_pair, kind):
    kappa, h = 0.4, 1e-3
    plus = translate_object(sphere_pair, 1, (0.5 * h, 0.0, 0.0))
    minus = translate_object(sphere_pair, 1, (-0.5 * h, 0.0, 0.0))
    fd = (energy_integrand(plus, kappa, kind) - energy_integrand(minus, kappa, kind)) / h

    assert force_integrand(sphere_pair, kappa, 1, X, kind) == pytest.approx(fd, rel=1e-4)


def test_trace_matches_generalized_eigenvalues(pair_assembler):
    Z = pair_assembler.assemble_aefie(0.3)
    dZ = pair_assembler.assemble_gradient(Formulation.AEFIE, 0.3, 1, X)

    assert logdet_derivative(Z, dZ) == pytest.approx(generalized_eigen_trace(Z, dZ), rel=1e-6, abs=1e-12)


def test_default_direction_points_away(sphere_pair):
    assert np.allclose(default_direction(sphere_pair, 1), [1.0, 0.0, 0.0])
    assert np.allclose(default_direction(sphere_pair, 0), [-1.0, 0.0, 0.0])


def test_assembler_must_match_scene(sphere_pair, icosahedron):
    with pytest.raises(AssemblyError):
        energy_integrand(sphere_pair, 0.5, assembler=BemAssembler(icosahedron))


def test_energy_is_negative_and_forces_attract(sphere_pair, pair_assembler):
    quad = build_kappa_grid(0.5, 8)
    energy = integrate_energy(sphere_pair, quad, assembler=pair_assembler)
    force = integrate_force(sphere_pair, quad, assembler=pair_assembler)

    assert energy.energy < 0
    assert force.force < 0
    assert force.direction == pytest.approx([1.0, 0.0, 0.0])
    assert len(energy.spectrum) == 8
    assert energy.spectrum[0].kappa == pytest.approx(quad.nodes[0])


def test_forces_are_equal_and_opposite(sphere_pair, pair_assembler):
    quad = build_kappa_grid(0.5, 6)
    on_second = integrate_force(sphere_pair, quad, 1, X, assembler=pair_assembler)
    on_first = integrate_force(sphere_pair, quad, 0, X, assembler=pair_assembler)

    assert on_first.force == pytest.approx(-on_second.force, rel=1e-12)


def test_energy_scales_inversely_with_size(sphere_pair):
    s = 2.0
    quad = build_kappa_grid(0.5, 6)
    scaled_quad = build_kappa_grid(0.5 / s, 6)

    base = integrate_energy(sphere_pair, quad)
    scaled = integrate_energy(scale_scene(sphere_pair, s), scaled_quad)

    assert scaled.energy == pytest.approx(base.energy / s, rel=1e-8)


def test_integrals_are_thread_independent(sphere_pair, pair_assembler):
    quad = build_kappa_grid(0.5, 6)
    serial = integrate_energy(sphere_pair, quad, assembler=pair_assembler, threads=1)
    pooled = integrate_energy(sphere_pair, quad, assembler=pair_assembler, threads=3)

    assert pooled.energy == pytest.approx(serial.energy, rel=1e-12)
    assert [s.kappa for s in pooled.spectrum] == [s.kappa for s in serial.spectrum]


def test_undecayed_spectrum_is_reported(sphere_pair, pair_assembler):
    quad = build_kappa_grid(0.01, 4)
    result = integrate_energy(sphere_pair, quad, assembler=pair_assembler)

    assert any("not decayed" in w for w in result.warnings)
    assert result.tail_ratio > 1e-6


def test_failing_node_keeps_partial_spectrum(sphere_pair, pair_assembler, monkeypatch):
    """
    GIVEN a sampler that fails with a singular pivot at the third node
    WHEN the energy is integrated
    THEN the error names that κ and carries the two samples before it
    """
    quad = build_kappa_grid(0.5, 5)
    real = casimir.energy_sample

    def flaky(assembler, kappa, formulation, precision, weight=0.0):
        if kappa == quad.nodes[2]:
            raise SingularMatrixError("stub pivot", kappa=kappa)
        return real(assembler, kappa, formulation, precision, weight=weight)

    monkeypatch.setattr(casimir, "energy_sample", flaky)

    with pytest.raises(NodeEvaluationError) as err:
        integrate_energy(sphere_pair, quad, assembler=pair_assembler)
    assert len(err.value.partial_spectrum) == 2
    assert err.value.kappa == pytest.approx(quad.nodes[2])


def test_energy_in_single_precision(sphere_pair, pair_assembler):
    quad = build_kappa_grid(0.5, 6)
    single = integrate_energy(
        sphere_pair, quad, precision=Precision.SINGLE, assembler=pair_assembler
    )

    assert single.precision is Precision.SINGLE
    assert math.isfinite(single.energy)
    assert all(s.precision is Precision.SINGLE for s in single.spectrum)


def test_condition_estimate_reuses_the_logdet_factorization(pair_assembler, monkeypatch):
    """
    GIVEN a counting wrapper around the LU routine
    WHEN one energy node and one force node are evaluated
    THEN Z is factorized once per node, plus once for Z∞ on the energy node
    """
    calls = []
    real = spectral.lu_factorize

    def counting(a):
        calls.append(a.shape)
        return real(a)

    monkeypatch.setattr(spectral, "lu_factorize", counting)

    casimir.energy_sample(pair_assembler, 0.5, Formulation.AEFIE, Precision.DOUBLE)
    assert len(calls) == 2

    calls.clear()
    casimir.force_sample(pair_assembler, 0.5, 1, X, Formulation.AEFIE, Precision.DOUBLE)
    assert len(calls) == 1


def test_finer_triangle_rules_change_the_integrand_less(sphere_pair):
    values = [
        energy_integrand(sphere_pair, 0.5, assembler=BemAssembler(sphere_pair, quadrature_order=order))
        for order in (3, 6, 12)
    ]

    assert abs(values[2] - values[1]) < abs(values[1] - values[0])


def test_normalized_integrand_vanishes_with_separation():
    gaps = [0.5, 1.0, 2.0, 4.0, 8.0]
    values = [abs(energy_integrand(pair_scene("sphere", SPHERE, gap), 0.5)) for gap in gaps]

    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-3 * values[0]
