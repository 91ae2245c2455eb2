import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from casimir_bem.core.errors import AssemblyError, InvalidArgumentError, UnknownObjectError
from casimir_bem.models.system_matrix import Formulation, Precision
from casimir_bem.services.assembly import BemAssembler, assemble_P, assemble_gradient
from casimir_bem.services.basis import build_basis
from casimir_bem.services.geometry import (
    combine_scenes,
    generate_plate,
    minimum_gap,
    translate_object,
)
from casimir_bem.services.kernels import static_singular_integral
from casimir_bem.services.spectral import condition_estimate
from casimir_bem.services.triangle_rules import triangle_rule

X = (1.0, 0.0, 0.0)


def _far_plates(distance):
    plate = generate_plate(0.1, 1)
    return translate_object(combine_scenes([plate, plate]), 1, (0.0, 0.0, distance))


def _outer_integral(triangle, f):
    a0, e1, e2 = triangle[0], triangle[1] - triangle[0], triangle[2] - triangle[0]
    jac = np.linalg.norm(np.cross(e1, e2))
    value, _ = dblquad(
        lambda v, u: f(a0 + u * e1 + v * e2) * jac,
        0.0,
        1.0,
        0.0,
        lambda u: 1.0 - u,
        epsabs=1e-12,
        epsrel=1e-9,
    )
    return value


def _finite_difference(scene, kind, kappa, object_i, u, h):
    u = np.asarray(u)
    plus = BemAssembler(translate_object(scene, object_i, 0.5 * h * u)).assemble(kind, kappa)
    minus = BemAssembler(translate_object(scene, object_i, -0.5 * h * u)).assemble(kind, kappa)
    return (plus.entries - minus.entries) / h


def test_blocks_are_symmetric(icosphere):
    assembler = BemAssembler(icosphere)
    V = assembler.assemble_V(0.7)
    P = assembler.assemble_P(0.7)

    assert np.array_equal(V, V.T)
    assert np.array_equal(P, P.T)
    assert np.all(np.diag(P) > 0)
    assert np.all(np.diag(V) > 0)


@pytest.mark.parametrize("kappa", [0.0, 0.3, 2.0])
def test_direct_S_matches_incidence_form(icosphere, kappa):
    assembler = BemAssembler(icosphere)
    D = assembler.basis.D.astype(float)
    S = assembler.assemble_S(kappa)
    expected = D.T @ assembler.assemble_P(kappa) @ D

    assert np.linalg.norm(S - expected) <= 1e-10 * np.linalg.norm(expected)


def test_direct_S_on_two_triangles(square):
    assembler = BemAssembler(square)
    D = assembler.basis.D.astype(float)

    assert assembler.assemble_S(1.0)[0, 0] == pytest.approx(
        (D.T @ assembler.assemble_P(1.0) @ D)[0, 0], rel=1e-12
    )


def test_static_self_patch_matches_oracle(square):
    tri = square.corners[0]
    area = square.areas[0]
    P = BemAssembler(square).assemble_P(0.0)
    expected = _outer_integral(tri, lambda r: static_singular_integral(tri, r)) / area**2

    assert P[0, 0] == pytest.approx(expected, rel=5e-3)


def test_static_neighbour_patch_matches_oracle(square):
    t, s = square.corners[0], square.corners[1]
    P = BemAssembler(square).assemble_P(0.0)
    expected = _outer_integral(t, lambda r: static_singular_integral(s, r))
    expected /= square.areas[0] * square.areas[1]

    assert P[0, 1] == pytest.approx(expected, rel=5e-3)


def test_far_patch_matches_fine_quadrature():
    scene = _far_plates(2.0)
    kappa = 0.8
    P = BemAssembler(scene).assemble_P(kappa)

    rule = triangle_rule(12)
    x = rule.points(scene.corners[[0]])[0]
    y = rule.points(scene.corners[[2]])[0]
    R = np.linalg.norm(x[:, None, :] - y[None, :, :], axis=2)
    expected = rule.weights @ (np.exp(-kappa * R) / (4.0 * math.pi * R)) @ rule.weights

    assert P[0, 2] == pytest.approx(expected, rel=1e-6)


def test_cross_coupling_decays_exponentially():
    assembler = BemAssembler(_far_plates(2.0))
    V1, V2 = assembler.assemble_V(1.0), assembler.assemble_V(2.0)
    P1, P2 = assembler.assemble_P(1.0), assembler.assemble_P(2.0)

    assert V2[0, 1] / V1[0, 1] == pytest.approx(math.exp(-2.0), rel=0.1)
    assert P2[0, 2] / P1[0, 2] == pytest.approx(math.exp(-2.0), rel=0.05)


def test_chunking_does_not_change_blocks(icosahedron):
    whole = BemAssembler(icosahedron).assemble_V(0.5)
    chunked = BemAssembler(icosahedron, chunk_size=7).assemble_V(0.5)

    assert np.allclose(chunked, whole, rtol=1e-12, atol=1e-15)


def test_aefie_blocks(sphere_pair, pair_assembler):
    kappa = 0.25
    Z = pair_assembler.assemble_aefie(kappa)
    basis = pair_assembler.basis
    D = basis.D

    assert Z.n == basis.e + basis.p - 2
    assert np.array_equal(Z.charge_block, -(kappa**2) * np.eye(basis.p - 2))
    assert np.array_equal(Z.D, D[pair_assembler.kept_patches])
    assert np.array_equal(Z.V, pair_assembler.assemble_V(kappa))


def test_aefie_without_neutrality_keeps_all_charges(icosahedron):
    assembler = BemAssembler(icosahedron, charge_neutral=False)
    Z = assembler.assemble_aefie(1.0)
    P = assembler.assemble_P(1.0)

    assert Z.n == 30 + 20
    assert np.array_equal(Z.D, assembler.basis.D)
    assert np.allclose(Z.DtP, assembler.basis.D.T @ P, rtol=1e-14, atol=1e-16)


def test_neutral_charge_block_uses_reduced_potential(icosahedron):
    assembler = BemAssembler(icosahedron)
    kept, B = assembler.kept_patches, assembler.charge_map.toarray().astype(float)
    P = assembler.assemble_P(0.5)
    Z = assembler.assemble_aefie(0.5)

    expected = assembler.basis.D[kept].T @ (B.T @ P @ B)
    assert np.allclose(Z.DtP, expected, rtol=1e-12, atol=1e-14)


def test_efie_is_symmetric_positive_definite(icosphere):
    M = BemAssembler(icosphere).assemble_efie(1.0).entries

    assert np.array_equal(M, M.T)
    assert np.linalg.eigvalsh(M).min() > 0


def test_efie_needs_positive_kappa(icosahedron):
    with pytest.raises(InvalidArgumentError):
        BemAssembler(icosahedron).assemble_efie(0.0)


def test_aefie_accepts_static_limit(icosahedron):
    Z = BemAssembler(icosahedron).assemble_aefie(0.0)

    assert np.all(Z.charge_block == 0)
    assert math.isfinite(condition_estimate(Z))


def test_efie_conditioning_grows_at_low_frequency(icosahedron):
    assembler = BemAssembler(icosahedron)
    conds = [condition_estimate(assembler.assemble_efie(k)) for k in (1e-2, 1e-4, 1e-6)]

    assert conds[0] < conds[1] < conds[2]


def test_aefie_conditioning_stays_bounded(icosphere):
    assembler = BemAssembler(icosphere)
    high = condition_estimate(assembler.assemble_aefie(1e-2))
    low = condition_estimate(assembler.assemble_aefie(1e-6))

    assert low < 10.0 * high
    assert high < 10.0 * low


def test_single_precision_entries(icosahedron):
    assembler = BemAssembler(icosahedron)
    single = assembler.assemble(Formulation.AEFIE, 0.5, Precision.SINGLE)
    double = assembler.assemble(Formulation.AEFIE, 0.5, Precision.DOUBLE)

    assert single.entries.dtype == np.float32
    assert single.precision is Precision.SINGLE
    assert np.allclose(single.entries, double.entries, rtol=1e-5, atol=1e-6 * np.abs(double.entries).max())


def test_object_ids_follow_unknowns(pair_assembler):
    Z = pair_assembler.assemble_aefie(0.5)

    assert np.array_equal(Z.objects[:60], np.repeat([0, 1], 30))
    assert np.array_equal(Z.objects[60:], np.repeat([0, 1], 19))


def test_module_functions_reject_foreign_basis(icosahedron, square):
    with pytest.raises(AssemblyError):
        assemble_P(build_basis(square), icosahedron, 1.0)


@pytest.mark.parametrize("kind", [Formulation.EFIE, Formulation.AEFIE])
@pytest.mark.parametrize("h", [1e-3, 1e-4, 1e-5])
def test_gradient_matches_finite_difference(sphere_pair, kind, h):
    kappa = 0.5
    dZ = BemAssembler(sphere_pair).assemble_gradient(kind, kappa, 1, X)
    fd = _finite_difference(sphere_pair, kind, kappa, 1, X, h=h)

    assert np.abs(fd - dZ.entries).max() <= 1e-5 * np.abs(dZ.entries).max()


def test_gradient_along_oblique_direction(sphere_pair):
    u = np.array([0.6, 0.0, 0.8])
    dZ = BemAssembler(sphere_pair).assemble_gradient(Formulation.AEFIE, 1.0, 1, u)
    fd = _finite_difference(sphere_pair, Formulation.AEFIE, 1.0, 1, u, h=1e-4)

    assert np.allclose(dZ.direction, u)
    assert np.abs(fd - dZ.entries).max() <= 1e-5 * np.abs(dZ.entries).max()


def test_gradient_has_no_self_coupling(pair_assembler):
    dZ = pair_assembler.assemble_gradient(Formulation.AEFIE, 0.5, 1, X)
    same = dZ.objects[:, None] == dZ.objects[None, :]

    assert np.all(dZ.entries[same] == 0)
    assert np.all(dZ.entries[dZ.layout.charge, :] == 0)
    assert np.any(dZ.entries != 0)


def test_gradient_is_antisymmetric_between_objects(pair_assembler):
    first = pair_assembler.assemble_gradient(Formulation.EFIE, 0.5, 0, X)
    second = pair_assembler.assemble_gradient(Formulation.EFIE, 0.5, 1, X)

    assert np.array_equal(first.entries, -second.entries)


def test_gradient_unknown_object(sphere_pair):
    with pytest.raises(UnknownObjectError):
        assemble_gradient(build_basis(sphere_pair), sphere_pair, 0.5, 2, X)


def _close_plates(gap):
    plate = generate_plate(1.0, 1)
    return translate_object(combine_scenes([plate, plate]), 1, (0.0, 0.0, gap))


def _fine_pair(scene, t, s, f):
    rule = triangle_rule(12)
    x = rule.points(scene.corners[[t]])[0]
    y = rule.points(scene.corners[[s]])[0]
    return np.einsum("i,j,ij->", rule.weights, rule.weights, f(x[:, None, :], y[None, :, :]))


def test_close_cross_pairs_use_the_near_rule():
    scene, kappa = _close_plates(0.05), 0.7
    assembler = BemAssembler(scene, quadrature_order=1, near_quadrature_order=12)
    basis = assembler.basis

    def g(x, y):
        R = np.linalg.norm(x - y, axis=-1)
        return np.exp(-kappa * R) / (4.0 * math.pi * R)

    P = assembler.assemble_P(kappa)
    assert P[0, 2] == pytest.approx(_fine_pair(scene, 0, 2, g), rel=1e-10)

    m, n = (int(np.flatnonzero(basis.edge_object == k)[0]) for k in (0, 1))
    sides = {
        +1: (basis.plus_triangle, basis.plus_free_vertex),
        -1: (basis.minus_triangle, basis.minus_free_vertex),
    }
    expected = 0.0
    for sa, (tri_a, free_a) in sides.items():
        va = scene.vertices[free_a[m]]
        for sb, (tri_b, free_b) in sides.items():
            vb = scene.vertices[free_b[n]]
            expected += 0.25 * _fine_pair(
                scene,
                tri_a[m],
                tri_b[n],
                lambda x, y: sa * sb * np.sum((x - va) * (y - vb), axis=-1) * g(x, y),
            )
    assert assembler.assemble_V(kappa)[m, n] == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("kind", [Formulation.EFIE, Formulation.AEFIE])
def test_gradient_matches_finite_difference_at_small_gap(kind):
    scene, kappa, u = _close_plates(0.05), 0.7, (0.0, 0.0, 1.0)
    dZ = BemAssembler(scene).assemble_gradient(kind, kappa, 1, u)
    fd = _finite_difference(scene, kind, kappa, 1, u, h=1e-5)

    assert np.abs(fd - dZ.entries).max() <= 1e-5 * np.abs(dZ.entries).max()


@pytest.mark.parametrize("kind", [Formulation.EFIE, Formulation.AEFIE])
def test_cross_blocks_are_screened_at_large_kappa(sphere_pair, pair_assembler, kind):
    # Meshed spheres lie inside the true ones, so every cross distance is at least the gap of 1.
    assert minimum_gap(sphere_pair) >= 1.0 - 1e-12
    kappa = 41.0
    Z = pair_assembler.assemble(kind, kappa)
    cross = Z.objects[:, None] != Z.objects[None, :]

    assert np.abs(Z.entries[cross]).max() < 1e-16 * np.abs(Z.entries).max()
