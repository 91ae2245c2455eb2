import numpy as np
import pytest

from casimir_bem.core.errors import MeshError
from casimir_bem.models.scene import TriScene
from casimir_bem.services.basis import build_basis
from casimir_bem.services.geometry import generate_plate


def _rwg_value(scene, basis, n, points, triangle):
    """Λ_n at `points` lying on `triangle`; zero off its support."""
    points = np.atleast_2d(points)
    area = scene.areas[triangle]
    if triangle == basis.plus_triangle[n]:
        return (points - scene.vertices[basis.plus_free_vertex[n]]) / (2.0 * area)
    if triangle == basis.minus_triangle[n]:
        return (scene.vertices[basis.minus_free_vertex[n]] - points) / (2.0 * area)
    return np.zeros_like(points)


def test_square_has_one_rwg(square):
    basis = build_basis(square)

    assert basis.e == 1
    assert basis.p == 2
    assert basis.D.tolist() == [[1], [-1]]
    assert basis.edge_length[0] == pytest.approx(np.sqrt(2.0))


def test_icosahedron_sizes(icosahedron):
    basis = build_basis(icosahedron)

    assert basis.e == 30
    assert basis.p == 20
    assert basis.n_components == 1


def test_incidence_columns(icosphere):
    D = build_basis(icosphere).D

    assert np.all(D.sum(axis=0) == 0)
    assert np.all((D == 1).sum(axis=0) == 1)
    assert np.all((D == -1).sum(axis=0) == 1)


def test_plus_triangle_has_lower_index(icosphere):
    basis = build_basis(icosphere)

    assert np.all(basis.plus_triangle < basis.minus_triangle)


def test_object_ranges_partition(sphere_pair):
    basis = build_basis(sphere_pair)

    assert basis.edge_ranges == ((0, 30), (30, 60))
    assert basis.patch_ranges == ((0, 20), (20, 40))
    assert np.array_equal(basis.edge_object, np.repeat([0, 1], 30))
    assert basis.n_components == 2


def test_triangle_slots_agree_with_incidence(icosphere):
    basis = build_basis(icosphere)
    D = basis.D

    for t in range(basis.p):
        for slot in range(3):
            n = basis.triangle_edges[t, slot]
            assert n >= 0
            assert D[t, n] == basis.triangle_signs[t, slot]


def test_free_vertices_are_off_the_edge(icosphere):
    basis = build_basis(icosphere)

    for vertices, free in ((basis.edge_vertices, basis.plus_free_vertex), (basis.edge_vertices, basis.minus_free_vertex)):
        assert np.all(free != vertices[:, 0])
        assert np.all(free != vertices[:, 1])


def test_normal_flux_is_continuous(icosphere):
    basis = build_basis(icosphere)
    v = icosphere.vertices

    for n in range(basis.e):
        a, b = v[basis.edge_vertices[n]]
        mid = 0.5 * (a + b)
        along = (b - a) / np.linalg.norm(b - a)
        for tri in (basis.plus_triangle[n], basis.minus_triangle[n]):
            value = _rwg_value(icosphere, basis, n, mid, tri)[0]
            across = value - (value @ along) * along
            assert np.linalg.norm(across) == pytest.approx(1.0 / basis.edge_length[n], rel=1e-12)


def test_rwg_vanishes_off_support(icosahedron):
    basis = build_basis(icosahedron)
    support = {int(basis.plus_triangle[0]), int(basis.minus_triangle[0])}
    elsewhere = next(t for t in range(basis.p) if t not in support)
    zero = _rwg_value(icosahedron, basis, 0, icosahedron.centroids[elsewhere], elsewhere)

    assert np.array_equal(zero, np.zeros((1, 3)))


def test_single_triangle_carries_no_current():
    scene = TriScene(
        vertices=np.eye(3),
        triangles=np.array([[0, 1, 2]]),
        object_id=np.zeros(1, dtype=int),
    )

    with pytest.raises(MeshError):
        build_basis(scene)


def test_neutral_reduction_reproduces_incidence(sphere_pair):
    basis = build_basis(sphere_pair)
    kept, B = basis.charge_reduction(neutral=True)
    D = basis.D

    assert B.shape == (40, 38)
    assert kept.size == 38
    assert np.array_equal(B @ D[kept], D)


def test_open_plate_reduction():
    basis = build_basis(generate_plate(1.0, 3))
    kept, B = basis.charge_reduction(neutral=True)

    assert B.shape == (18, 17)
    assert np.array_equal(B @ basis.D[kept], basis.D)


def test_reduction_off_keeps_every_patch(icosahedron):
    basis = build_basis(icosahedron)
    kept, B = basis.charge_reduction(neutral=False)

    assert np.array_equal(kept, np.arange(20))
    assert np.array_equal(B.toarray(), np.eye(20))
