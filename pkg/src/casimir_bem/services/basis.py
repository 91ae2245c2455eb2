import logging

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from casimir_bem.core.errors import MeshError
from casimir_bem.models.basis import RwgBasis
from casimir_bem.models.scene import TriScene
from casimir_bem.services.geometry import validate_scene

logger = logging.getLogger(__name__)


def build_basis(scene: TriScene) -> RwgBasis:
    """
    RWG functions on every interior edge and one pulse per triangle.

    Edges are numbered object by object; within an object they follow the
    sorted vertex pair order. T+ is the lower-indexed of the two triangles.
    """
    census = validate_scene(scene)
    interior = np.flatnonzero(census.interior)
    if interior.size == 0:
        raise MeshError("mesh has no interior edges, so it carries no RWG functions")

    faces = census.faces[interior]
    slots = census.slots[interior]
    swap = faces[:, 0] > faces[:, 1]
    faces = np.where(swap[:, None], faces[:, ::-1], faces)
    slots = np.where(swap[:, None], slots[:, ::-1], slots)

    edge_object = scene.object_id[faces[:, 0]]
    order = np.argsort(edge_object, kind="stable")
    faces, slots, edge_object = faces[order], slots[order], edge_object[order]
    edge_vertices = census.edges[interior][order]

    plus, minus = faces[:, 0], faces[:, 1]
    tri = scene.triangles
    plus_free = tri[plus, slots[:, 0]]
    minus_free = tri[minus, slots[:, 1]]
    v = scene.vertices
    edge_length = np.linalg.norm(v[edge_vertices[:, 1]] - v[edge_vertices[:, 0]], axis=1)

    e = interior.size
    p = scene.n_triangles
    idx = np.arange(e)
    incidence = sp.csr_matrix(
        (
            np.concatenate([np.ones(e), -np.ones(e)]).astype(np.int8),
            (np.concatenate([plus, minus]), np.concatenate([idx, idx])),
        ),
        shape=(p, e),
    )

    triangle_edges = np.full((p, 3), -1, dtype=np.int64)
    triangle_signs = np.zeros((p, 3), dtype=np.int8)
    triangle_edges[plus, slots[:, 0]] = idx
    triangle_signs[plus, slots[:, 0]] = 1
    triangle_edges[minus, slots[:, 1]] = idx
    triangle_signs[minus, slots[:, 1]] = -1

    adjacency = sp.coo_matrix((np.ones(e), (plus, minus)), shape=(p, p))
    _, patch_component = connected_components(adjacency, directed=False)

    k = scene.n_objects
    bounds = np.searchsorted(edge_object, np.arange(k + 1))
    edge_ranges = tuple((int(bounds[i]), int(bounds[i + 1])) for i in range(k))
    patch_ranges = tuple(scene.object_range(i) for i in range(k))

    boundary = int(np.count_nonzero(census.boundary))
    logger.debug(
        "basis: %d RWG functions, %d patches, %d boundary edges, %d components",
        e,
        p,
        boundary,
        int(patch_component.max()) + 1,
    )

    return RwgBasis(
        edge_vertices=edge_vertices,
        plus_triangle=plus,
        minus_triangle=minus,
        plus_free_vertex=plus_free,
        minus_free_vertex=minus_free,
        edge_length=edge_length,
        incidence=incidence,
        edge_object=edge_object,
        patch_object=scene.object_id.copy(),
        edge_ranges=edge_ranges,
        patch_ranges=patch_ranges,
        triangle_edges=triangle_edges,
        triangle_signs=triangle_signs,
        patch_component=patch_component.astype(np.int64),
    )

