"""
Scene generation, rigid placement and validation.

All generators return single-object scenes (object_id 0) with outward
winding; `combine_scenes` and `pair_scene` assemble multi-object scenes.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from casimir_bem.core.errors import (
    DegenerateTriangleError,
    InvalidArgumentError,
    MeshError,
    NonManifoldError,
    UnknownObjectError,
)
from casimir_bem.models.scene import TriScene

logger = logging.getLogger(__name__)

_GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0

ICOSAHEDRON_VERTICES = np.array(
    [
        [-1.0, _GOLDEN, 0.0],
        [1.0, _GOLDEN, 0.0],
        [-1.0, -_GOLDEN, 0.0],
        [1.0, -_GOLDEN, 0.0],
        [0.0, -1.0, _GOLDEN],
        [0.0, 1.0, _GOLDEN],
        [0.0, -1.0, -_GOLDEN],
        [0.0, 1.0, -_GOLDEN],
        [_GOLDEN, 0.0, -1.0],
        [_GOLDEN, 0.0, 1.0],
        [-_GOLDEN, 0.0, -1.0],
        [-_GOLDEN, 0.0, 1.0],
    ]
)

ICOSAHEDRON_FACES = np.array(
    [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [5, 4, 9],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ]
)


@dataclass(frozen=True, eq=False)
class EdgeCensus:
    """Undirected edges of a scene and the triangles sharing each of them."""

    edges: np.ndarray  # (E, 2) sorted vertex pairs
    face_count: np.ndarray  # (E,)
    faces: np.ndarray  # (E, 2) triangle ids, -1 where absent
    slots: np.ndarray  # (E, 2) local vertex slot opposite the edge in each face

    @property
    def interior(self) -> np.ndarray:
        return self.face_count == 2

    @property
    def boundary(self) -> np.ndarray:
        return self.face_count == 1


def _scene(vertices, triangles, object_id=None) -> TriScene:
    triangles = np.asarray(triangles, dtype=np.int64)
    if object_id is None:
        object_id = np.zeros(triangles.shape[0], dtype=np.int64)
    return TriScene(vertices=vertices, triangles=triangles, object_id=object_id)


def _orient_outward(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Flip all faces if the closed surface has negative signed volume."""
    c = vertices[triangles]
    volume = np.einsum("ij,ij->i", c[:, 0], np.cross(c[:, 1], c[:, 2])).sum() / 6.0
    return triangles if volume > 0 else triangles[:, ::-1].copy()


def grade_towards(unit_points: np.ndarray, focus: Sequence[float], grading: float) -> np.ndarray:
    """
    Conformal regrading of points on the unit sphere towards `focus`.

    Stereographic projection from the antipode of `focus`, scaling by
    `grading` in the plane, and projecting back. Spacing near the focus
    shrinks by `grading` and grows by 1/grading at the antipode; shapes of
    small triangles are kept.
    """
    if not 0 < grading <= 1:
        raise InvalidArgumentError(f"grading must be in (0, 1], got {grading}")
    f = np.asarray(focus, dtype=np.float64)
    if np.linalg.norm(f) == 0:
        raise InvalidArgumentError("focus must be a nonzero vector")
    f = f / np.linalg.norm(f)
    if grading == 1:
        return unit_points.copy()

    c = np.clip(unit_points @ f, -1.0, 1.0)
    side = unit_points - c[:, None] * f
    norm = np.linalg.norm(side, axis=1)
    on_axis = norm < 1e-14
    side = np.where(on_axis[:, None], 0.0, side / np.where(on_axis, 1.0, norm)[:, None])
    theta = 2.0 * np.arctan(grading * np.tan(0.5 * np.arccos(c)))
    graded = np.cos(theta)[:, None] * f + np.sin(theta)[:, None] * side
    return np.where(on_axis[:, None], unit_points, graded)


def generate_sphere(
    radius: float,
    subdivisions: int,
    grading: float = 1.0,
    focus: Sequence[float] = (0.0, 0.0, 1.0),
) -> TriScene:
    """
    Icosphere: icosahedron subdivided `subdivisions` times, projected to `radius`.

    With grading < 1 the vertices are regraded towards `focus` (see
    grade_towards); every vertex stays on the sphere.
    """
    if not radius > 0:
        raise InvalidArgumentError(f"sphere radius must be positive, got {radius}")
    if subdivisions < 0:
        raise InvalidArgumentError(f"subdivisions must be >= 0, got {subdivisions}")

    vertices: List[np.ndarray] = [
        v / np.linalg.norm(v) for v in ICOSAHEDRON_VERTICES
    ]
    faces = ICOSAHEDRON_FACES.tolist()

    for _ in range(subdivisions):
        midpoint: Dict[Tuple[int, int], int] = {}

        def middle(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in midpoint:
                m = vertices[a] + vertices[b]
                vertices.append(m / np.linalg.norm(m))
                midpoint[key] = len(vertices) - 1
            return midpoint[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = middle(a, b), middle(b, c), middle(c, a)
            refined.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]])
        faces = refined

    points = radius * grade_towards(np.asarray(vertices), focus, grading)
    triangles = _orient_outward(points, np.asarray(faces))
    return _scene(points, triangles)


def _rotation_to(axis: Sequence[float]) -> np.ndarray:
    """Rotation matrix taking +z onto the unit vector `axis`."""
    a = np.asarray(axis, dtype=np.float64)
    norm = np.linalg.norm(a)
    if norm == 0:
        raise InvalidArgumentError("axis must be a nonzero vector")
    a = a / norm
    z = np.array([0.0, 0.0, 1.0])
    v = np.cross(z, a)
    c = float(z @ a)
    if np.linalg.norm(v) < 1e-15:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1.0 + c)


def generate_capsule(
    total_length: float,
    radius: float,
    resolution: int,
    axis: Sequence[float] = (0.0, 0.0, 1.0),
) -> TriScene:
    """
    Cylinder with hemispherical caps, centred at the origin along `axis`.

    The surface is a stack of coaxial rings (4·resolution vertices each) with
    2·resolution latitude bands per cap; neighbouring rings are joined by quad
    strips split into triangles and the cap tips are closed with pole fans.
    """
    if not radius > 0:
        raise InvalidArgumentError(f"capsule radius must be positive, got {radius}")
    if total_length < 2.0 * radius:
        raise InvalidArgumentError(
            f"capsule length {total_length} is shorter than its diameter {2.0 * radius}"
        )
    if resolution < 1:
        raise InvalidArgumentError(f"resolution must be >= 1, got {resolution}")

    n_around = 4 * resolution
    n_lat = 2 * resolution
    half_cyl = 0.5 * (total_length - 2.0 * radius)
    spacing = 2.0 * math.pi * radius / n_around
    n_cyl = int(math.ceil(2.0 * half_cyl / spacing)) if half_cyl > 1e-12 * radius else 0

    # (z, ring radius) from the bottom tip to the top tip, tips excluded
    profile: List[Tuple[float, float]] = []
    for j in range(1, n_lat + 1):
        phi = 0.5 * math.pi * j / n_lat
        profile.append((-half_cyl - radius * math.cos(phi), radius * math.sin(phi)))
    for k in range(1, n_cyl + 1):
        profile.append((-half_cyl + 2.0 * half_cyl * k / n_cyl, radius))
    for j in range(n_lat - 1, 0, -1):
        phi = 0.5 * math.pi * j / n_lat
        profile.append((half_cyl + radius * math.cos(phi), radius * math.sin(phi)))

    theta = 2.0 * math.pi * np.arange(n_around) / n_around
    rings = [
        np.column_stack([rho * np.cos(theta), rho * np.sin(theta), np.full(n_around, z)])
        for z, rho in profile
    ]
    bottom = np.array([[0.0, 0.0, -half_cyl - radius]])
    top = np.array([[0.0, 0.0, half_cyl + radius]])
    points = np.vstack([bottom, *rings, top])

    n_rings = len(rings)
    ring_start = lambda r: 1 + r * n_around  # noqa: E731
    faces = []
    for i in range(n_around):
        j = (i + 1) % n_around
        faces.append([0, ring_start(0) + j, ring_start(0) + i])
    for r in range(n_rings - 1):
        lo, hi = ring_start(r), ring_start(r + 1)
        for i in range(n_around):
            j = (i + 1) % n_around
            faces.append([lo + i, lo + j, hi + j])
            faces.append([lo + i, hi + j, hi + i])
    apex = points.shape[0] - 1
    last = ring_start(n_rings - 1)
    for i in range(n_around):
        j = (i + 1) % n_around
        faces.append([apex, last + i, last + j])

    points = points @ _rotation_to(axis).T
    triangles = _orient_outward(points, np.asarray(faces))
    return _scene(points, triangles)


def generate_plate(side: float, resolution: int) -> TriScene:
    """Open square of side `side` in the z=0 plane, normal +z, 2·resolution² triangles."""
    if not side > 0:
        raise InvalidArgumentError(f"plate side must be positive, got {side}")
    if resolution < 1:
        raise InvalidArgumentError(f"resolution must be >= 1, got {resolution}")

    ticks = np.linspace(-0.5 * side, 0.5 * side, resolution + 1)
    xx, yy = np.meshgrid(ticks, ticks, indexing="xy")
    points = np.column_stack([xx.ravel(), yy.ravel(), np.zeros(xx.size)])

    n = resolution + 1
    faces = []
    for row in range(resolution):
        for col in range(resolution):
            a = row * n + col
            b, c, d = a + 1, a + n + 1, a + n
            faces.append([a, b, c])
            faces.append([a, c, d])
    return _scene(points, np.asarray(faces))


def combine_scenes(scenes: Iterable[TriScene]) -> TriScene:
    """Disjoint union; object ids are renumbered contiguously in input order."""
    vertices, triangles, object_id, transforms = [], [], [], []
    v_offset = 0
    o_offset = 0
    for scene in scenes:
        vertices.append(scene.vertices)
        triangles.append(scene.triangles + v_offset)
        object_id.append(scene.object_id + o_offset)
        transforms.append(scene.transforms)
        v_offset += scene.vertices.shape[0]
        o_offset += scene.n_objects
    if not triangles:
        raise InvalidArgumentError("cannot combine an empty list of scenes")
    return TriScene(
        vertices=np.vstack(vertices),
        triangles=np.vstack(triangles),
        object_id=np.concatenate(object_id),
        transforms=np.vstack(transforms),
    )


def translate_object(scene: TriScene, object_id: int, delta: Sequence[float]) -> TriScene:
    """Rigidly move one object; every other vertex keeps its exact coordinates."""
    if not 0 <= object_id < scene.n_objects:
        raise UnknownObjectError(f"scene has no object {object_id}")
    delta = np.asarray(delta, dtype=np.float64).reshape(3)

    moved = scene.object_vertices(object_id)
    vertices = scene.vertices.copy()
    vertices[moved] += delta
    transforms = scene.transforms.copy()
    transforms[object_id] += delta
    return TriScene(
        vertices=vertices,
        triangles=scene.triangles,
        object_id=scene.object_id,
        transforms=transforms,
    )


def scale_scene(scene: TriScene, factor: float) -> TriScene:
    if not factor > 0:
        raise InvalidArgumentError(f"scale factor must be positive, got {factor}")
    return TriScene(
        vertices=scene.vertices * factor,
        triangles=scene.triangles,
        object_id=scene.object_id,
        transforms=scene.transforms * factor,
    )


def edge_census(scene: TriScene) -> EdgeCensus:
    """
    Classify every undirected edge by the number of faces sharing it.

    Raises NonManifoldError for an edge shared by three or more faces.
    """
    tri = scene.triangles
    m = tri.shape[0]
    # edge opposite local vertex a joins vertices (a+1, a+2)
    a_idx = np.repeat(np.arange(3)[None, :], m, axis=0)
    first = tri[:, [1, 2, 0]]
    second = tri[:, [2, 0, 1]]
    pairs = np.stack([np.minimum(first, second), np.maximum(first, second)], axis=-1)
    flat = pairs.reshape(-1, 2)
    face_of = np.repeat(np.arange(m), 3)
    slot_of = a_idx.reshape(-1)

    edges, inverse, counts = np.unique(flat, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    if np.any(counts > 2):
        bad = edges[np.argmax(counts > 2)]
        raise NonManifoldError(
            f"edge ({bad[0]}, {bad[1]}) is shared by {int(counts.max())} faces",
            edge=(int(bad[0]), int(bad[1])),
        )

    order = np.argsort(inverse, kind="stable")
    faces = np.full((edges.shape[0], 2), -1, dtype=np.int64)
    slots = np.full((edges.shape[0], 2), -1, dtype=np.int64)
    position = np.zeros(edges.shape[0], dtype=np.int64)
    for k in order:
        e = inverse[k]
        faces[e, position[e]] = face_of[k]
        slots[e, position[e]] = slot_of[k]
        position[e] += 1
    return EdgeCensus(edges=edges, face_count=counts, faces=faces, slots=slots)


def validate_scene(scene: TriScene, area_tol: float = 0.0) -> EdgeCensus:
    """Check every TriScene invariant; returns the edge census on success."""
    tri = scene.triangles
    if tri.ndim != 2 or tri.shape[1] != 3 or tri.shape[0] == 0:
        raise MeshError("scene must contain at least one triangle")
    if tri.min() < 0 or tri.max() >= scene.vertices.shape[0]:
        raise MeshError("triangle references a vertex that does not exist")
    if np.any(np.diff(scene.object_id) < 0):
        raise MeshError("triangles must be grouped by object id")
    present = np.unique(scene.object_id)
    if present[0] != 0 or not np.array_equal(present, np.arange(present.size)):
        raise MeshError(f"object ids must be contiguous from 0, got {present.tolist()}")
    if scene.n_objects != present.size:
        raise MeshError("transforms do not match the number of objects")

    areas = scene.areas
    scale = max(float(np.ptp(scene.vertices, axis=0).max()), 1.0)
    bad = np.flatnonzero(areas <= area_tol * scale**2)
    if bad.size:
        raise DegenerateTriangleError(f"triangle {int(bad[0])} has non-positive area")

    owner = np.full(scene.vertices.shape[0], -1, dtype=np.int64)
    for k in range(scene.n_objects):
        used = scene.object_vertices(k)
        if np.any(owner[used] >= 0):
            raise MeshError(f"object {k} shares vertices with another object")
        owner[used] = k

    census = edge_census(scene)

    directed = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    _, dcounts = np.unique(directed, axis=0, return_counts=True)
    if np.any(dcounts > 1):
        dup = np.unique(directed, axis=0)[np.argmax(dcounts > 1)]
        raise NonManifoldError(
            f"inconsistent winding across edge ({dup[0]}, {dup[1]})",
            edge=(int(min(dup)), int(max(dup))),
        )
    return census


def euler_characteristic(scene: TriScene, object_id: int) -> int:
    idx = scene.object_triangles(object_id)
    sub = scene.triangles[idx]
    v = np.unique(sub).size
    pairs = np.sort(np.concatenate([sub[:, [0, 1]], sub[:, [1, 2]], sub[:, [2, 0]]]), axis=1)
    e = np.unique(pairs, axis=0).shape[0]
    return int(v - e + sub.shape[0])


def mesh_statistics(scene: TriScene) -> List[dict]:
    census = edge_census(scene)
    edge_object = scene.object_id[census.faces[:, 0]]
    areas = scene.areas
    stats = []
    for k in range(scene.n_objects):
        mine = edge_object == k
        stats.append(
            {
                "object_id": k,
                "vertices": int(scene.object_vertices(k).size),
                "triangles": int(np.count_nonzero(scene.object_id == k)),
                "interior_edges": int(np.count_nonzero(census.interior & mine)),
                "boundary_edges": int(np.count_nonzero(census.boundary & mine)),
                "euler_characteristic": euler_characteristic(scene, k),
                "area": float(areas[scene.object_id == k].sum()),
            }
        )
    return stats


def minimum_gap(scene: TriScene) -> float:
    """Smallest vertex-to-vertex distance between two different objects."""
    if scene.n_objects < 2:
        raise InvalidArgumentError("minimum gap needs at least two objects")
    trees = [cKDTree(scene.vertices[scene.object_vertices(k)]) for k in range(scene.n_objects)]
    best = math.inf
    for i in range(scene.n_objects):
        for j in range(i + 1, scene.n_objects):
            d, _ = trees[j].query(trees[i].data, k=1)
            best = min(best, float(d.min()))
    return best


def nominal_half_extent(generator: str, params: dict, axis: Sequence[float]) -> float:
    """Half thickness of a generated object along `axis`, from its nominal shape."""
    u = np.asarray(axis, dtype=np.float64)
    u = u / np.linalg.norm(u)
    if generator == "sphere":
        return float(params["radius"])
    if generator == "capsule":
        c = _rotation_to(params.get("axis", (0.0, 0.0, 1.0))) @ np.array([0.0, 0.0, 1.0])
        half_cyl = 0.5 * float(params["total_length"]) - float(params["radius"])
        return float(params["radius"]) + half_cyl * abs(float(c @ u))
    if generator == "plate":
        if abs(abs(u[2]) - 1.0) > 1e-12:
            raise InvalidArgumentError("plates can only be stacked along the z axis")
        return 0.0
    raise InvalidArgumentError(f"unknown generator '{generator}'")


def generate(generator: str, params: dict) -> TriScene:
    if generator == "sphere":
        return generate_sphere(
            params["radius"],
            params["subdivisions"],
            grading=params.get("grading", 1.0),
            focus=params.get("focus", (0.0, 0.0, 1.0)),
        )
    if generator == "capsule":
        return generate_capsule(
            params["total_length"],
            params["radius"],
            params["resolution"],
            axis=params.get("axis", (0.0, 0.0, 1.0)),
        )
    if generator == "plate":
        return generate_plate(params["side"], params["resolution"])
    raise InvalidArgumentError(f"unknown generator '{generator}'")


def pair_scene(
    generator: str,
    params: dict,
    gap: float,
    axis: Sequence[float] = (1.0, 0.0, 0.0),
) -> TriScene:
    """
    Two identical generated objects whose nominal surfaces are `gap` apart.

    Object 0 is centred at the origin; object 1 sits on the +axis side. Graded
    spheres are refined towards each other.
    """
    if not gap > 0:
        raise InvalidArgumentError(f"gap must be positive, got {gap}")
    u = np.asarray(axis, dtype=np.float64)
    u = u / np.linalg.norm(u)
    distance = 2.0 * nominal_half_extent(generator, params, u) + gap
    if generator == "sphere" and params.get("grading", 1.0) != 1.0:
        bodies = [generate(generator, {**params, "focus": s * u}) for s in (1.0, -1.0)]
    else:
        body = generate(generator, params)
        bodies = [body, body]
    scene = combine_scenes(bodies)
    return translate_object(scene, 1, distance * u)


def capsule_pair_scene(
    radius: float = 1.0,
    length_ratio: float = 6.0,
    gap_ratio: float = 4.0,
    resolution: int = 2,
) -> TriScene:
    """Two parallel capsules (axes along z) separated along x by gap_ratio·radius."""
    params = {
        "total_length": length_ratio * radius,
        "radius": radius,
        "resolution": resolution,
        "axis": (0.0, 0.0, 1.0),
    }
    return pair_scene("capsule", params, gap_ratio * radius, axis=(1.0, 0.0, 0.0))
