from dataclasses import dataclass, field
from typing import Tuple

import numpy as np


@dataclass(frozen=True, eq=False)
class TriScene:
    """
    Multi-object triangle mesh.

    Triangles are stored grouped by object (object_id non-decreasing) so that
    every per-object quantity derived from it occupies a contiguous range.
    `transforms[k]` is the accumulated rigid displacement applied to object k;
    `vertices` are already displaced.
    """

    vertices: np.ndarray  # (n, 3) float64
    triangles: np.ndarray  # (m, 3) int64, outward/consistent winding
    object_id: np.ndarray  # (m,) int64, values 0..K-1
    transforms: np.ndarray = field(default=None)  # (K, 3) float64

    def __post_init__(self):
        vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        object_id = np.ascontiguousarray(self.object_id, dtype=np.int64)
        n_objects = int(object_id.max()) + 1 if object_id.size else 0
        transforms = (
            np.zeros((n_objects, 3))
            if self.transforms is None
            else np.ascontiguousarray(self.transforms, dtype=np.float64)
        )
        for arr in (vertices, triangles, object_id, transforms):
            arr.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)
        object.__setattr__(self, "object_id", object_id)
        object.__setattr__(self, "transforms", transforms)

    @property
    def n_objects(self) -> int:
        return int(self.transforms.shape[0])

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def corners(self) -> np.ndarray:
        """(m, 3, 3) triangle vertex coordinates."""
        return self.vertices[self.triangles]

    @property
    def normals(self) -> np.ndarray:
        c = self.corners
        return np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])

    @property
    def areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.normals, axis=1)

    @property
    def centroids(self) -> np.ndarray:
        return self.corners.mean(axis=1)

    def object_triangles(self, object_id: int) -> np.ndarray:
        return np.flatnonzero(self.object_id == object_id)

    def object_vertices(self, object_id: int) -> np.ndarray:
        return np.unique(self.triangles[self.object_id == object_id])

    def object_range(self, object_id: int) -> Tuple[int, int]:
        idx = self.object_triangles(object_id)
        return int(idx[0]), int(idx[-1]) + 1

    def object_centroid(self, object_id: int) -> np.ndarray:
        """Area-weighted centroid of the object's surface."""
        idx = self.object_triangles(object_id)
        w = self.areas[idx]
        return (self.centroids[idx] * w[:, None]).sum(axis=0) / w.sum()
