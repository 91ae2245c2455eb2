"""
OFF mesh persistence.

Object identity travels as an optional fifth integer on every face line
("3 a b c object_id"); per-object displacements are kept in
"# transform k dx dy dz" comment lines so a saved scene round-trips.
"""

import logging
from pathlib import Path
from typing import Iterable, Iterator, List, Tuple, Union

import numpy as np

from casimir_bem.core.errors import MeshError, OffParseError
from casimir_bem.models.scene import TriScene
from casimir_bem.services.geometry import combine_scenes, validate_scene

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
TRANSFORM_TAG = "transform"


def _lines(text: str) -> Iterator[Tuple[int, List[str]]]:
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].split()
        if content:
            yield number, content


def _transforms(text: str) -> dict:
    found = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped.startswith("#"):
            continue
        fields = stripped[1:].split()
        if len(fields) == 5 and fields[0] == TRANSFORM_TAG:
            try:
                found[int(fields[1])] = [float(x) for x in fields[2:]]
            except ValueError as err:
                raise OffParseError(f"bad transform comment: {stripped}", line=number) from err
    return found


def parse_off(text: str) -> TriScene:
    """Parse OFF text; validation of the resulting scene is left to the caller."""
    lines = _lines(text)
    try:
        number, header = next(lines)
    except StopIteration:
        raise OffParseError("empty file, expected an OFF header", line=1) from None
    if header[0] != "OFF":
        raise OffParseError(f"expected 'OFF', found '{header[0]}'", line=number)

    counts = header[1:]
    if not counts:
        try:
            number, counts = next(lines)
        except StopIteration:
            raise OffParseError("missing vertex/face counts", line=number + 1) from None
    try:
        n_vertices, n_faces = int(counts[0]), int(counts[1])
    except (ValueError, IndexError) as err:
        raise OffParseError(f"bad counts line: {' '.join(counts)}", line=number) from err

    vertices = np.empty((n_vertices, 3))
    for i in range(n_vertices):
        try:
            number, fields = next(lines)
            if len(fields) < 3:
                raise ValueError(fields)
            vertices[i] = [float(x) for x in fields[:3]]
        except StopIteration:
            raise OffParseError(f"file ends after {i} of {n_vertices} vertices", line=number + 1) from None
        except ValueError as err:
            raise OffParseError(f"bad vertex: {' '.join(fields)}", line=number) from err

    triangles = np.empty((n_faces, 3), dtype=np.int64)
    object_id = np.zeros(n_faces, dtype=np.int64)
    for i in range(n_faces):
        try:
            number, fields = next(lines)
        except StopIteration:
            raise OffParseError(f"file ends after {i} of {n_faces} faces", line=number + 1) from None
        try:
            size = int(fields[0])
            if size != 3:
                raise OffParseError(f"only triangles are supported, found a {size}-gon", line=number)
            triangles[i] = [int(x) for x in fields[1:4]]
            if len(fields) > 4:
                object_id[i] = int(fields[4])
        except (ValueError, IndexError) as err:
            raise OffParseError(f"bad face: {' '.join(fields)}", line=number) from err
        if triangles[i].min() < 0 or triangles[i].max() >= n_vertices:
            raise OffParseError(f"face references a missing vertex: {' '.join(fields)}", line=number)

    if np.any(np.diff(object_id) < 0):
        order = np.argsort(object_id, kind="stable")
        triangles, object_id = triangles[order], object_id[order]

    n_objects = int(object_id.max()) + 1 if n_faces else 0
    recorded = _transforms(text)
    transforms = np.zeros((n_objects, 3))
    for k, delta in recorded.items():
        if 0 <= k < n_objects:
            transforms[k] = delta
    return TriScene(vertices=vertices, triangles=triangles, object_id=object_id, transforms=transforms)


def load_off(path: PathLike) -> TriScene:
    """Read and validate one OFF file; raises NonManifoldError naming the bad edge."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise MeshError(f"cannot read {path}: {err}") from err
    scene = parse_off(text)
    validate_scene(scene)
    logger.info(
        "loaded %s: %d vertices, %d triangles, %d object(s)",
        path.name,
        scene.vertices.shape[0],
        scene.n_triangles,
        scene.n_objects,
    )
    return scene


def load_off_objects(paths: Iterable[PathLike]) -> TriScene:
    """One object per file, in the given order."""
    return combine_scenes(load_off(p) for p in paths)


def format_off(scene: TriScene) -> str:
    out = ["OFF", f"# objects {scene.n_objects}"]
    for k, delta in enumerate(scene.transforms):
        out.append(f"# {TRANSFORM_TAG} {k} " + " ".join(format(float(x), ".17g") for x in delta))
    out.append(f"{scene.vertices.shape[0]} {scene.n_triangles} 0")
    for v in scene.vertices:
        out.append(" ".join(format(float(x), ".17g") for x in v))
    for tri, oid in zip(scene.triangles, scene.object_id):
        out.append(f"3 {tri[0]} {tri[1]} {tri[2]} {oid}")
    return "\n".join(out) + "\n"


def save_off(scene: TriScene, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_off(scene), encoding="utf-8")
    return path
