import numpy as np
import pytest

from casimir_bem.services.assembly import BemAssembler
from casimir_bem.services.geometry import generate_plate, generate_sphere, pair_scene

SPHERE = {"radius": 1.0, "subdivisions": 0}


@pytest.fixture
def icosahedron():
    return generate_sphere(1.0, 0)


@pytest.fixture
def icosphere():
    """80 triangles, 120 RWG edges."""
    return generate_sphere(1.0, 1)


@pytest.fixture
def square():
    """Two triangles sharing one edge."""
    return generate_plate(1.0, 1)


@pytest.fixture
def sphere_pair():
    """Two icosahedral spheres of radius 1, surfaces 1 apart along x."""
    return pair_scene("sphere", SPHERE, 1.0)


@pytest.fixture
def pair_assembler(sphere_pair):
    return BemAssembler(sphere_pair)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
