"""Symmetric (Dunavant) quadrature rules on the reference triangle."""

import itertools
from functools import lru_cache

import numpy as np

from casimir_bem.core.errors import InvalidArgumentError
from casimir_bem.models.quadrature import TriangleRule


def _orbit(point) -> list:
    return sorted(set(itertools.permutations(point)))


# (barycentric generator, weight); each generator expands to its permutations
_GENERATORS = {
    1: [((1 / 3, 1 / 3, 1 / 3), 1.0)],
    3: [((2 / 3, 1 / 6, 1 / 6), 1 / 3)],
    6: [
        ((0.445948490915965, 0.445948490915965, 0.108103018168070), 0.223381589678011),
        ((0.091576213509771, 0.091576213509771, 0.816847572980459), 0.109951743655322),
    ],
    12: [
        ((0.063089014491502, 0.063089014491502, 0.873821971016996), 0.050844906370207),
        ((0.249286745170910, 0.249286745170910, 0.501426509658179), 0.116786275726379),
        ((0.053145049844817, 0.310352451033784, 0.636502499121399), 0.082851075618374),
    ],
}

SUPPORTED_ORDERS = tuple(sorted(_GENERATORS))


@lru_cache(maxsize=None)
def triangle_rule(size: int) -> TriangleRule:
    """Rule with `size` points; weights are normalised to sum to one."""
    if size not in _GENERATORS:
        raise InvalidArgumentError(
            f"no {size}-point triangle rule, choose one of {SUPPORTED_ORDERS}"
        )
    points, weights = [], []
    for generator, weight in _GENERATORS[size]:
        for p in _orbit(generator):
            points.append(p)
            weights.append(weight)
    bary = np.asarray(points)
    bary /= bary.sum(axis=1, keepdims=True)
    w = np.asarray(weights)
    w /= w.sum()
    for arr in (bary, w):
        arr.setflags(write=False)
    return TriangleRule(barycentric=bary, weights=w)
