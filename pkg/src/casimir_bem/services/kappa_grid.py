import math

from numpy.polynomial.legendre import leggauss

from casimir_bem.core.errors import InvalidArgumentError
from casimir_bem.models.quadrature import KappaQuadrature

DEFAULT_NODES = 20


def build_kappa_grid(kappa0: float, N: int = DEFAULT_NODES) -> KappaQuadrature:
    """
    Gauss-Legendre rule mapped onto (0, ∞) by κ = κ₀(1 + t)/(1 - t).

    Half of the nodes fall below κ₀, so κ₀ sets where the rule is densest.
    """
    if not (math.isfinite(kappa0) and kappa0 > 0):
        raise InvalidArgumentError(f"kappa0 must be positive and finite, got {kappa0}")
    if N < 2:
        raise InvalidArgumentError(f"the kappa grid needs at least 2 nodes, got {N}")

    t, w = leggauss(int(N))
    nodes = kappa0 * (1.0 + t) / (1.0 - t)
    weights = w * 2.0 * kappa0 / (1.0 - t) ** 2
    for arr in (nodes, weights):
        arr.setflags(write=False)
    return KappaQuadrature(nodes=nodes, weights=weights, kappa0=float(kappa0))


def default_kappa0(gap: float) -> float:
    if not gap > 0:
        raise InvalidArgumentError(f"gap must be positive, got {gap}")
    return 1.0 / (2.0 * gap)
