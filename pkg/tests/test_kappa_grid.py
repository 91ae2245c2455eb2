import math

import numpy as np
import pytest

from casimir_bem.core.errors import InvalidArgumentError
from casimir_bem.services.kappa_grid import DEFAULT_NODES, build_kappa_grid, default_kappa0


def test_nodes_and_weights_are_positive():
    quad = build_kappa_grid(0.5)

    assert quad.size == DEFAULT_NODES
    assert np.all(quad.nodes > 0)
    assert np.all(np.diff(quad.nodes) > 0)
    assert np.all(quad.weights > 0)


def test_half_of_the_nodes_lie_below_kappa0():
    quad = build_kappa_grid(3.0, 20)

    assert np.count_nonzero(quad.nodes < 3.0) == 10


def test_exponential_integral():
    quad = build_kappa_grid(1.0, 30)

    assert quad.integrate(np.exp(-quad.nodes)) == pytest.approx(1.0, abs=5e-9)


def test_gamma_type_integral():
    quad = build_kappa_grid(0.5, 30)

    assert quad.integrate(quad.nodes * np.exp(-2.0 * quad.nodes)) == pytest.approx(0.25, abs=1e-8)


def test_rational_images_of_polynomials_are_exact():
    kappa0 = 0.7
    quad = build_kappa_grid(kappa0, 3)
    t = (quad.nodes - kappa0) / (quad.nodes + kappa0)
    values = 2.0 * kappa0 * (t**4 + t + 1.0) / (quad.nodes + kappa0) ** 2

    assert quad.integrate(values) == pytest.approx(2.4, rel=1e-13)


def test_weights_integrate_the_lorentzian():
    quad = build_kappa_grid(2.0, 20)
    values = 1.0 / (quad.nodes**2 + 4.0)

    assert quad.integrate(values) == pytest.approx(math.pi / 4.0, rel=1e-10)


@pytest.mark.parametrize("kappa0", [0.0, -1.0, math.inf, math.nan])
def test_bad_scale(kappa0):
    with pytest.raises(InvalidArgumentError):
        build_kappa_grid(kappa0)


def test_too_few_nodes():
    with pytest.raises(InvalidArgumentError):
        build_kappa_grid(1.0, 1)


def test_default_scale_from_gap():
    assert default_kappa0(2.0) == 0.25
    with pytest.raises(InvalidArgumentError):
        default_kappa0(0.0)
