"""
Imaginary-frequency scalar kernel and closed-form static potential integrals.

The kernel is g(R) = exp(-κR) / (4πR). Coincident and nearby triangle pairs
are split into the static part 1/(4πR), integrated analytically over the
source triangle, and the smooth remainder expm1(-κR) / (4πR).
"""

import math
from typing import Tuple

import numpy as np

from casimir_bem.core.errors import DegenerateTriangleError, InvalidArgumentError
from casimir_bem.models.quadrature import TriangleRule

FOUR_PI = 4.0 * math.pi


def kernel_g(R, kappa: float):
    """exp(-κR) / (4πR) for R > 0."""
    R = np.asarray(R)
    if kappa < 0:
        raise InvalidArgumentError(f"kappa must be >= 0, got {kappa}")
    if np.any(R <= 0):
        raise InvalidArgumentError("kernel_g needs R > 0; coincident points need singular integration")
    out = np.exp(-kappa * R) / (FOUR_PI * R)
    return out if out.ndim else float(out)


def smooth_kernel(R: np.ndarray, kappa: float) -> np.ndarray:
    """expm1(-κR) / (4πR), continued to -κ/(4π) at R = 0."""
    R = np.asarray(R)
    safe = np.where(R > 0, R, 1.0)
    out = np.expm1(-kappa * safe) / (FOUR_PI * safe)
    return np.where(R > 0, out, R.dtype.type(-kappa / FOUR_PI))


def point_kernel(R: np.ndarray, kappa: float, near: np.ndarray) -> np.ndarray:
    """Full kernel where `near` is False, smooth remainder where it is True."""
    R = np.asarray(R)
    safe = np.where(R > 0, R, 1.0)
    full = np.exp(-kappa * safe) / (FOUR_PI * safe)
    smooth = np.expm1(-kappa * safe) / (FOUR_PI * safe)
    smooth = np.where(R > 0, smooth, R.dtype.type(-kappa / FOUR_PI))
    return np.where(near, smooth, full)


def kernel_derivative(R: np.ndarray, kappa: float) -> np.ndarray:
    """dg/dR = -(1 + κR) exp(-κR) / (4πR²)."""
    R = np.asarray(R)
    return -(1.0 + kappa * R) * np.exp(-kappa * R) / (FOUR_PI * R * R)


def _edge_log(R_minus, R_plus, l_minus, l_plus, R0_sq, tiny_sq):
    """ln((R+ + l+)/(R- + l-)) in its cancellation-free form; 0 where R0 vanishes."""
    forward = l_plus + l_minus >= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        num = np.where(forward, R_plus + l_plus, R_minus - l_minus)
        den = np.where(forward, R_minus + l_minus, R_plus - l_plus)
        f = np.log(num / den)
    return np.where(R0_sq > tiny_sq, f, 0.0)


def triangle_potentials(points: np.ndarray, corners: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Closed-form ∫_T dS'/|r - r'| and ∫_T r' dS'/|r - r'| (no 1/(4π) factor).

    `points` is (M, 3) and `corners` (M, 3, 3); observation point i is paired
    with triangle i. Valid for any observation point, on or off the plane.
    """
    points = np.asarray(points, dtype=np.float64)
    corners = np.asarray(corners, dtype=np.float64)
    a0 = corners[:, 0]
    cross = np.cross(corners[:, 1] - a0, corners[:, 2] - a0)
    twice_area = np.linalg.norm(cross, axis=1)
    if np.any(twice_area <= 0):
        raise DegenerateTriangleError("static potential requested on a zero-area triangle")
    n_hat = cross / twice_area[:, None]

    d = np.einsum("ij,ij->i", points - a0, n_hat)
    abs_d = np.abs(d)
    rho = points - d[:, None] * n_hat
    scale_sq = (twice_area * 1e-28)[:, None]

    scalar = np.zeros(points.shape[0])
    vector = np.zeros_like(points)
    for i in range(3):
        p_minus = corners[:, i]
        p_plus = corners[:, (i + 1) % 3]
        edge = p_plus - p_minus
        s_hat = edge / np.linalg.norm(edge, axis=1)[:, None]
        u_hat = np.cross(s_hat, n_hat)

        l_plus = np.einsum("ij,ij->i", p_plus - rho, s_hat)
        l_minus = np.einsum("ij,ij->i", p_minus - rho, s_hat)
        p0 = np.einsum("ij,ij->i", p_minus - rho, u_hat)
        R0_sq = p0 * p0 + d * d
        R_plus = np.linalg.norm(points - p_plus, axis=1)
        R_minus = np.linalg.norm(points - p_minus, axis=1)

        f = _edge_log(R_minus, R_plus, l_minus, l_plus, R0_sq, scale_sq[:, 0])
        beta = np.arctan2(p0 * l_plus, R0_sq + abs_d * R_plus) - np.arctan2(
            p0 * l_minus, R0_sq + abs_d * R_minus
        )
        scalar += p0 * f - abs_d * beta
        vector += 0.5 * u_hat * (R0_sq * f + l_plus * R_plus - l_minus * R_minus)[:, None]

    first = vector + rho * scalar[:, None]
    return scalar, first


def static_singular_integral(triangle: np.ndarray, observation_point) -> float:
    """Exact ∫_T dS' / (4π|r - r'|) for one triangle (3, 3) and one point."""
    corners = np.asarray(triangle, dtype=np.float64).reshape(1, 3, 3)
    point = np.asarray(observation_point, dtype=np.float64).reshape(1, 3)
    scalar, _ = triangle_potentials(point, corners)
    return float(scalar[0]) / FOUR_PI


def static_moments(
    outer_corners: np.ndarray,
    inner_corners: np.ndarray,
    rule: TriangleRule,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Double integrals of 1/(4πR) over N triangle pairs (t, s).

    Returns G0 = ∫∫ G, Gr = ∫∫ r G, Grp = ∫∫ r' G and Grr = ∫∫ (r·r') G with
    r on t (outer `rule`) and r' on s (analytic).
    """
    n = outer_corners.shape[0]
    q = rule.size
    x = rule.points(outer_corners)  # (n, q, 3)
    outer_area = 0.5 * np.linalg.norm(
        np.cross(
            outer_corners[:, 1] - outer_corners[:, 0],
            outer_corners[:, 2] - outer_corners[:, 0],
        ),
        axis=1,
    )
    scalar, first = triangle_potentials(
        x.reshape(-1, 3), np.repeat(inner_corners, q, axis=0)
    )
    scalar = scalar.reshape(n, q) / FOUR_PI
    first = first.reshape(n, q, 3) / FOUR_PI
    w = rule.weights[None, :] * outer_area[:, None]

    G0 = np.einsum("nq,nq->n", w, scalar)
    Gr = np.einsum("nq,nq,nqc->nc", w, scalar, x)
    Grp = np.einsum("nq,nqc->nc", w, first)
    Grr = np.einsum("nq,nqc,nqc->n", w, x, first)
    return G0, Gr, Grp, Grr
