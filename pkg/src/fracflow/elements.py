"""Reference element kernels: bilinear quads, linear segments, facet loads.

All integration is exact for the polynomial integrands that occur here
(2x2 Gauss on quads, 2-point Gauss on segments).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

__all__ = [
    "QuadratureRule",
    "gauss_segment",
    "gauss_quad_2x2",
    "q1_stiffness",
    "p1_segment_stiffness",
    "p1_segment_mass",
    "facet_load",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights on a reference domain."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if len(self.points) != len(self.weights):
            raise ValueError("quadrature points and weights disagree in length")


_G = 1.0 / np.sqrt(3.0)


def gauss_segment() -> QuadratureRule:
    """2-point Gauss on [-1, 1]; exact for cubics."""
    return QuadratureRule(points=np.array([[-_G], [_G]]), weights=np.array([1.0, 1.0]))


def gauss_quad_2x2() -> QuadratureRule:
    """Tensor 2x2 Gauss on [-1, 1]^2."""
    pts = np.array([[a, b] for b in (-_G, _G) for a in (-_G, _G)])
    return QuadratureRule(points=pts, weights=np.ones(4))


def _q1_dshape(xi: float, eta: float) -> np.ndarray:
    """Derivatives of the four bilinear shape functions, rows = (d/dxi, d/deta)."""
    return 0.25 * np.array([
        [-(1 - eta), -(1 - xi)],
        [(1 - eta), -(1 + xi)],
        [(1 + eta), (1 + xi)],
        [-(1 + eta), (1 - xi)],
    ])


_QUAD_RULE = gauss_quad_2x2()


def q1_stiffness(cell_vertices: np.ndarray, k: float) -> np.ndarray:
    """4x4 stiffness of a bilinear quad for the operator -div(k grad p).

    ``cell_vertices`` is (4, 2) in counter-clockwise order. Raises
    GeometryError when the isoparametric map degenerates (non-positive
    Jacobian at a quadrature point).
    """
    X = np.asarray(cell_vertices, dtype=float)
    if X.shape != (4, 2):
        raise GeometryError(f"expected 4 vertices in 2D, got shape {X.shape}")
    K = np.zeros((4, 4))
    for (xi, eta), w in zip(_QUAD_RULE.points, _QUAD_RULE.weights):
        dN = _q1_dshape(xi, eta)          # (4, 2)
        J = dN.T @ X                       # (2, 2)
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        if det <= 0.0:
            raise GeometryError("degenerate quadrilateral (non-positive Jacobian)")
        grads = dN @ np.linalg.inv(J).T    # (4, 2) physical gradients
        K += (w * det * k) * (grads @ grads.T)
    return K


def q1_stiffness_batch(cell_vertices: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Vectorized q1_stiffness over (n, 4, 2) cells with per-cell k."""
    X = np.asarray(cell_vertices, dtype=float)
    kv = np.asarray(k, dtype=float)
    n = len(X)
    K = np.zeros((n, 4, 4))
    for (xi, eta), w in zip(_QUAD_RULE.points, _QUAD_RULE.weights):
        dN = _q1_dshape(xi, eta)
        J = np.einsum("ai,nad->nid", dN, X)        # (n, 2, 2)
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        if np.any(det <= 0.0):
            bad = int(np.argmax(det <= 0.0))
            raise GeometryError(f"degenerate quadrilateral in batch at index {bad}")
        Jinv = np.empty_like(J)
        Jinv[:, 0, 0] = J[:, 1, 1]
        Jinv[:, 0, 1] = -J[:, 0, 1]
        Jinv[:, 1, 0] = -J[:, 1, 0]
        Jinv[:, 1, 1] = J[:, 0, 0]
        Jinv /= det[:, None, None]
        grads = np.einsum("ad,ndi->nai", dN, np.swapaxes(Jinv, 1, 2))
        K += (w * det * kv)[:, None, None] * np.einsum("nai,nbi->nab", grads, grads)
    return K


def _nodal_pair(coeff) -> tuple[float, float]:
    if np.isscalar(coeff):
        return float(coeff), float(coeff)
    a, b = coeff
    return float(a), float(b)


def p1_segment_stiffness(length: float, coeff) -> np.ndarray:
    """2x2 stiffness of a linear segment, coefficient at the midpoint.

    ``coeff`` is a constant or a nodal pair (c_a, c_b); a nodal pair is
    collapsed to its midpoint value.
    """
    if not (np.isfinite(length) and length > 0.0):
        raise GeometryError(f"segment length must be positive, got {length!r}")
    ca, cb = _nodal_pair(coeff)
    c_mid = 0.5 * (ca + cb)
    s = c_mid / length
    return np.array([[s, -s], [-s, s]])


_SEG_RULE = gauss_segment()


def p1_segment_mass(length: float, coeff) -> np.ndarray:
    """2x2 mass matrix of a linear segment with linearly varying coefficient.

    Exact via 2-point Gauss (the integrand is cubic). For a constant c this
    is c*L/6 * [[2, 1], [1, 2]].
    """
    if not (np.isfinite(length) and length > 0.0):
        raise GeometryError(f"segment length must be positive, got {length!r}")
    ca, cb = _nodal_pair(coeff)
    M = np.zeros((2, 2))
    for (xi,), w in zip(_SEG_RULE.points, _SEG_RULE.weights):
        phi = np.array([0.5 * (1 - xi), 0.5 * (1 + xi)])
        c = ca * phi[0] + cb * phi[1]
        M += (w * 0.5 * length * c) * np.outer(phi, phi)
    return M


def facet_load(facet_vertices: np.ndarray, h: float) -> np.ndarray:
    """Load vector of a constant inward flux h on a straight boundary facet.

    Each endpoint receives h * L / 2.
    """
    X = np.asarray(facet_vertices, dtype=float)
    if X.shape != (2, 2):
        raise GeometryError(f"expected a 2-vertex facet in 2D, got shape {X.shape}")
    L = float(np.linalg.norm(X[1] - X[0]))
    if L <= 0.0:
        raise GeometryError("facet has zero length")
    return np.array([0.5 * h * L, 0.5 * h * L])


def facet_load_nodal(facet_vertices: np.ndarray, h_at_nodes: tuple[float, float]) -> np.ndarray:
    """Load of a linearly varying inward flux, integrated exactly."""
    X = np.asarray(facet_vertices, dtype=float)
    L = float(np.linalg.norm(X[1] - X[0]))
    if L <= 0.0:
        raise GeometryError("facet has zero length")
    ha, hb = float(h_at_nodes[0]), float(h_at_nodes[1])
    return (L / 6.0) * np.array([2.0 * ha + hb, ha + 2.0 * hb])
