"""Isoparametric shape functions, quadrature rules and B matrices.

Only quadratic interpolation is evaluated: 8-node serendipity quads and
6-node triangles.  Elements with fewer edge nodes are handled by placing
*virtual* nodes at the midpoints of the node-less edges, evaluating the
full quadratic basis, and folding each virtual-node contribution onto the
two adjacent corners (``apply_virtual_node_fold``).  After folding, the
rows/columns belonging to virtual nodes are exactly zero, so a partially
enriched element degenerates smoothly down to the plain bilinear/linear
element when no edge nodes are present.

Local ordering convention: corners 0..tp-1 counter-clockwise, then edge
slots tp..2*tp-1 where slot tp+i sits on the edge between corners i and
(i+1) % tp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: element type codes (= number of corners / edges)
TRI = 3
QUAD = 4


class SingularJacobianError(ValueError):
    """Raised when the isoparametric mapping degenerates."""


@dataclass
class ShapeEval:
    """Shape function values and Cartesian derivatives at one point.

    N has length n (8 for quads, 6 for triangles); dN_dxy is (2, n) with
    row 0 = d/dx and row 1 = d/dy; detJ converts parametric to physical
    area.
    """

    N: np.ndarray
    dN_dxy: np.ndarray
    detJ: float


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray   # (g, 2) parametric coordinates
    weights: np.ndarray  # (g,)


def shape_q8(xi: float, eta: float):
    """Serendipity Q8 values and parametric derivatives (N, dN (2,8))."""
    n = np.empty(8)
    d = np.empty((2, 8))
    # corners at (+-1, +-1)
    xs = (-1.0, 1.0, 1.0, -1.0)
    es = (-1.0, -1.0, 1.0, 1.0)
    for i in range(4):
        xi_i, eta_i = xs[i], es[i]
        n[i] = 0.25 * (1 + xi * xi_i) * (1 + eta * eta_i) * (xi * xi_i + eta * eta_i - 1)
        d[0, i] = 0.25 * xi_i * (1 + eta * eta_i) * (2 * xi * xi_i + eta * eta_i)
        d[1, i] = 0.25 * eta_i * (1 + xi * xi_i) * (xi * xi_i + 2 * eta * eta_i)
    # midside nodes: 4 on eta=-1, 5 on xi=+1, 6 on eta=+1, 7 on xi=-1
    n[4] = 0.5 * (1 - xi * xi) * (1 - eta)
    d[0, 4] = -xi * (1 - eta)
    d[1, 4] = -0.5 * (1 - xi * xi)
    n[5] = 0.5 * (1 + xi) * (1 - eta * eta)
    d[0, 5] = 0.5 * (1 - eta * eta)
    d[1, 5] = -eta * (1 + xi)
    n[6] = 0.5 * (1 - xi * xi) * (1 + eta)
    d[0, 6] = -xi * (1 + eta)
    d[1, 6] = 0.5 * (1 - xi * xi)
    n[7] = 0.5 * (1 - xi) * (1 - eta * eta)
    d[0, 7] = -0.5 * (1 - eta * eta)
    d[1, 7] = -eta * (1 - xi)
    return n, d


def shape_t6(xi: float, eta: float):
    """Quadratic triangle values and parametric derivatives (N, dN (2,6)).

    Area coordinates L1 = 1-xi-eta, L2 = xi, L3 = eta; corners at (0,0),
    (1,0), (0,1); edge nodes between corners (0,1), (1,2), (2,0).
    """
    l1 = 1.0 - xi - eta
    l2 = xi
    l3 = eta
    n = np.array([
        l1 * (2 * l1 - 1),
        l2 * (2 * l2 - 1),
        l3 * (2 * l3 - 1),
        4 * l1 * l2,
        4 * l2 * l3,
        4 * l3 * l1,
    ])
    d = np.array([
        [1 - 4 * l1, 4 * l2 - 1, 0.0, 4 * (l1 - l2), 4 * l3, -4 * l3],
        [1 - 4 * l1, 0.0, 4 * l3 - 1, -4 * l2, 4 * l2, 4 * (l1 - l3)],
    ])
    return n, d


def shape_parametric(tp: int, xi: float, eta: float):
    if tp == QUAD:
        return shape_q8(xi, eta)
    if tp == TRI:
        return shape_t6(xi, eta)
    raise ValueError(f"unsupported element type {tp}")


def parametric_center(tp: int):
    """Parametric coordinates of the element center point."""
    if tp == QUAD:
        return 0.0, 0.0
    return 1.0 / 3.0, 1.0 / 3.0


# 3x3 Gauss-Legendre for quads, 3-point degree-2 rule for triangles
_G = np.sqrt(0.6)
_W1 = np.array([5.0, 8.0, 5.0]) / 9.0
_QUAD_RULE = QuadratureRule(
    points=np.array([(x, e) for e in (-_G, 0.0, _G) for x in (-_G, 0.0, _G)]),
    weights=np.array([wx * we for we in _W1 for wx in _W1]),
)
_TRI_RULE = QuadratureRule(
    points=np.array([(1 / 6, 1 / 6), (2 / 3, 1 / 6), (1 / 6, 2 / 3)]),
    weights=np.array([1 / 6, 1 / 6, 1 / 6]),
)


def quadrature(tp: int) -> QuadratureRule:
    if tp == QUAD:
        return _QUAD_RULE
    if tp == TRI:
        return _TRI_RULE
    raise ValueError(f"unsupported element type {tp}")


def eval_full(tp: int, xi: float, eta: float, coords: np.ndarray) -> ShapeEval:
    """Full quadratic shape evaluation at one parametric point.

    coords is (2*tp, 2): corner coordinates followed by the edge-node
    coordinates, with virtual nodes already placed at edge midpoints.
    Returns values, Cartesian derivatives and the Jacobian determinant.
    """
    n, dxi = shape_parametric(tp, xi, eta)
    jac = dxi @ coords          # [[x_xi, y_xi], [x_eta, y_eta]]
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    if det <= 0.0 or not np.isfinite(det):
        raise SingularJacobianError(
            f"non-positive Jacobian determinant {det:g} at ({xi:g}, {eta:g})")
    inv = np.array([[jac[1, 1], -jac[0, 1]], [-jac[1, 0], jac[0, 0]]]) / det
    return ShapeEval(N=n, dN_dxy=inv @ dxi, detJ=det)


def apply_virtual_node_fold(ev: ShapeEval, tp: int, econn) -> ShapeEval:
    """Fold virtual edge-node contributions onto their corner nodes.

    econn has tp entries; a falsy entry means the edge slot holds a
    virtual node.  Each virtual value is split half/half onto the two
    corners of its edge and then zeroed, for N and both derivative rows.
    Entries for real edge nodes are untouched.
    """
    n = ev.N.copy()
    d = ev.dN_dxy.copy()
    for i in range(tp, 2 * tp):
        j = i - tp
        k = 0 if i == 2 * tp - 1 else i - tp + 1
        if not econn[j]:
            n[j] += 0.5 * n[i]
            n[k] += 0.5 * n[i]
            n[i] = 0.0
            d[:, j] += 0.5 * d[:, i]
            d[:, k] += 0.5 * d[:, i]
            d[:, i] = 0.0
    return ShapeEval(N=n, dN_dxy=d, detJ=ev.detJ)


def build_B(ev: ShapeEval) -> np.ndarray:
    """Strain-displacement matrix (3, 2n) in Voigt order (eps_x, eps_y, gamma_xy)."""
    nn = ev.N.shape[0]
    b = np.zeros((3, 2 * nn))
    b[0, 0::2] = ev.dN_dxy[0]
    b[1, 1::2] = ev.dN_dxy[1]
    b[2, 0::2] = ev.dN_dxy[1]
    b[2, 1::2] = ev.dN_dxy[0]
    return b


def eval_folded(tp: int, xi: float, eta: float, coords: np.ndarray, econn) -> ShapeEval:
    """Convenience: eval_full followed by the virtual-node fold."""
    return apply_virtual_node_fold(eval_full(tp, xi, eta, coords), tp, econn)
