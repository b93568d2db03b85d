"""Pure-numpy element integration kernels (fallback backend).

Computes, for a batch of same-type elements, the quantities every
assembly pass needs:

    K    = integral of B^T C B over the element        (2n, 2n)
    intB = integral of B over the element              (3, 2n)
    B1   = folded B at the element center point        (3, 2n)
    vol  = element area (per unit thickness)

B is the folded strain-displacement matrix, so rows/columns belonging to
virtual (absent) edge nodes come out exactly zero.  The Cython backend in
``_kernels_cy`` implements the same contract; ``test_kernels`` checks the
two against each other.
"""

from __future__ import annotations

import numpy as np

from .shape_functions import (parametric_center, quadrature,
                              shape_parametric)

_CACHE = {}


def _parametric_tables(tp: int):
    """Gauss-point and center parametric derivatives for one element type."""
    if tp not in _CACHE:
        rule = quadrature(tp)
        dxi = np.stack([shape_parametric(tp, x, e)[1] for x, e in rule.points])
        cxi = shape_parametric(tp, *parametric_center(tp))[1]
        _CACHE[tp] = (rule.weights.copy(), dxi, cxi)
    return _CACHE[tp]


def _fold_operator(tp: int, edge_mask: np.ndarray) -> np.ndarray:
    """Per-element (n, n) matrices folding virtual columns onto corners."""
    m = edge_mask.shape[0]
    n = 2 * tp
    p = np.broadcast_to(np.eye(n), (m, n, n)).copy()
    for j in range(tp):
        absent = edge_mask[:, j] == 0
        k = (j + 1) % tp
        p[absent, tp + j, tp + j] = 0.0
        p[absent, tp + j, j] = 0.5
        p[absent, tp + j, k] = 0.5
    return p


def _cartesian_derivs(dxi: np.ndarray, coords: np.ndarray):
    """Map parametric to Cartesian derivatives for every element/point.

    dxi: (g, 2, n), coords: (m, n, 2) -> dxy (m, g, 2, n), detJ (m, g).
    """
    jac = np.einsum('gan,mnb->mgab', dxi, coords)
    det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    if np.any(det <= 0.0) or not np.all(np.isfinite(det)):
        bad = int(np.argwhere((det <= 0.0) | ~np.isfinite(det))[0][0])
        raise ValueError(f"non-positive Jacobian in batch element {bad}")
    inv = np.empty_like(jac)
    inv[..., 0, 0] = jac[..., 1, 1]
    inv[..., 0, 1] = -jac[..., 0, 1]
    inv[..., 1, 0] = -jac[..., 1, 0]
    inv[..., 1, 1] = jac[..., 0, 0]
    inv /= det[..., None, None]
    return np.einsum('mgab,gbn->mgan', inv, dxi), det


def _build_B(dxy: np.ndarray) -> np.ndarray:
    """(..., 2, n) folded derivatives -> (..., 3, 2n) B matrices."""
    shp = dxy.shape[:-2]
    n = dxy.shape[-1]
    b = np.zeros(shp + (3, 2 * n))
    b[..., 0, 0::2] = dxy[..., 0, :]
    b[..., 1, 1::2] = dxy[..., 1, :]
    b[..., 2, 0::2] = dxy[..., 1, :]
    b[..., 2, 1::2] = dxy[..., 0, :]
    return b


def batch_element_integrals(tp: int, coords: np.ndarray,
                            edge_mask: np.ndarray, C: np.ndarray):
    """Integrate a batch of elements of one type.

    coords (m, 2*tp, 2) with virtual edge nodes at midpoints, edge_mask
    (m, tp) nonzero where a real edge node exists, C (m, 3, 3) elasticity
    matrices.  Returns (K, intB, B1, vol).
    """
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    edge_mask = np.asarray(edge_mask)
    C = np.asarray(C, dtype=np.float64)
    w, dxi, cxi = _parametric_tables(tp)
    fold = _fold_operator(tp, edge_mask)

    dxy, det = _cartesian_derivs(dxi, coords)
    dxy = np.einsum('mgan,mnk->mgak', dxy, fold)
    b = _build_B(dxy)
    wdet = w[None, :] * det

    cb = np.einsum('mij,mgjl->mgil', C, b)
    k = np.einsum('mg,mgik,mgil->mkl', wdet, b, cb)
    int_b = np.einsum('mg,mgik->mik', wdet, b)
    vol = wdet.sum(axis=1)

    cdxy, _ = _cartesian_derivs(cxi[None], coords)
    cdxy = np.einsum('mgan,mnk->mgak', cdxy, fold)
    b1 = _build_B(cdxy)[:, 0]
    return k, int_b, b1, vol
