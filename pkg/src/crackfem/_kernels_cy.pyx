# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled element integration kernels.

Same contract as ``_kernels_py.batch_element_integrals``: per element of
one type, the stiffness integral B^T C B, the integral of B, the folded
center-point B and the element area.  Scalar loops over elements and
Gauss points; no allocations inside the loop.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

from .shape_functions import parametric_center, quadrature, shape_parametric


cdef void _fold(double[:, ::1] d, const unsigned char[:] mask, int tp) noexcept nogil:
    """Virtual-node fold of the (2, 2*tp) derivative rows."""
    cdef int i, j, k, r
    for i in range(tp, 2 * tp):
        j = i - tp
        k = 0 if i == 2 * tp - 1 else i - tp + 1
        if mask[j] == 0:
            for r in range(2):
                d[r, j] += 0.5 * d[r, i]
                d[r, k] += 0.5 * d[r, i]
                d[r, i] = 0.0


cdef int _cart_derivs(const double[:, ::1] dxi, const double[:, ::1] coords,
                      int n, double[:, ::1] dxy, double* det) noexcept nogil:
    """Jacobian transform at one point; returns 0 on a bad Jacobian."""
    cdef double j00 = 0.0, j01 = 0.0, j10 = 0.0, j11 = 0.0
    cdef double d_, i00, i01, i10, i11
    cdef int a
    for a in range(n):
        j00 += dxi[0, a] * coords[a, 0]
        j01 += dxi[0, a] * coords[a, 1]
        j10 += dxi[1, a] * coords[a, 0]
        j11 += dxi[1, a] * coords[a, 1]
    d_ = j00 * j11 - j01 * j10
    det[0] = d_
    if not (d_ > 0.0):
        return 0
    i00 = j11 / d_
    i01 = -j01 / d_
    i10 = -j10 / d_
    i11 = j00 / d_
    for a in range(n):
        dxy[0, a] = i00 * dxi[0, a] + i01 * dxi[1, a]
        dxy[1, a] = i10 * dxi[0, a] + i11 * dxi[1, a]
    return 1


def batch_element_integrals(int tp, coords_in, mask_in, c_in):
    """Integrate a batch of elements of one type (see _kernels_py)."""
    cdef double[:, :, ::1] coords = np.ascontiguousarray(coords_in, dtype=np.float64)
    cdef unsigned char[:, ::1] mask = np.ascontiguousarray(mask_in, dtype=np.uint8)
    cdef double[:, :, ::1] cmat = np.ascontiguousarray(c_in, dtype=np.float64)

    rule = quadrature(tp)
    dxi_list = [shape_parametric(tp, float(pt[0]), float(pt[1]))[1]
                for pt in rule.points]
    cdef double[:, :, ::1] dxi = np.ascontiguousarray(np.stack(dxi_list))
    center_pt = parametric_center(tp)
    cdef double[:, ::1] cxi = np.ascontiguousarray(
        shape_parametric(tp, float(center_pt[0]), float(center_pt[1]))[1])
    cdef double[::1] w = np.ascontiguousarray(rule.weights)

    cdef int m = coords.shape[0]
    cdef int n = 2 * tp
    cdef int ng = w.shape[0]
    cdef int nd = 2 * n

    k_out = np.zeros((m, nd, nd))
    intb_out = np.zeros((m, 3, nd))
    b1_out = np.zeros((m, 3, nd))
    vol_out = np.zeros(m)
    cdef double[:, :, ::1] K = k_out
    cdef double[:, :, ::1] intB = intb_out
    cdef double[:, :, ::1] B1 = b1_out
    cdef double[::1] vol = vol_out

    dxy_buf = np.zeros((2, n))
    b_buf = np.zeros((3, nd))
    cb_buf = np.zeros((3, nd))
    cdef double[:, ::1] dxy = dxy_buf
    cdef double[:, ::1] b = b_buf
    cdef double[:, ::1] cb = cb_buf

    cdef int e, g, i, jc, r, cidx
    cdef double det, wd
    cdef int bad = -1

    with nogil:
        for e in range(m):
            for g in range(ng):
                if not _cart_derivs(dxi[g], coords[e], n, dxy, &det):
                    bad = e
                    break
                _fold(dxy, mask[e], tp)
                for i in range(n):
                    b[0, 2 * i] = dxy[0, i]
                    b[0, 2 * i + 1] = 0.0
                    b[1, 2 * i] = 0.0
                    b[1, 2 * i + 1] = dxy[1, i]
                    b[2, 2 * i] = dxy[1, i]
                    b[2, 2 * i + 1] = dxy[0, i]
                wd = w[g] * det
                vol[e] += wd
                for r in range(3):
                    for jc in range(nd):
                        cb[r, jc] = (cmat[e, r, 0] * b[0, jc]
                                     + cmat[e, r, 1] * b[1, jc]
                                     + cmat[e, r, 2] * b[2, jc])
                        intB[e, r, jc] += wd * b[r, jc]
                for i in range(nd):
                    if b[0, i] == 0.0 and b[1, i] == 0.0 and b[2, i] == 0.0:
                        continue
                    for jc in range(nd):
                        K[e, i, jc] += wd * (b[0, i] * cb[0, jc]
                                             + b[1, i] * cb[1, jc]
                                             + b[2, i] * cb[2, jc])
            if bad >= 0:
                break
            if not _cart_derivs(cxi, coords[e], n, dxy, &det):
                bad = e
                break
            _fold(dxy, mask[e], tp)
            for i in range(n):
                B1[e, 0, 2 * i] = dxy[0, i]
                B1[e, 1, 2 * i + 1] = dxy[1, i]
                B1[e, 2, 2 * i] = dxy[1, i]
                B1[e, 2, 2 * i + 1] = dxy[0, i]
    if bad >= 0:
        raise ValueError(f"non-positive Jacobian in batch element {bad}")
    return k_out, intb_out, b1_out, vol_out
