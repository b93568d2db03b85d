"""Elemental stiffness and residual kernels.

Uncracked elements (any number of hanging nodes) use the folded quadratic
basis:

    K = int B^T C B de,      R = F - K u

Cracked elements carry two extra opening unknowns attached to their
center node.  The element state at the center point represents the whole
element ("center representation"): the bulk stress entering the residual
is C (B1 u + Bop w) with B1 the folded B at the center and Bop the
constant opening-strain map.  The stiffness couples displacements and
openings symmetrically, while the residual uses a deliberately
unsymmetric operator S, so the iteration is an inexact Newton scheme:

    K = [[int B^T C B,  intB^T C Bop ],
         [Bop^T C intB, V Bop^T C Bop + A D]]

    R = [F, -A T]^T - S [u, w]^T
    S = [[int B^T C B,   intB^T C Bop],
         [V Bop^T C B1,  V Bop^T C Bop]]

with A the crack chord length, V the element area, T the cohesive
traction and D its tangent.  The displacement rows of S coincide with
the corresponding stiffness blocks (so an uncracked element is exactly
the zero-opening limit); the unsymmetry sits in the crack-balance rows,
which resolve the center-point stress instead of the integrated one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cohesive_law as law
from . import kernels
from . import shape_functions as sf
from .element_geometry import CrackGeometry, opening_strain_matrix


@dataclass
class ElementIntegrals:
    """Geometry-dependent integrals of one element (constant between
    mesh changes)."""

    K_uu: np.ndarray   # (2n, 2n) int B^T C B
    intB: np.ndarray   # (3, 2n)  int B
    B1: np.ndarray     # (3, 2n)  folded B at the center point
    vol: float         # element area


@dataclass
class ElementState:
    """Everything assembly needs to know about one cracked element."""

    geom: CrackGeometry
    opening: np.ndarray          # (2,) current normal/tangential opening
    hist: law.CrackHistory
    u: np.ndarray                # (2n,) nodal displacements, virtual slots 0


@dataclass
class ElementMatrices:
    K: np.ndarray
    R: np.ndarray
    scatter: np.ndarray          # global dof ids, -1 at virtual slots


def integrate_element(mesh, el, C: np.ndarray) -> ElementIntegrals:
    """Single-element wrapper around the batch kernels."""
    coords = mesh.element_coords(el)[None]
    mask = mesh.edge_mask(el)[None]
    k, ib, b1, vol = kernels.batch_element_integrals(el.tp, coords, mask,
                                                     C[None])
    return ElementIntegrals(K_uu=k[0], intB=ib[0], B1=b1[0], vol=float(vol[0]))


def center_B(mesh, el) -> np.ndarray:
    """Folded strain-displacement matrix at the element center point."""
    coords = mesh.element_coords(el)
    xi, eta = sf.parametric_center(el.tp)
    ev = sf.eval_folded(el.tp, xi, eta, coords, el.econn)
    return sf.build_B(ev)


def strain_hat(mesh, el, u_e: np.ndarray) -> np.ndarray:
    """Center-point strain of the interpolated displacement field."""
    return center_B(mesh, el) @ u_e


def assemble_uncracked(integ: ElementIntegrals, u_e: np.ndarray,
                       f_e: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Stiffness and residual of an uncracked element at state u_e."""
    r = -integ.K_uu @ u_e
    if f_e is not None:
        r = r + f_e
    return integ.K_uu, r


def assemble_cracked(integ: ElementIntegrals, state: ElementState,
                     C: np.ndarray, mat: law.Material,
                     f_e: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Stiffness and residual of a cracked element.

    Returns K ((2n+2, 2n+2)) and R ((2n+2,)); the last two slots belong
    to the crack openings.
    """
    nd = integ.K_uu.shape[0]
    b_op = opening_strain_matrix(state.geom)
    area = state.geom.crack_len
    vol = integ.vol

    t_n, t_t, _ = law.traction(state.opening[0], state.opening[1],
                               state.hist, mat)
    d_coh = law.tangent(state.opening[0], state.opening[1], state.hist, mat)

    c_bop = C @ b_op                       # (3, 2)
    k_uo = integ.intB.T @ c_bop            # (2n, 2)
    s_ou = vol * b_op.T @ (C @ integ.B1)   # (2, 2n)
    s_oo = vol * b_op.T @ c_bop
    k_oo = s_oo + area * d_coh

    # the opening rows of K follow the residual operator (center-point
    # stress); with the transposed coupling block instead, Newton cannot
    # contract reliably once several cracks interact
    k = np.zeros((nd + 2, nd + 2))
    k[:nd, :nd] = integ.K_uu
    k[:nd, nd:] = k_uo
    k[nd:, :nd] = s_ou
    k[nd:, nd:] = k_oo

    r = np.zeros(nd + 2)
    if f_e is not None:
        r[:nd] = f_e
    r[:nd] -= integ.K_uu @ state.u + k_uo @ state.opening
    r[nd:] = -area * np.array([t_n, t_t]) \
        - s_ou @ state.u - s_oo @ state.opening
    return k, r


def local_crack_residual(integ: ElementIntegrals, state: ElementState,
                         C: np.ndarray, mat: law.Material) -> np.ndarray:
    """Traction balance at the element center (zero when converged).

    l_c * Bop^T C (B1 u + Bop w) + T; the first term is minus the
    resolved bulk stress on the crack plane.
    """
    b_op = opening_strain_matrix(state.geom)
    stress = C @ (integ.B1 @ state.u + b_op @ state.opening)
    t_n, t_t, _ = law.traction(state.opening[0], state.opening[1],
                               state.hist, mat)
    return state.geom.l_c * (b_op.T @ stress) + np.array([t_n, t_t])
