"""Exponential mixed-mode traction-separation law with loading history.

The equivalent opening is the Euclidean norm of the normal/tangential
openings.  The equivalent traction has three branches: a stiff linear
ramp up to the threshold opening, exponential softening beyond it, and a
secant line through the origin for unloading/reloading.  Traction
components act parallel to the opening vector, which makes the law
isotropic in the opening plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

BRANCH_LINEAR = "L1"
BRANCH_SOFTENING = "L2"
BRANCH_UNLOADING = "U"


@dataclass(frozen=True)
class Material:
    """Linear-elastic bulk plus cohesive fracture parameters.

    E: Young's modulus [Pa], nu: Poisson ratio, f_t: uniaxial tensile
    strength [Pa], G_f: fracture energy per crack area [N/m].
    """

    E: float
    nu: float
    f_t: float
    G_f: float

    def __post_init__(self):
        if self.E <= 0:
            raise ValueError(f"E must be positive, got {self.E}")
        if not 0.0 <= self.nu < 0.5:
            raise ValueError(f"nu must be in [0, 0.5), got {self.nu}")
        if self.f_t <= 0:
            raise ValueError(f"f_t must be positive, got {self.f_t}")
        if self.G_f <= 0:
            raise ValueError(f"G_f must be positive, got {self.G_f}")

    @property
    def G_f0(self) -> float:
        """Energy consumed by the pre-peak linear ramp (1% of G_f)."""
        return 0.01 * self.G_f

    @property
    def delta_0(self) -> float:
        """Threshold opening where the ramp hands over to softening."""
        return 2.0 * self.G_f0 / self.f_t

    def plane_stress(self) -> np.ndarray:
        """Plane-stress elasticity matrix in Voigt form (3, 3)."""
        c = self.E / (1.0 - self.nu ** 2)
        return c * np.array([
            [1.0, self.nu, 0.0],
            [self.nu, 1.0, 0.0],
            [0.0, 0.0, 0.5 * (1.0 - self.nu)],
        ])


@dataclass(frozen=True)
class CrackHistory:
    """Largest equivalent opening ever reached and its traction.

    delta_max == 0 means no history has been recorded yet (the crack has
    never opened past the threshold).
    """

    delta_max: float = 0.0
    t_max: float = 0.0


def equivalent_opening(delta_n: float, delta_t: float) -> float:
    return math.hypot(delta_n, delta_t)


def softening_traction(delta_eq: float, mat: Material) -> float:
    """Equivalent traction on the exponential softening branch."""
    return mat.f_t * math.exp(-mat.f_t * (delta_eq - mat.delta_0)
                              / (mat.G_f - mat.G_f0))


def _branch(delta_eq: float, hist: CrackHistory, mat: Material) -> str:
    if hist.delta_max > 0.0 and delta_eq < hist.delta_max:
        return BRANCH_UNLOADING
    if delta_eq <= mat.delta_0:
        return BRANCH_LINEAR
    return BRANCH_SOFTENING


def traction(delta_n: float, delta_t: float, hist: CrackHistory,
             mat: Material):
    """Traction components and active branch for an opening state.

    Returns (t_n, t_t, branch).  At zero opening the traction is zero and
    the linear branch is reported.
    """
    delta_eq = equivalent_opening(delta_n, delta_t)
    if delta_eq == 0.0:
        return 0.0, 0.0, BRANCH_LINEAR
    branch = _branch(delta_eq, hist, mat)
    # secants written as ratios so both branch hand-overs are bit-exact
    # (delta_eq == delta_0 gives exactly f_t, == delta_max exactly t_max)
    if branch == BRANCH_UNLOADING:
        t_eq = hist.t_max * (delta_eq / hist.delta_max)
    elif branch == BRANCH_LINEAR:
        t_eq = mat.f_t * (delta_eq / mat.delta_0)
    else:
        t_eq = softening_traction(delta_eq, mat)
    return t_eq * delta_n / delta_eq, t_eq * delta_t / delta_eq, branch


def tangent(delta_n: float, delta_t: float, hist: CrackHistory,
            mat: Material) -> np.ndarray:
    """Jacobian of the traction components w.r.t. the openings (2, 2).

    Branch-wise exact.  At zero opening the linear-branch tangent is
    returned so that Newton stays well defined at crack initiation.
    """
    delta_eq = equivalent_opening(delta_n, delta_t)
    if delta_eq == 0.0:
        return (mat.f_t / mat.delta_0) * np.eye(2)
    branch = _branch(delta_eq, hist, mat)
    if branch == BRANCH_UNLOADING:
        return (hist.t_max / hist.delta_max) * np.eye(2)
    if branch == BRANCH_LINEAR:
        return (mat.f_t / mat.delta_0) * np.eye(2)
    t_eq = softening_traction(delta_eq, mat)
    g = mat.G_f - mat.G_f0
    dn2, dt2, dnt = delta_n ** 2, delta_t ** 2, delta_n * delta_t
    inner = np.array([
        [dn2 / delta_eq + mat.f_t * dn2 / g - delta_eq,
         dnt / delta_eq + mat.f_t * dnt / g],
        [dnt / delta_eq + mat.f_t * dnt / g,
         dt2 / delta_eq + mat.f_t * dt2 / g - delta_eq],
    ])
    return -t_eq / delta_eq ** 2 * inner


def update_history(hist: CrackHistory, delta_eq: float,
                   mat: Material) -> CrackHistory:
    """End-of-step history update; records only openings past threshold."""
    new_max = max(hist.delta_max, delta_eq)
    if new_max <= mat.delta_0:
        return hist
    if new_max == hist.delta_max:
        return hist
    return CrackHistory(delta_max=new_max,
                        t_max=softening_traction(new_max, mat))
