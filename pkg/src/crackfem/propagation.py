"""Crack orientation, cracking indicator and the adaptive search strategy.

The crack normal of an element is the major principal direction of its
center-point strain.  An uncracked element is ready to crack once the
normal stress resolved on that plane exceeds the tensile strength
(indicator > 0).  Uncracked elements split into a *propagation region*
(edge-adjacent to some cracked element) searched first, and a *root
region* (everything else) searched only when propagation stalls.  At most
one element cracks per equilibrium solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: principal-strain conventions accepted by crack_normal.  Both evaluate
#: to the same number; "as_printed" keeps the engineering-shear term
#: unscaled under the square root with the half factored out front.
SHEAR_CONVENTIONS = ("tensor", "as_printed")


@dataclass(frozen=True)
class RegionPartition:
    cracked: frozenset[int]
    propagation: frozenset[int]
    root_search: frozenset[int]


def crack_normal(strain: np.ndarray, convention: str = "tensor"):
    """Major principal value and unit direction of a Voigt strain.

    strain = (eps_x, eps_y, gamma_xy) with engineering shear.  The
    direction is sign-fixed to n_y >= 0 (and n_x >= 0 on the axis);
    isotropic states fall back to (1, 0).
    Returns (n, eps_1).
    """
    ex, ey, gxy = float(strain[0]), float(strain[1]), float(strain[2])
    if convention == "tensor":
        exy = 0.5 * gxy
        rad = math.hypot(0.5 * (ex - ey), exy)
        e1 = 0.5 * (ex + ey) + rad
    elif convention == "as_printed":
        exy = 0.5 * gxy
        e1 = 0.5 * (ex + ey + math.sqrt((ex - ey) ** 2 + gxy ** 2))
        rad = e1 - 0.5 * (ex + ey)
    else:
        raise ValueError(f"unknown shear convention {convention!r}")

    scale = max(abs(ex), abs(ey), abs(exy), 1e-300)
    if rad <= 1e-14 * scale:
        return np.array([1.0, 0.0]), e1
    v1 = np.array([exy, e1 - ex])
    v2 = np.array([e1 - ey, exy])
    v = v1 if np.dot(v1, v1) >= np.dot(v2, v2) else v2
    v = v / np.linalg.norm(v)
    if v[1] < 0.0 or (v[1] == 0.0 and v[0] < 0.0):
        v = -v
    return v, e1


def indicator_from_strain(strain: np.ndarray, C: np.ndarray, f_t: float,
                          convention: str = "tensor") -> float:
    """Cracking indicator: normal stress on the principal plane minus f_t."""
    n, _ = crack_normal(strain, convention)
    stress = C @ strain
    proj = np.array([n[0] * n[0], n[1] * n[1], 2.0 * n[0] * n[1]])
    return float(proj @ stress - f_t)


def partition_regions(mesh, cracked_ids) -> RegionPartition:
    cracked = frozenset(cracked_ids)
    propagation = set()
    for eid in cracked:
        for nb in mesh.neighbors(eid, "shares_edge"):
            if nb not in cracked:
                propagation.add(nb)
    all_ids = {el.id for el in mesh.elements}
    root = all_ids - cracked - propagation
    return RegionPartition(cracked=cracked,
                           propagation=frozenset(propagation),
                           root_search=frozenset(root))


def select_candidate(indicator_of, region) -> int | None:
    """Element with the largest positive indicator; ties take the lowest id."""
    best_id = None
    best_phi = 0.0
    for eid in sorted(region):
        phi = indicator_of(eid)
        if phi > 0.0 and (best_id is None or phi > best_phi):
            best_id = eid
            best_phi = phi
    return best_id


def search_step(mesh, cracked_ids, indicator_of) -> int | None:
    """One search pass: propagation region first, then the root region.

    indicator_of(eid) must evaluate the cracking indicator on the current
    converged state.  Returns the element to crack next, or None when the
    load step may advance.
    """
    part = partition_regions(mesh, cracked_ids)
    cand = select_candidate(indicator_of, part.propagation)
    if cand is not None:
        return cand
    return select_candidate(indicator_of, part.root_search)


def enrich_for_level(mesh, eid: int, level: int) -> list[int]:
    """Insert the extra nodes a newly cracked element needs.

    Level 0 upgrades only the cracking element (edge nodes plus center);
    level 1 additionally upgrades edge-sharing neighbors, level 2
    node-sharing neighbors (edge nodes only, no center).  Returns new
    node ids in creation order.
    """
    if level not in (0, 1, 2):
        raise ValueError(f"adaptive level must be 0, 1 or 2, got {level}")
    new_ids = mesh.upgrade_element(eid, add_center=True)
    if level >= 1:
        mode = "shares_edge" if level == 1 else "shares_node"
        for nb in sorted(mesh.neighbors(eid, mode)):
            new_ids += mesh.upgrade_element(nb, add_center=False)
    return new_ids
