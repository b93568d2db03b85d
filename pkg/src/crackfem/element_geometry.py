"""Per-element crack geometry: areas, crack chords and the opening-strain map.

The characteristic length l_c converts a crack opening (length) into an
equivalent inelastic strain; it is the element area divided by the length
of the crack chord.  For quads the chord passes through the element
center, for triangles through the midpoint of one edge (the edge whose
midpoint chord along the crack direction is longest).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_DEGENERATE_REL = 1e-12


class DegenerateElementError(ValueError):
    pass


@dataclass(frozen=True)
class CrackGeometry:
    """Unit crack normal/tangent and the derived element measures."""

    normal: np.ndarray     # unit 2-vector
    tangent: np.ndarray    # normal rotated +90 degrees
    l_c: float             # characteristic length = area / crack_len
    crack_len: float       # chord length of the crack through the element
    area: float            # element area per unit thickness


def rotate90(v: np.ndarray) -> np.ndarray:
    """Counter-clockwise quarter turn."""
    return np.array([-v[1], v[0]])


def element_area(corners: np.ndarray) -> float:
    """Shoelace area of the (counter-clockwise) corner polygon."""
    x = corners[:, 0]
    y = corners[:, 1]
    a = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    scale = max(np.abs(corners).max(), 1.0) ** 2
    if a <= _DEGENERATE_REL * scale:
        raise DegenerateElementError(
            f"degenerate element polygon (area {a:g})")
    return float(a)


def crack_chord(corners: np.ndarray, tangent: np.ndarray,
                anchor: np.ndarray) -> float:
    """Length of the chord {anchor + s*tangent} clipped by the polygon.

    The anchor must lie inside or on the polygon; the chord is the span
    of intersection parameters along the tangent direction.
    """
    svals = []
    m = len(corners)
    for i in range(m):
        p = corners[i]
        q = corners[(i + 1) % m]
        e = q - p
        denom = tangent[0] * e[1] - tangent[1] * e[0]
        rel = p - anchor
        if abs(denom) < 1e-14 * max(np.linalg.norm(e), 1e-300):
            # tangent parallel to this edge: collinear edges contribute
            # through their endpoints via the adjacent edges
            continue
        u = (rel[0] * tangent[1] - rel[1] * tangent[0]) / denom
        if -1e-12 <= u <= 1.0 + 1e-12:
            s = (rel[0] * e[1] - rel[1] * e[0]) / denom
            svals.append(s)
    if len(svals) < 2:
        raise DegenerateElementError(
            "crack line does not intersect the element polygon")
    length = max(svals) - min(svals)
    if length <= 0.0:
        raise DegenerateElementError("zero-length crack chord")
    return float(length)


def quad_anchor(corners: np.ndarray) -> np.ndarray:
    """Physical image of the quad's parametric center (corner mean)."""
    return corners.mean(axis=0)


def triangle_anchor(corners: np.ndarray, tangent: np.ndarray) -> np.ndarray:
    """Edge midpoint with the longest chord along the crack direction.

    Ties resolve to the lowest edge index.
    """
    best = None
    best_len = -1.0
    for i in range(3):
        mid = 0.5 * (corners[i] + corners[(i + 1) % 3])
        try:
            ln = crack_chord(corners, tangent, mid)
        except DegenerateElementError:
            continue
        if ln > best_len + 1e-14 * max(best_len, 1.0):
            best_len = ln
            best = mid
    if best is None:
        raise DegenerateElementError("no valid crack chord on any edge midpoint")
    return best


def make_crack_geometry(corners: np.ndarray, tp: int,
                        normal: np.ndarray) -> CrackGeometry:
    """Build the full crack geometry for an element from its unit normal."""
    normal = np.asarray(normal, float)
    tangent = rotate90(normal)
    area = element_area(corners)
    if tp == 4:
        anchor = quad_anchor(corners)
    else:
        anchor = triangle_anchor(corners, tangent)
    crack_len = crack_chord(corners, tangent, anchor)
    return CrackGeometry(normal=normal, tangent=tangent,
                         l_c=area / crack_len, crack_len=crack_len, area=area)


def opening_strain_matrix(geom: CrackGeometry) -> np.ndarray:
    """Map (3, 2) from crack openings to the embedded (negative) strain.

    Column 0 carries the normal opening through the Voigt form of
    n (x) n, column 1 the tangential opening through the symmetrized
    n (x) t; both scaled by -1/l_c.
    """
    nx, ny = geom.normal
    tx, ty = geom.tangent
    return (-1.0 / geom.l_c) * np.array([
        [nx * nx, nx * tx],
        [ny * ny, ny * ty],
        [2.0 * nx * ny, nx * ty + ny * tx],
    ])
