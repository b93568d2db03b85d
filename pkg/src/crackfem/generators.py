"""Benchmark geometry generators: L-shaped panel, Brazilian disk, beam.

The geometries and material parameters are figure-sourced defaults for the
standard concrete/rock benchmarks; every value lands in the generated
config file and can be edited there.  All generated meshes are linear
(corner nodes only); enrichment happens during the run.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .mesh import BoundaryCondition, BoundaryCurve, Mesh, save_mesh

BENCHMARKS = ("lpanel", "disk", "beam3pt")


class _NodeBank:
    """Deduplicates nodes by rounded coordinates; ids are 1-based."""

    def __init__(self, mesh: Mesh, decimals: int = 9):
        self.mesh = mesh
        self.decimals = decimals
        self._ids: dict[tuple[float, float], int] = {}

    def get(self, x: float, y: float) -> int:
        key = (round(x, self.decimals), round(y, self.decimals))
        nid = self._ids.get(key)
        if nid is None:
            nid = self.mesh.add_node(x, y, "corner")
            self._ids[key] = nid
        return nid


def _config_text(mesh_name: str, materials, schedule: str,
                 level: int = 0, embedded: str = "",
                 stop_drop_ratio: float | None = None,
                 cadence: int = 10) -> str:
    lines = [
        "[model]",
        f"mesh = {mesh_name}",
        f"adaptive_level = {level}",
        "freeze_normal = on",
        "eig_shear_convention = tensor",
        "",
    ]
    for mid, (e, nu, ft, gf) in sorted(materials.items()):
        section = "material" if mid == 0 else f"material.{mid}"
        lines += [f"[{section}]", f"E = {e:g}", f"nu = {nu:g}",
                  f"f_t = {ft:g}", f"G_f = {gf:g}", ""]
    lines += ["[loading]", f"schedule = {schedule}"]
    if stop_drop_ratio is not None:
        lines.append(f"stop_drop_ratio = {stop_drop_ratio:g}")
    lines += ["", "[solver]", "tol_rel = 1e-6", "tol_abs_factor = 1e-10",
              "max_iter = 50", "max_bisect = 8", ""]
    if embedded:
        lines += ["[propagation]", f"embedded_cracks = {embedded}", ""]
    lines += ["[output]", "dir = out", f"cadence = {cadence}", ""]
    return "\n".join(lines)


# ---------------------------------------------------------------------
# L-shaped panel: 0.5 x 0.5 m with the lower-right quadrant removed,
# clamped at the bottom, pulled upward at the tip of the right arm.
# The bottom strip of the supporting column stays elastic (material 1):
# it models the glued fixture zone, where the concentrated support load
# path would otherwise trigger dormant near-threshold conversions.

_LPANEL_PAD = 0.085             # height of the elastic support strip


def gen_lpanel(refine: int = 1) -> tuple[Mesh, str]:
    half = 0.25
    q = 4 + 2 * refine          # cells per 0.25 m
    s = half / q
    mesh = Mesh()
    bank = _NodeBank(mesh)
    for j in range(2 * q):
        for i in range(2 * q):
            cx, cy = (i + 0.5) * s, (j + 0.5) * s
            if cx > half and cy < half:
                continue        # removed quadrant
            n1 = bank.get(i * s, j * s)
            n2 = bank.get((i + 1) * s, j * s)
            n3 = bank.get((i + 1) * s, (j + 1) * s)
            n4 = bank.get(i * s, (j + 1) * s)
            mesh.add_element(4, [n1, n2, n3, n4],
                             material_id=1 if cy < _LPANEL_PAD else 0)
    for nd in mesh.nodes:
        if abs(nd.y) < 1e-12:
            mesh.bcs.append(BoundaryCondition(nd.id, 0, 0.0, "disp"))
            mesh.bcs.append(BoundaryCondition(nd.id, 1, 0.0, "disp"))
        if abs(nd.x - 2 * half) < 1e-12 and abs(nd.y - half) < 1e-12:
            mesh.bcs.append(BoundaryCondition(nd.id, 1, 1.0, "disp"))
    mesh.finalize()
    cfg = _config_text("MESHFILE",
                       {0: (25.85e9, 0.18, 2.7e6, 75.0),
                        1: (25.85e9, 0.18, 1e12, 75.0)},  # elastic fixture
                       "1e-5 x 60")
    return mesh, cfg


# ---------------------------------------------------------------------
# Brazilian disk with an embedded 45-degree center slit, compressed
# across the vertical diameter.  O-grid: central square plus four
# transfinite ring blocks; rim nodes lie exactly on the circle.

def _disk_blocks(r: float, n: int, m: int):
    c = 0.5 * r
    # central square cells
    for j in range(n):
        for i in range(n):
            x0, y0 = -c + 2 * c * i / n, -c + 2 * c * j / n
            x1, y1 = -c + 2 * c * (i + 1) / n, -c + 2 * c * (j + 1) / n
            yield (x0, y0), (x1, y0), (x1, y1), (x0, y1)
    # ring sectors: square edge -> arc
    sectors = [
        ((c, -c), (c, c), -45.0),    # right
        ((c, c), (-c, c), 45.0),     # top
        ((-c, c), (-c, -c), 135.0),  # left
        ((-c, -c), (c, -c), 225.0),  # bottom
    ]

    def pt(sector, t, rho):
        (ax, ay), (bx, by), th0 = sector
        ex, ey = ax + (bx - ax) * t, ay + (by - ay) * t
        th = math.radians(th0 + 90.0 * t)
        cxr, cyr = r * math.cos(th), r * math.sin(th)
        return ((1 - rho) * ex + rho * cxr, (1 - rho) * ey + rho * cyr)

    for sector in sectors:
        for k in range(m):
            for i in range(n):
                t0, t1 = i / n, (i + 1) / n
                r0, r1 = k / m, (k + 1) / m
                yield (pt(sector, t0, r0), pt(sector, t1, r0),
                       pt(sector, t1, r1), pt(sector, t0, r1))


def gen_disk(refine: int = 1) -> tuple[Mesh, str]:
    r = 0.05
    n = 4 + 2 * refine
    m = 2 + refine
    mesh = Mesh()
    bank = _NodeBank(mesh)
    for quad in _disk_blocks(r, n, m):
        ids = [bank.get(x, y) for x, y in quad]
        xs = np.array([q[0] for q in quad])
        ys = np.array([q[1] for q in quad])
        area = 0.5 * np.sum(xs * np.roll(ys, -1) - np.roll(xs, -1) * ys)
        if area < 0:
            ids = ids[::-1]
        mesh.add_element(4, ids)
    mesh.finalize()

    rim = {nd.id for nd in mesh.nodes
           if abs(math.hypot(nd.x, nd.y) - r) < 1e-9 * r}
    mesh.curves.append(BoundaryCurve(cx=0.0, cy=0.0, r=r, nodes=rim))
    platen = 0.21 * r
    for nid in sorted(rim):
        nd = mesh.node(nid)
        if abs(nd.x) <= platen and nd.y > 0:
            mesh.bcs.append(BoundaryCondition(nid, 1, -1.0, "disp"))
        if abs(nd.x) <= platen and nd.y < 0:
            mesh.bcs.append(BoundaryCondition(nid, 1, 0.0, "disp"))
        if abs(nd.x) < 1e-9 * r:
            mesh.bcs.append(BoundaryCondition(nid, 0, 0.0, "disp"))

    # embedded slit: 45-degree center crack of half-length 0.3 r
    a = 0.3 * r
    tdir = np.array([math.cos(math.radians(45.0)),
                     math.sin(math.radians(45.0))])
    ndir = np.array([-tdir[1], tdir[0]])
    band = 0.35 * (r / n)
    slit = []
    for el in mesh.elements:
        cen = mesh.centroid(el)
        if abs(cen @ ndir) <= band and abs(cen @ tdir) <= a:
            slit.append(el.id)
    opening = 2e-4
    embedded = " ".join(f"{eid}:45:{opening:g}" for eid in slit)
    cfg = _config_text("MESHFILE", {0: (15e9, 0.21, 3.81e6, 50.0)},
                       "1.5e-6 x 80", embedded=embedded,
                       stop_drop_ratio=0.55, cadence=20)
    return mesh, cfg


# ---------------------------------------------------------------------
# Three-point bending of a 0.45 x 0.1 m beam; Case 2 tags circular
# aggregates in the middle part with a stiffer, stronger material.

_AGGREGATES = [
    (0.170, 0.030, 0.016),
    (0.225, 0.062, 0.018),
    (0.205, 0.018, 0.012),
    (0.268, 0.040, 0.015),
    (0.245, 0.085, 0.011),
    (0.290, 0.075, 0.013),
    (0.160, 0.078, 0.012),
    (0.310, 0.020, 0.011),
]


def gen_beam3pt(refine: int = 1, case: int = 1) -> tuple[Mesh, str]:
    if case not in (1, 2):
        raise ValueError(f"beam3pt case must be 1 or 2, got {case}")
    length, height = 0.45, 0.10
    nx, ny = 18 * refine, 4 * refine
    sx, sy = length / nx, height / ny
    mesh = Mesh()
    bank = _NodeBank(mesh)
    for j in range(ny):
        for i in range(nx):
            cx, cy = (i + 0.5) * sx, (j + 0.5) * sy
            mat = 0
            if case == 2 and any((cx - ax) ** 2 + (cy - ay) ** 2 <= ar ** 2
                                 for ax, ay, ar in _AGGREGATES):
                mat = 1
            n1 = bank.get(i * sx, j * sy)
            n2 = bank.get((i + 1) * sx, j * sy)
            n3 = bank.get((i + 1) * sx, (j + 1) * sy)
            n4 = bank.get(i * sx, (j + 1) * sy)
            mesh.add_element(4, [n1, n2, n3, n4], material_id=mat)
    for nd in mesh.nodes:
        on_bottom = abs(nd.y) < 1e-12
        if on_bottom and abs(nd.x) < 1e-12:
            mesh.bcs.append(BoundaryCondition(nd.id, 0, 0.0, "disp"))
            mesh.bcs.append(BoundaryCondition(nd.id, 1, 0.0, "disp"))
        elif on_bottom and abs(nd.x - length) < 1e-12:
            mesh.bcs.append(BoundaryCondition(nd.id, 1, 0.0, "disp"))
        if abs(nd.y - height) < 1e-12 and abs(nd.x - 0.5 * length) < 1e-12:
            mesh.bcs.append(BoundaryCondition(nd.id, 1, -1.0, "disp"))
    mesh.finalize()
    materials = {0: (20e9, 0.2, 2.4e6, 113.0)}
    if case == 2:
        materials[1] = (30e9, 0.2, 6e6, 200.0)
    cfg = _config_text("MESHFILE", materials, "1e-5 x 80")
    return mesh, cfg


def gen_benchmark(name: str, refine: int, out_path: str,
                  case: int = 1) -> tuple[str, str]:
    """Write the mesh and a ready-to-run config; returns both paths."""
    if name == "lpanel":
        mesh, cfg = gen_lpanel(refine)
    elif name == "disk":
        mesh, cfg = gen_disk(refine)
    elif name == "beam3pt":
        mesh, cfg = gen_beam3pt(refine, case)
    else:
        raise ValueError(
            f"unknown benchmark {name!r}; choose from {BENCHMARKS}")
    mesh.validate()
    out = Path(out_path)
    save_mesh(mesh, str(out), header=f"{name} benchmark, refine={refine}")
    cfg_path = out.with_suffix(".config")
    cfg_path.write_text(cfg.replace("MESHFILE", out.name), encoding="utf-8")
    return str(out), str(cfg_path)
