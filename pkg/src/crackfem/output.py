"""Legacy-ASCII VTK and CSV emission.

Fully enriched elements are written as quadratic cells (VTK types 23/22);
partially enriched or linear elements fall back to their corner footprint
(types 9/5) with the enrichment level recorded as cell data, since VTK has
no native 5..7-node quad.  Center nodes never appear as points (their
dofs are crack openings, not displacements).
"""

from __future__ import annotations

import numpy as np

from . import cohesive_law as law

_LINEAR_TYPE = {3: 5, 4: 9}
_QUADRATIC_TYPE = {3: 22, 4: 23}


def write_force_csv_header(fh):
    fh.write("d,force\n")


def write_force_csv_row(fh, record):
    fh.write(f"{record.d:.12e},{record.force:.12e}\n")


def write_stats_csv_header(fh):
    fh.write("step,d,newton_iterations,n_nodes,n_cracked,elapsed_s\n")


def write_stats_csv_row(fh, record):
    fh.write(f"{record.step},{record.d:.12e},{record.iterations},"
             f"{record.n_nodes},{record.n_cracked},{record.wall_time:.6f}\n")


def write_vtk(path: str, sim, title: str = "crackfem state"):
    """Write displacement and crack fields of the current state."""
    mesh = sim.mesh
    cells = []
    point_ids: list[int] = []
    id_to_row: dict[int, int] = {}

    def row(nid: int) -> int:
        if nid not in id_to_row:
            id_to_row[nid] = len(point_ids)
            point_ids.append(nid)
        return id_to_row[nid]

    for el in mesh.elements:
        full = all(el.econn)
        if full:
            conn = [row(n) for n in list(el.corner_ids) + list(el.econn)]
            ctype = _QUADRATIC_TYPE[el.tp]
        else:
            conn = [row(n) for n in el.corner_ids]
            ctype = _LINEAR_TYPE[el.tp]
        cells.append((conn, ctype, el))

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title}\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(point_ids)} double\n")
        for nid in point_ids:
            nd = mesh.node(nid)
            fh.write(f"{nd.x:.9e} {nd.y:.9e} 0.0\n")

        total = sum(len(c[0]) + 1 for c in cells)
        fh.write(f"CELLS {len(cells)} {total}\n")
        for conn, _, _ in cells:
            fh.write(str(len(conn)) + " " + " ".join(map(str, conn)) + "\n")
        fh.write(f"CELL_TYPES {len(cells)}\n")
        for _, ctype, _ in cells:
            fh.write(f"{ctype}\n")

        fh.write(f"POINT_DATA {len(point_ids)}\n")
        fh.write("VECTORS displacement double\n")
        for nid in point_ids:
            d0, d1 = sim.dofmap.pair(nid)
            fh.write(f"{sim.U[d0]:.9e} {sim.U[d1]:.9e} 0.0\n")

        fh.write(f"CELL_DATA {len(cells)}\n")
        fh.write("SCALARS crack_flag int 1\nLOOKUP_TABLE default\n")
        for _, _, el in cells:
            fh.write(f"{1 if el.id in sim.cracks else 0}\n")
        fh.write("SCALARS n_edge_nodes int 1\nLOOKUP_TABLE default\n")
        for _, _, el in cells:
            fh.write(f"{sum(1 for n in el.econn if n)}\n")

        opening_n = []
        opening_t = []
        opening_eq = []
        normals = []
        for _, _, el in cells:
            if el.id in sim.cracks:
                w = sim.opening(el.id)
                opening_n.append(w[0])
                opening_t.append(w[1])
                opening_eq.append(law.equivalent_opening(w[0], w[1]))
                normals.append(sim.cracks[el.id].geom.normal)
            else:
                opening_n.append(0.0)
                opening_t.append(0.0)
                opening_eq.append(0.0)
                normals.append(np.zeros(2))
        for name, vals in (("opening_n", opening_n),
                           ("opening_t", opening_t),
                           ("crack_opening", opening_eq)):
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in vals:
                fh.write(f"{v:.9e}\n")
        fh.write("VECTORS crack_normal double\n")
        for nvec in normals:
            fh.write(f"{nvec[0]:.9e} {nvec[1]:.9e} 0.0\n")
