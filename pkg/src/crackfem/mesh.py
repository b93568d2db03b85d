"""Hybrid mesh storage, adaptive node insertion and the text file format.

Node and element ids are 1-based; an edge-node slot value of 0 means "no
edge node on that edge".  The edge map keys every element edge by its
sorted corner pair, which guarantees that two elements sharing an edge
always reference the same edge node (no duplicated midside nodes and no
non-conforming interfaces).

Mesh file format (line oriented, ``#`` starts a comment)::

    NODES
    <id> <x> <y>
    ELEMENTS
    <id> <tp> <n1> ... <n_tp> [material_id]
    BC
    <node_id> <x|y> <value> <disp|force>
    BOUNDARY_CURVE
    circle <cx> <cy> <r>
    <node ids on the curve, any number per line>

Only linear elements (corner nodes) can be declared in a file; quadratic
enrichment happens at runtime via ``upgrade_element``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import shape_functions as sf

KIND_CORNER = "corner"
KIND_EDGE = "edge"
KIND_CENTER = "center"


class MeshError(Exception):
    pass


class MeshFormatError(MeshError):
    """Malformed mesh file; message carries path and line number."""


class TopologyError(MeshError):
    """Structurally invalid mesh (bad ids, inverted elements, ...)."""


@dataclass
class Node:
    id: int
    x: float
    y: float
    kind: str = KIND_CORNER
    parents: tuple[int, int] | None = None  # corner pair for edge nodes

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass
class Element:
    id: int
    tp: int                      # 3 = triangle, 4 = quad
    corner_ids: list[int]
    econn: list[int] = field(default_factory=list)  # 0 = no edge node
    center_id: int = 0
    material_id: int = 0

    def __post_init__(self):
        if not self.econn:
            self.econn = [0] * self.tp

    def edge_corner_pair(self, i: int) -> tuple[int, int]:
        return self.corner_ids[i], self.corner_ids[(i + 1) % self.tp]


@dataclass
class BoundaryCondition:
    node: int
    dof: int          # 0 = x, 1 = y
    value: float      # displacement profile (scaled by load factor) or force
    kind: str         # "disp" | "force"


@dataclass
class BoundaryCurve:
    cx: float
    cy: float
    r: float
    nodes: set[int]

    def project(self, x: float, y: float) -> tuple[float, float]:
        dx, dy = x - self.cx, y - self.cy
        d = math.hypot(dx, dy)
        if d == 0.0:
            raise TopologyError("cannot project curve center onto itself")
        s = self.r / d
        return self.cx + dx * s, self.cy + dy * s


def edge_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


class Mesh:
    def __init__(self):
        self.nodes: list[Node] = []
        self.elements: list[Element] = []
        self.edge_map: dict[tuple[int, int], int] = {}
        self.bcs: list[BoundaryCondition] = []
        self.curves: list[BoundaryCurve] = []
        self.version = 0
        self._edge_elems: dict[tuple[int, int], list[int]] = {}
        self._corner_elems: dict[int, list[int]] = {}

    # -- basic access -------------------------------------------------

    def node(self, nid: int) -> Node:
        return self.nodes[nid - 1]

    def element(self, eid: int) -> Element:
        return self.elements[eid - 1]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def add_node(self, x: float, y: float, kind: str,
                 parents: tuple[int, int] | None = None) -> int:
        nid = len(self.nodes) + 1
        self.nodes.append(Node(id=nid, x=x, y=y, kind=kind, parents=parents))
        self.version += 1
        return nid

    def add_element(self, tp: int, corner_ids: list[int],
                    material_id: int = 0) -> int:
        eid = len(self.elements) + 1
        self.elements.append(Element(id=eid, tp=tp,
                                     corner_ids=list(corner_ids),
                                     material_id=material_id))
        self.version += 1
        return eid

    def corner_coords(self, el: Element) -> np.ndarray:
        return np.array([[self.node(c).x, self.node(c).y]
                         for c in el.corner_ids])

    def element_coords(self, el: Element) -> np.ndarray:
        """(2*tp, 2) coordinates with virtual edge nodes at midpoints."""
        out = np.empty((2 * el.tp, 2))
        out[:el.tp] = self.corner_coords(el)
        for i in range(el.tp):
            nid = el.econn[i]
            if nid:
                out[el.tp + i] = (self.node(nid).x, self.node(nid).y)
            else:
                a, b = el.edge_corner_pair(i)
                out[el.tp + i] = 0.5 * (self.node(a).xy + self.node(b).xy)
        return out

    def edge_mask(self, el: Element) -> np.ndarray:
        return np.array([1 if n else 0 for n in el.econn], dtype=np.uint8)

    def centroid(self, el: Element) -> np.ndarray:
        return self.corner_coords(el).mean(axis=0)

    # -- connectivity -------------------------------------------------

    def finalize(self):
        """(Re)build edge and corner adjacency after bulk construction."""
        self.edge_map = {}
        self._edge_elems = {}
        self._corner_elems = {}
        for el in self.elements:
            for c in el.corner_ids:
                self._corner_elems.setdefault(c, []).append(el.id)
            for i in range(el.tp):
                key = edge_key(*el.edge_corner_pair(i))
                self.edge_map.setdefault(key, 0)
                self._edge_elems.setdefault(key, []).append(el.id)
        self.version += 1

    def validate(self):
        """Check node references, orientation and Jacobian positivity."""
        for el in self.elements:
            for c in list(el.corner_ids) + [n for n in el.econn if n] \
                    + ([el.center_id] if el.center_id else []):
                if not 1 <= c <= len(self.nodes):
                    raise TopologyError(
                        f"element {el.id} references missing node {c}")
            corners = self.corner_coords(el)
            x, y = corners[:, 0], corners[:, 1]
            area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
            if area <= 0.0:
                raise TopologyError(
                    f"element {el.id} is inverted or degenerate (area {area:g})")
            coords = self.element_coords(el)
            for xi, eta in sf.quadrature(el.tp).points:
                try:
                    sf.eval_full(el.tp, xi, eta, coords)
                except sf.SingularJacobianError as exc:
                    raise TopologyError(
                        f"element {el.id}: {exc}") from exc
        for bc in self.bcs:
            if not 1 <= bc.node <= len(self.nodes):
                raise TopologyError(f"BC references missing node {bc.node}")

    def neighbors(self, eid: int, mode: str = "shares_edge") -> set[int]:
        """Elements adjacent to eid; excludes eid itself."""
        el = self.element(eid)
        out: set[int] = set()
        if mode == "shares_edge":
            for i in range(el.tp):
                key = edge_key(*el.edge_corner_pair(i))
                out.update(self._edge_elems.get(key, ()))
        elif mode == "shares_node":
            for c in el.corner_ids:
                out.update(self._corner_elems.get(c, ()))
        else:
            raise ValueError(f"unknown neighbor mode {mode!r}")
        out.discard(eid)
        return out

    # -- adaptive upgrades ---------------------------------------------

    def _curve_containing(self, a: int, b: int) -> BoundaryCurve | None:
        for curve in self.curves:
            if a in curve.nodes and b in curve.nodes:
                return curve
        return None

    def _inherit_bcs(self, new_node: int, a: int, b: int):
        """New edge node inherits a displacement BC when both parent
        corners prescribe the same dof; the profile is their mean."""
        for dof in (0, 1):
            va = [bc.value for bc in self.bcs
                  if bc.kind == "disp" and bc.node == a and bc.dof == dof]
            vb = [bc.value for bc in self.bcs
                  if bc.kind == "disp" and bc.node == b and bc.dof == dof]
            if va and vb:
                self.bcs.append(BoundaryCondition(
                    node=new_node, dof=dof,
                    value=0.5 * (va[0] + vb[0]), kind="disp"))

    def upgrade_element(self, eid: int, add_center: bool) -> list[int]:
        """Give element eid edge nodes on all edges (and optionally a
        center node).  Existing edge nodes are reused through the edge
        map; neighbors sharing an edge have their slots updated.  Returns
        the ids of newly created nodes."""
        el = self.element(eid)
        new_ids: list[int] = []
        for i in range(el.tp):
            a, b = el.edge_corner_pair(i)
            key = edge_key(a, b)
            nid = self.edge_map.get(key, 0)
            if nid == 0:
                na, nb = self.node(a), self.node(b)
                x, y = 0.5 * (na.x + nb.x), 0.5 * (na.y + nb.y)
                curve = self._curve_containing(a, b)
                if curve is not None:
                    x, y = curve.project(x, y)
                nid = self.add_node(x, y, KIND_EDGE, parents=(a, b))
                if curve is not None:
                    curve.nodes.add(nid)
                self.edge_map[key] = nid
                self._inherit_bcs(nid, a, b)
                new_ids.append(nid)
            if el.econn[i] != nid:
                el.econn[i] = nid
            for other in self._edge_elems.get(key, ()):
                if other == eid:
                    continue
                oel = self.element(other)
                for j in range(oel.tp):
                    if edge_key(*oel.edge_corner_pair(j)) == key:
                        oel.econn[j] = nid
        if add_center and el.center_id == 0:
            cx, cy = self.centroid(el)
            cid = self.add_node(cx, cy, KIND_CENTER)
            el.center_id = cid
            new_ids.append(cid)
        self.version += 1
        return new_ids


# ---------------------------------------------------------------------
# file I/O

def _fail(path, lineno, msg):
    raise MeshFormatError(f"{path}:{lineno}: {msg}")


def load_mesh(path: str) -> Mesh:
    mesh = Mesh()
    section = None
    pending_curve: BoundaryCurve | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            upper = line.upper()
            if upper in ("NODES", "ELEMENTS", "BC", "BOUNDARY_CURVE"):
                section = upper
                if section == "BOUNDARY_CURVE":
                    pending_curve = None
                continue
            parts = line.split()
            if section == "NODES":
                if len(parts) != 3:
                    _fail(path, lineno, "expected: id x y")
                try:
                    nid, x, y = int(parts[0]), float(parts[1]), float(parts[2])
                except ValueError:
                    _fail(path, lineno, f"cannot parse node line {line!r}")
                if nid != len(mesh.nodes) + 1:
                    _fail(path, lineno,
                          f"node ids must be 1..N in order, got {nid}")
                mesh.nodes.append(Node(id=nid, x=x, y=y, kind=KIND_CORNER))
            elif section == "ELEMENTS":
                try:
                    eid, tp = int(parts[0]), int(parts[1])
                except (ValueError, IndexError):
                    _fail(path, lineno, f"cannot parse element line {line!r}")
                if tp not in (3, 4):
                    _fail(path, lineno, f"element type must be 3 or 4, got {tp}")
                if len(parts) not in (2 + tp, 3 + tp):
                    _fail(path, lineno,
                          f"expected {tp} corner ids and optional material id")
                try:
                    corners = [int(p) for p in parts[2:2 + tp]]
                    mat = int(parts[2 + tp]) if len(parts) == 3 + tp else 0
                except ValueError:
                    _fail(path, lineno, f"cannot parse element line {line!r}")
                if eid != len(mesh.elements) + 1:
                    _fail(path, lineno,
                          f"element ids must be 1..M in order, got {eid}")
                mesh.elements.append(Element(id=eid, tp=tp, corner_ids=corners,
                                             material_id=mat))
            elif section == "BC":
                if len(parts) != 4:
                    _fail(path, lineno, "expected: node dof value kind")
                dof = {"x": 0, "y": 1}.get(parts[1].lower())
                if dof is None:
                    _fail(path, lineno, f"dof must be x or y, got {parts[1]!r}")
                kind = parts[3].lower()
                if kind not in ("disp", "force"):
                    _fail(path, lineno,
                          f"kind must be disp or force, got {parts[3]!r}")
                try:
                    mesh.bcs.append(BoundaryCondition(
                        node=int(parts[0]), dof=dof,
                        value=float(parts[2]), kind=kind))
                except ValueError:
                    _fail(path, lineno, f"cannot parse BC line {line!r}")
            elif section == "BOUNDARY_CURVE":
                if parts[0].lower() == "circle":
                    if len(parts) != 4:
                        _fail(path, lineno, "expected: circle cx cy r")
                    pending_curve = BoundaryCurve(
                        cx=float(parts[1]), cy=float(parts[2]),
                        r=float(parts[3]), nodes=set())
                    mesh.curves.append(pending_curve)
                else:
                    if pending_curve is None:
                        _fail(path, lineno,
                              "curve node list before a curve declaration")
                    try:
                        pending_curve.nodes.update(int(p) for p in parts)
                    except ValueError:
                        _fail(path, lineno, f"cannot parse node ids {line!r}")
            else:
                _fail(path, lineno, f"content outside any section: {line!r}")
    mesh.finalize()
    try:
        mesh.validate()
    except TopologyError as exc:
        raise TopologyError(f"{path}: {exc}") from exc
    return mesh


def save_mesh(mesh: Mesh, path: str, header: str = ""):
    """Write a linear mesh (corner nodes, elements, BCs, curves)."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for ln in header.splitlines():
                fh.write(f"# {ln}\n")
        fh.write("NODES\n")
        for nd in mesh.nodes:
            if nd.kind != KIND_CORNER:
                raise MeshError("save_mesh supports linear meshes only")
            fh.write(f"{nd.id} {nd.x:.12g} {nd.y:.12g}\n")
        fh.write("ELEMENTS\n")
        for el in mesh.elements:
            corners = " ".join(str(c) for c in el.corner_ids)
            fh.write(f"{el.id} {el.tp} {corners} {el.material_id}\n")
        if mesh.bcs:
            fh.write("BC\n")
            for bc in mesh.bcs:
                dof = "x" if bc.dof == 0 else "y"
                fh.write(f"{bc.node} {dof} {bc.value:.12g} {bc.kind}\n")
        for curve in mesh.curves:
            fh.write("BOUNDARY_CURVE\n")
            fh.write(f"circle {curve.cx:.12g} {curve.cy:.12g} {curve.r:.12g}\n")
            ids = sorted(curve.nodes)
            for i in range(0, len(ids), 12):
                fh.write(" ".join(str(n) for n in ids[i:i + 12]) + "\n")


def all_quadratic_node_count(mesh: Mesh) -> int:
    """Node count if every element were quadratic from the start."""
    n_corner = sum(1 for nd in mesh.nodes if nd.kind == KIND_CORNER)
    return n_corner + len(mesh.edge_map)
