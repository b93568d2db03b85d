"""Displacement-controlled incremental solver with adaptive cracking.

Per load step: bring the prescribed displacements to their target, iterate
Newton until the free-dof residual drops below tolerance, then search for
new cracking elements (one at a time, re-equilibrating after each), update
the cohesive history, and record the reaction force on the driven
boundary.  Non-convergent steps are retried with halved increments.

The global unknown vector holds two dofs per node: displacements for
corner/edge nodes, crack openings for center nodes.  Dirichlet conditions
are applied by elimination: prescribed values are written into the vector
before assembly, so the correction system is solved on the free dofs only.
"""

from __future__ import annotations

import copy
import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import cohesive_law as law
from . import cracking_element as ce
from . import kernels
from . import propagation
from .element_geometry import make_crack_geometry


class NewtonError(RuntimeError):
    def __init__(self, msg, residual=None, iterations=None):
        super().__init__(msg)
        self.residual = residual
        self.iterations = iterations


class SolverAbort(RuntimeError):
    def __init__(self, msg, records=None):
        super().__init__(msg)
        self.records = records or []


@dataclass
class SolverSettings:
    tol_rel: float = 1e-6
    tol_abs_factor: float = 1e-10   # times E_max * characteristic mesh size
    max_iter: int = 50
    max_bisect: int = 8
    adaptive_level: int = 0
    freeze_normal: bool = True
    eig_shear_convention: str = "tensor"
    stop_drop_ratio: float | None = None  # stop once force < ratio * peak


@dataclass
class CrackState:
    geom: object                  # CrackGeometry; refreshed while unfrozen
    hist: law.CrackHistory
    frozen: bool = False
    embedded: bool = False


@dataclass
class StepRecord:
    step: int
    d: float
    force: float
    iterations: int
    n_nodes: int
    n_cracked: int
    wall_time: float
    new_cracks: list[int] = field(default_factory=list)


@dataclass
class RunResult:
    records: list[StepRecord]
    status: str                   # "completed" | "stopped_peak_drop"

    @property
    def d(self) -> np.ndarray:
        return np.array([r.d for r in self.records])

    @property
    def force(self) -> np.ndarray:
        return np.array([r.force for r in self.records])


class DofMap:
    """Node id -> global dof pair, stable under mesh growth.

    Corner/edge nodes carry (u_x, u_y); center nodes carry the two crack
    openings of their element.  Ids are dense and creation-ordered, so an
    index never changes once handed out.
    """

    def __init__(self, mesh):
        self._mesh = mesh

    def pair(self, node_id: int) -> tuple[int, int]:
        if not 1 <= node_id <= self._mesh.n_nodes:
            raise KeyError(f"no node {node_id}")
        base = 2 * (node_id - 1)
        return base, base + 1

    @property
    def size(self) -> int:
        return 2 * self._mesh.n_nodes


@dataclass
class _Group:
    """Per-element-type arrays for batched assembly."""

    tp: int
    eids: np.ndarray       # (m,)
    dofcols: np.ndarray    # (m, 2n), -1 at virtual slots
    K: np.ndarray          # (m, 2n, 2n)
    intB: np.ndarray       # (m, 3, 2n)
    B1: np.ndarray         # (m, 3, 2n)
    vol: np.ndarray        # (m,)
    unc_rows: np.ndarray   # row indices of uncracked members
    coo_r: np.ndarray      # static stiffness triplets (uncracked only)
    coo_c: np.ndarray
    coo_v: np.ndarray


class Simulation:
    def __init__(self, mesh, materials: dict[int, law.Material],
                 settings: SolverSettings | None = None):
        self.mesh = mesh
        self.materials = dict(materials)
        self.settings = settings or SolverSettings()
        if self.settings.eig_shear_convention not in propagation.SHEAR_CONVENTIONS:
            raise ValueError(
                f"eig_shear_convention must be one of "
                f"{propagation.SHEAR_CONVENTIONS}")
        self.dofmap = DofMap(mesh)
        self.U = np.zeros(self.dofmap.size)
        self.cracks: dict[int, CrackState] = {}
        self._C = {mid: m.plane_stress() for mid, m in self.materials.items()}
        for el in mesh.elements:
            if el.material_id not in self._C:
                raise ValueError(
                    f"element {el.id} uses undefined material {el.material_id}")
        areas = [_quad_area(mesh.corner_coords(el)) for el in mesh.elements]
        self._h_char = math.sqrt(np.mean(areas)) if areas else 1.0
        e_max = max(m.E for m in self.materials.values())
        self.tol_abs = self.settings.tol_abs_factor * e_max * self._h_char
        self._cache_version = -1
        self._groups: list[_Group] = []
        self._by_eid: dict[int, tuple[int, int]] = {}
        self._pres_dofs = np.empty(0, dtype=np.int64)
        self._pres_profile = np.empty(0)
        self._free = np.empty(0, dtype=np.int64)
        self._f_ext = np.zeros(self.dofmap.size)
        self._last_R: np.ndarray | None = None

    # -- caches ---------------------------------------------------------

    def _material(self, el) -> law.Material:
        return self.materials[el.material_id]

    def _rebuild_cache(self):
        mesh = self.mesh
        self._groups = []
        self._by_eid = {}
        for tp in (3, 4):
            els = [el for el in mesh.elements if el.tp == tp]
            if not els:
                continue
            m = len(els)
            n = 2 * tp
            coords = np.empty((m, n, 2))
            mask = np.empty((m, tp), dtype=np.uint8)
            cmats = np.empty((m, 3, 3))
            dofcols = np.full((m, 2 * n), -1, dtype=np.int64)
            for r, el in enumerate(els):
                coords[r] = mesh.element_coords(el)
                mask[r] = mesh.edge_mask(el)
                cmats[r] = self._C[el.material_id]
                for i, nid in enumerate(list(el.corner_ids) + list(el.econn)):
                    if nid:
                        d0, d1 = self.dofmap.pair(nid)
                        dofcols[r, 2 * i] = d0
                        dofcols[r, 2 * i + 1] = d1
            try:
                k, ib, b1, vol = kernels.batch_element_integrals(
                    tp, coords, mask, cmats)
            except ValueError as exc:
                raise NewtonError(f"element integration failed: {exc}") from exc
            unc = np.array([r for r, el in enumerate(els)
                            if el.id not in self.cracks], dtype=np.int64)
            rows = np.repeat(dofcols[unc, :, None], 2 * n, axis=2)
            cols = np.repeat(dofcols[unc, None, :], 2 * n, axis=1)
            keep = (rows >= 0) & (cols >= 0)
            grp = _Group(tp=tp,
                         eids=np.array([el.id for el in els]),
                         dofcols=dofcols, K=k, intB=ib, B1=b1, vol=vol,
                         unc_rows=unc,
                         coo_r=rows[keep], coo_c=cols[keep],
                         coo_v=k[unc][keep])
            gi = len(self._groups)
            self._groups.append(grp)
            for r, el in enumerate(els):
                self._by_eid[el.id] = (gi, r)

        # boundary conditions
        pres: dict[int, float] = {}
        self._f_ext = np.zeros(self.dofmap.size)
        for bc in mesh.bcs:
            dof = self.dofmap.pair(bc.node)[bc.dof]
            if bc.kind == "disp":
                pres[dof] = bc.value
            else:
                self._f_ext[dof] += bc.value
        self._pres_dofs = np.array(sorted(pres), dtype=np.int64)
        self._pres_profile = np.array([pres[d] for d in self._pres_dofs])
        mask = np.ones(self.dofmap.size, dtype=bool)
        mask[self._pres_dofs] = False
        self._free = np.nonzero(mask)[0]
        self._cache_version = mesh.version

    def _ensure_cache(self):
        if self._cache_version != self.mesh.version:
            if self.U.shape[0] != self.dofmap.size:
                raise RuntimeError("unknown vector out of sync with mesh")
            self._rebuild_cache()

    def element_integrals(self, eid: int) -> ce.ElementIntegrals:
        self._ensure_cache()
        gi, r = self._by_eid[eid]
        g = self._groups[gi]
        return ce.ElementIntegrals(K_uu=g.K[r], intB=g.intB[r],
                                   B1=g.B1[r], vol=float(g.vol[r]))

    def gather_u(self, eid: int) -> np.ndarray:
        self._ensure_cache()
        gi, r = self._by_eid[eid]
        cols = self._groups[gi].dofcols[r]
        return np.where(cols >= 0, self.U[np.clip(cols, 0, None)], 0.0)

    def center_strain(self, eid: int) -> np.ndarray:
        gi, r = self._by_eid[eid]
        return self._groups[gi].B1[r] @ self.gather_u(eid)

    def opening(self, eid: int) -> np.ndarray:
        el = self.mesh.element(eid)
        d0, d1 = self.dofmap.pair(el.center_id)
        return self.U[[d0, d1]]

    # -- cracking ---------------------------------------------------------

    def _refresh_crack_geometry(self, eid: int, cs: CrackState):
        if cs.frozen:
            return
        el = self.mesh.element(eid)
        strain = self.center_strain(eid)
        n, _ = propagation.crack_normal(strain,
                                        self.settings.eig_shear_convention)
        cs.geom = make_crack_geometry(self.mesh.corner_coords(el), el.tp, n)

    def _extend_u(self, new_node_ids: list[int]):
        new_u = np.zeros(self.dofmap.size)
        new_u[:self.U.shape[0]] = self.U
        for nid in new_node_ids:
            nd = self.mesh.node(nid)
            if nd.kind == "edge" and nd.parents is not None:
                a, b = nd.parents
                da, db = self.dofmap.pair(a), self.dofmap.pair(b)
                d = self.dofmap.pair(nid)
                new_u[d[0]] = 0.5 * (new_u[da[0]] + new_u[db[0]])
                new_u[d[1]] = 0.5 * (new_u[da[1]] + new_u[db[1]])
        self.U = new_u

    def convert_to_cracked(self, eid: int):
        """Crack an element using the normal of its current center strain."""
        if eid in self.cracks:
            raise ValueError(f"element {eid} is already cracked")
        self._ensure_cache()
        el = self.mesh.element(eid)
        strain = self.center_strain(eid)
        n, _ = propagation.crack_normal(strain,
                                        self.settings.eig_shear_convention)
        geom = make_crack_geometry(self.mesh.corner_coords(el), el.tp, n)
        self.cracks[eid] = CrackState(geom=geom, hist=law.CrackHistory())
        new_ids = propagation.enrich_for_level(self.mesh, eid,
                                               self.settings.adaptive_level)
        self._extend_u(new_ids)

    def embed_crack(self, eid: int, angle_deg: float, opening: float):
        """Pre-crack an element with a traction-free embedded crack.

        angle_deg is the inclination of the crack line from the +x axis;
        the opening must exceed the threshold so the crack starts on the
        unloading branch with near-zero secant stiffness.
        """
        if eid in self.cracks:
            raise ValueError(f"element {eid} is already cracked")
        el = self.mesh.element(eid)
        mat = self._material(el)
        if opening <= mat.delta_0:
            raise ValueError(
                f"embedded opening {opening:g} must exceed the threshold "
                f"{mat.delta_0:g}")
        theta = math.radians(angle_deg)
        n = np.array([math.sin(theta), -math.cos(theta)])
        if n[1] < 0.0 or (n[1] == 0.0 and n[0] < 0.0):
            n = -n
        geom = make_crack_geometry(self.mesh.corner_coords(el), el.tp, n)
        hist = law.CrackHistory(delta_max=opening,
                                t_max=law.softening_traction(opening, mat))
        self.cracks[eid] = CrackState(geom=geom, hist=hist, frozen=True,
                                      embedded=True)
        new_ids = propagation.enrich_for_level(self.mesh, eid,
                                               self.settings.adaptive_level)
        self._extend_u(new_ids)

    # -- assembly ---------------------------------------------------------

    def assemble(self, refresh_normals: bool = True):
        """Global stiffness (csr) and residual at the current state."""
        self._ensure_cache()
        ndof = self.dofmap.size
        R = self._f_ext.copy()
        coo_r = []
        coo_c = []
        coo_v = []
        for g in self._groups:
            ue = np.where(g.dofcols >= 0,
                          self.U[np.clip(g.dofcols, 0, None)], 0.0)
            if g.unc_rows.size:
                f = np.einsum('mij,mj->mi', g.K[g.unc_rows], ue[g.unc_rows])
                cols = g.dofcols[g.unc_rows]
                keep = cols >= 0
                np.add.at(R, cols[keep], -f[keep])
            coo_r.append(g.coo_r)
            coo_c.append(g.coo_c)
            coo_v.append(g.coo_v)

        for eid in self.cracks:
            cs = self.cracks[eid]
            if refresh_normals:
                self._refresh_crack_geometry(eid, cs)
            el = self.mesh.element(eid)
            gi, r = self._by_eid[eid]
            g = self._groups[gi]
            integ = ce.ElementIntegrals(K_uu=g.K[r], intB=g.intB[r],
                                        B1=g.B1[r], vol=float(g.vol[r]))
            u_e = self.gather_u(eid)
            state = ce.ElementState(geom=cs.geom, opening=self.opening(eid),
                                    hist=cs.hist, u=u_e)
            k_e, r_e = ce.assemble_cracked(integ, state,
                                           self._C[el.material_id],
                                           self._material(el))
            cols = g.dofcols[r]
            cd = self.dofmap.pair(el.center_id)
            scatter = np.concatenate([cols, np.array(cd, dtype=np.int64)])
            keep = scatter >= 0
            np.add.at(R, scatter[keep], r_e[keep])
            rows2 = np.repeat(scatter[:, None], scatter.size, axis=1)
            cols2 = rows2.T
            keep2 = (rows2 >= 0) & (cols2 >= 0)
            coo_r.append(rows2[keep2])
            coo_c.append(cols2[keep2])
            coo_v.append(k_e[keep2])

        K = sp.coo_matrix(
            (np.concatenate(coo_v),
             (np.concatenate(coo_r), np.concatenate(coo_c))),
            shape=(ndof, ndof)).tocsr()
        return K, R

    # -- solving ----------------------------------------------------------

    def apply_prescribed(self, d: float):
        self._ensure_cache()
        self.U[self._pres_dofs] = self._pres_profile * d

    def _opening_dof_info(self):
        """Crack-opening dof ids, their free-vector positions and the
        per-dof threshold openings (for correction damping)."""
        dofs = []
        d0 = []
        for eid in self.cracks:
            el = self.mesh.element(eid)
            dofs.extend(self.dofmap.pair(el.center_id))
            d0.extend([self._material(el).delta_0] * 2)
        if not dofs:
            return None
        dofs = np.array(dofs, dtype=np.int64)
        pos = np.searchsorted(self._free, dofs)
        return dofs, pos, np.array(d0)

    #: iterations during which unfrozen crack normals track the iterate;
    #: afterwards they hold for the remainder of the solve (they are
    #: refreshed again at the start of the next one), which stops the
    #: orientation feedback from stalling the late Newton contraction
    NORMAL_TRACK_ITERS = 5

    def newton(self, d: float) -> int:
        """Equilibrate at prescribed load factor d; returns iteration count."""
        self.apply_prescribed(d)
        info = self._opening_dof_info()
        r_ref = None
        r_prev = None
        damp = 1.0
        for it in range(self.settings.max_iter + 1):
            K, R = self.assemble(refresh_normals=it < self.NORMAL_TRACK_ITERS)
            r_free = R[self._free]
            rnorm = float(np.linalg.norm(r_free))
            if r_ref is None:
                r_ref = rnorm
            if rnorm <= self.tol_abs + self.settings.tol_rel * r_ref:
                self._last_R = R
                return it
            if self._free.size == 0:
                self._last_R = R
                return it
            if r_prev is not None and rnorm > 0.99 * r_prev:
                # stagnation or a cohesive branch-flip cycle: damp the
                # correction for the rest of this solve (the converged
                # state is unaffected; full steps resume next solve)
                damp = max(0.5 * damp, 1.0 / 64.0)
            r_prev = rnorm
            k_ff = K[self._free][:, self._free].tocsc()
            du = spla.spsolve(k_ff, r_free)
            if not np.all(np.isfinite(du)):
                raise NewtonError("linear solve produced non-finite values",
                                  residual=rnorm, iterations=it)
            if info is not None:
                # cap oversized opening corrections: a fresh crack must
                # cross the traction peak gradually or the recomputed
                # normal starts thrashing
                _, pos, d0 = info
                worst = float(np.max(np.abs(du[pos]) / (3.0 * d0)))
                if worst > 1.0:
                    du /= worst
            self.U[self._free] += damp * du
        raise NewtonError(
            f"no convergence at d={d:g} after {self.settings.max_iter} "
            f"iterations (residual {rnorm:g}, reference {r_ref:g})",
            residual=rnorm, iterations=self.settings.max_iter)

    def reactions(self) -> np.ndarray:
        """Reaction forces at prescribed dofs from the last residual."""
        if self._last_R is None:
            raise RuntimeError("no converged state yet")
        return -self._last_R[self._pres_dofs]

    def driven_force(self) -> float:
        """Total reaction along the driving direction of the driven dofs."""
        reac = self.reactions()
        driven = self._pres_profile != 0.0
        return float(np.sum(reac[driven] * np.sign(self._pres_profile[driven])))

    # -- crack search -------------------------------------------------------

    def indicator_map(self) -> dict[int, float]:
        """Cracking indicator for every uncracked element (current state)."""
        self._ensure_cache()
        conv = self.settings.eig_shear_convention
        out = {}
        for g in self._groups:
            ue = np.where(g.dofcols >= 0,
                          self.U[np.clip(g.dofcols, 0, None)], 0.0)
            eps = np.einsum('mij,mj->mi', g.B1, ue)
            for r, eid in enumerate(g.eids):
                eid = int(eid)
                if eid in self.cracks:
                    continue
                el = self.mesh.element(eid)
                out[eid] = propagation.indicator_from_strain(
                    eps[r], self._C[el.material_id],
                    self._material(el).f_t, conv)
        return out

    def search_and_crack(self, d: float) -> tuple[list[int], int]:
        """Crack elements one at a time until no indicator is positive.

        Re-equilibrates at the same load factor after each conversion.
        Returns (new crack ids, extra Newton iterations spent); a
        NewtonError propagates so the step driver can bisect.
        """
        newly: list[int] = []
        iters = 0
        while True:
            phis = self.indicator_map()
            cand = propagation.search_step(self.mesh, self.cracks.keys(),
                                           lambda e: phis[e])
            if cand is None:
                return newly, iters
            self.convert_to_cracked(cand)
            iters += self.newton(d)
            newly.append(cand)

    def update_histories(self):
        """End-of-step history update and normal freezing."""
        for eid, cs in self.cracks.items():
            el = self.mesh.element(eid)
            mat = self._material(el)
            w = self.opening(eid)
            deq = law.equivalent_opening(w[0], w[1])
            cs.hist = law.update_history(cs.hist, deq, mat)
            if (self.settings.freeze_normal and not cs.frozen
                    and cs.hist.delta_max > mat.delta_0):
                cs.frozen = True

    # -- load stepping ------------------------------------------------------

    def _snapshot(self):
        """Deep state copy for step rollback (mesh growth included)."""
        m = self.mesh
        return (copy.deepcopy(m.nodes), copy.deepcopy(m.elements),
                dict(m.edge_map), copy.deepcopy(m.bcs),
                copy.deepcopy(m.curves), m.version,
                copy.deepcopy(self.cracks), self.U.copy())

    def _restore(self, snap):
        m = self.mesh
        (m.nodes, m.elements, m.edge_map, m.bcs, m.curves, m.version,
         self.cracks, self.U) = snap
        self._cache_version = -1  # force cache rebuild

    def run(self, targets, on_step=None) -> RunResult:
        """Run the displacement schedule; targets are absolute load factors.

        on_step(record, sim) fires after each converged step.  Raises
        SolverAbort (with the records so far attached) when bisection is
        exhausted.
        """
        records: list[StepRecord] = []
        queue = deque((float(t), True) for t in targets)
        d_prev = 0.0
        bisections = 0
        peak = 0.0
        status = "completed"
        step_no = 0
        while queue:
            d_t, original = queue[0]
            t0 = time.perf_counter()
            snap = self._snapshot()
            try:
                iters = self.newton(d_t)
                new_cracks, extra = self.search_and_crack(d_t)
            except NewtonError as exc:
                bisections += 1
                if bisections > self.settings.max_bisect:
                    raise SolverAbort(
                        f"step to d={d_t:g} failed after "
                        f"{self.settings.max_bisect} bisections: {exc}",
                        records=records) from exc
                self._restore(snap)
                queue.appendleft((0.5 * (d_prev + d_t), False))
                continue
            iters += extra
            self.update_histories()
            step_no += 1
            force = self.driven_force()
            records.append(StepRecord(
                step=step_no, d=d_t, force=force, iterations=iters,
                n_nodes=self.mesh.n_nodes, n_cracked=len(self.cracks),
                wall_time=time.perf_counter() - t0, new_cracks=new_cracks))
            if on_step is not None:
                on_step(records[-1], self)
            d_prev = d_t
            queue.popleft()
            if original:
                bisections = 0
            peak = max(peak, force)
            ratio = self.settings.stop_drop_ratio
            if ratio is not None and peak > 0.0 and force < ratio * peak:
                status = "stopped_peak_drop"
                break
        return RunResult(records=records, status=status)


def _quad_area(c: np.ndarray) -> float:
    x, y = c[:, 0], c[:, 1]
    return 0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def schedule_targets(segments) -> list[float]:
    """Expand (increment, count) segments into absolute targets."""
    out = []
    d = 0.0
    for inc, count in segments:
        if inc <= 0 or count <= 0:
            raise ValueError("schedule increments and counts must be positive")
        for _ in range(int(count)):
            d += inc
            out.append(d)
    return out
