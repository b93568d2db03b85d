"""Acceptance suite.

Every test covers one numbered criterion at its stated tolerance and
prints a PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``
to watch them live).  The heavier benchmark runs are shared via
module-scoped fixtures.
"""

import functools
import itertools
import math
import sys

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from crackfem import cohesive_law as law
from crackfem import shape_functions as sf
from crackfem.app import main as cli_main
from crackfem.app import parse_config, build_simulation
from crackfem.cohesive_law import CrackHistory, Material, softening_traction
from crackfem.generators import gen_benchmark
from crackfem.mesh import BoundaryCondition, Mesh, edge_key
from crackfem.solver import (Simulation, SolverAbort, SolverSettings,
                             schedule_targets)
from conftest import mode_one_square


def criterion(num, text):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"ACCEPTANCE {num} FAIL: {text}", file=sys.__stdout__)
                raise
            print(f"ACCEPTANCE {num} PASS: {text}", file=sys.__stdout__)
        return wrapper
    return deco


# ---------------------------------------------------------------- 1

def two_element_patch(tp, pattern):
    """Two elements sharing an edge; element 1 carries the econn pattern."""
    mesh = Mesh()
    if tp == 4:
        for x, y in [(0, 0), (1, 0), (1, 1), (0, 1), (2, 0), (2, 1)]:
            mesh.add_node(x, y, "corner")
        mesh.add_element(4, [1, 2, 3, 4])
        mesh.add_element(4, [2, 5, 6, 3])
    else:
        for x, y in [(0, 0), (1, 0), (0, 1), (1, 1)]:
            mesh.add_node(x, y, "corner")
        mesh.add_element(3, [1, 2, 3])
        mesh.add_element(3, [2, 4, 3])
    mesh.finalize()
    el = mesh.element(1)
    for k, present in enumerate(pattern):
        if not present:
            continue
        a, b = el.edge_corner_pair(k)
        mid = 0.5 * (mesh.node(a).xy + mesh.node(b).xy)
        nid = mesh.add_node(mid[0], mid[1], "edge", parents=(a, b))
        mesh.edge_map[edge_key(a, b)] = nid
        for other in mesh.elements:
            for j in range(other.tp):
                if edge_key(*other.edge_corner_pair(j)) == edge_key(a, b):
                    other.econn[j] = nid
    return mesh


@criterion(1, "hybrid patch test, every econn pattern, 1e-12")
def test_criterion_1_hybrid_patch():
    mat = Material(E=3.0, nu=0.25, f_t=1e30, G_f=1.0)
    grad = np.array([[0.7, -0.3], [0.45, 1.1]])
    expected = np.array([grad[0, 0], grad[1, 1], grad[0, 1] + grad[1, 0]])
    for tp in (4, 3):
        shared = edge_key(2, 3)
        for pattern in itertools.product([0, 1], repeat=tp):
            mesh = two_element_patch(tp, pattern)
            for nd in mesh.nodes:
                interior = (nd.kind == "edge"
                            and edge_key(*nd.parents) == shared)
                if interior:
                    continue   # the interface node stays free
                val = grad @ nd.xy
                mesh.bcs.append(BoundaryCondition(nd.id, 0, val[0], "disp"))
                mesh.bcs.append(BoundaryCondition(nd.id, 1, val[1], "disp"))
            sim = Simulation(mesh, {0: mat}, SolverSettings())
            sim.newton(1.0)
            for el in mesh.elements:
                coords = mesh.element_coords(el)
                cols = list(el.corner_ids) + list(el.econn)
                u_e = np.zeros(2 * len(cols))
                for i, nid in enumerate(cols):
                    if nid:
                        d0, d1 = sim.dofmap.pair(nid)
                        u_e[2 * i:2 * i + 2] = sim.U[[d0, d1]]
                for xi, eta in sf.quadrature(el.tp).points:
                    b = sf.build_B(sf.eval_folded(el.tp, xi, eta, coords,
                                                  el.econn))
                    eps = b @ u_e
                    assert np.all(np.abs(eps - expected)
                                  <= 1e-12 * np.abs(expected).max())
                # folded elemental K has exactly-zero virtual rows/columns
                k_e = sim.element_integrals(el.id).K_uu
                for k in range(el.tp):
                    if not el.econn[k]:
                        sl = slice(2 * (el.tp + k), 2 * (el.tp + k) + 2)
                        assert np.all(k_e[sl, :] == 0.0)
                        assert np.all(k_e[:, sl] == 0.0)


# ---------------------------------------------------------------- 2

@criterion(2, "cohesive law: continuity exact, energy 1e-6, tangent 1e-6")
def test_criterion_2_cohesive_suite():
    mat = Material(E=30e9, nu=0.2, f_t=3e6, G_f=120.0)
    hist0 = CrackHistory()
    d0 = mat.delta_0

    # branch continuity at the threshold opening: exact
    t_lin = law.traction(d0, 0.0, hist0, mat)[0]
    assert t_lin == mat.f_t
    assert softening_traction(d0, mat) == mat.f_t
    hist = law.update_history(hist0, 7 * d0, mat)
    t_secant = law.traction(hist.delta_max, 0.0, hist, mat)[0]
    assert t_secant == softening_traction(hist.delta_max, mat)

    # dissipated energy equals the fracture energy to 1e-6 relative
    # (cutoff where the exponential has decayed to ~1e-26)
    cut = d0 + 60.0 * (mat.G_f - mat.G_f0) / mat.f_t
    ramp, _ = quad(lambda z: law.traction(z, 0.0, hist0, mat)[0], 0, d0)
    tail, _ = quad(lambda z: law.traction(z, 0.0, hist0, mat)[0], d0, cut,
                   limit=200)
    assert abs(ramp + tail - mat.G_f) <= 1e-6 * mat.G_f

    # tangent vs central finite differences: 100 states per branch
    rng = np.random.default_rng(42)
    for branch in ("L1", "L2", "U"):
        for _ in range(100):
            ang = rng.uniform(0, 2 * np.pi)
            if branch == "L1":
                h, r = hist0, rng.uniform(0.1, 0.9) * d0
            elif branch == "L2":
                h, r = hist0, rng.uniform(1.2, 25.0) * d0
            else:
                h = law.update_history(hist0, rng.uniform(5, 30) * d0, mat)
                r = rng.uniform(0.1, 0.8) * h.delta_max
            dn, dt = r * math.cos(ang), r * math.sin(ang)
            analytic = law.tangent(dn, dt, h, mat)
            step = 1e-7 * d0
            fd = np.empty((2, 2))
            for j, (pn, pt) in enumerate([(step, 0.0), (0.0, step)]):
                tp_ = law.traction(dn + pn, dt + pt, h, mat)
                tm_ = law.traction(dn - pn, dt - pt, h, mat)
                fd[0, j] = (tp_[0] - tm_[0]) / (2 * step)
                fd[1, j] = (tp_[1] - tm_[1]) / (2 * step)
            assert np.all(np.abs(analytic - fd)
                          <= 1e-6 * np.abs(analytic).max())


# ---------------------------------------------------------------- 3 + 4

MODE1_MAT = Material(E=25.85e9, nu=0.18, f_t=2.7e6, G_f=75.0)
MODE1_H = 0.1


@pytest.fixture(scope="module")
def mode_one_run():
    mesh = mode_one_square(h=MODE1_H)
    sim = Simulation(mesh, {0: MODE1_MAT}, SolverSettings())
    d_crack = MODE1_MAT.f_t * MODE1_H / MODE1_MAT.E
    targets = schedule_targets([
        (d_crack * 0.96 / 8, 8),         # elastic approach
        (d_crack / 128, 16),             # fine steps across the peak
        (4e-6, 48),                      # softening tail
    ])
    res = sim.run(targets)
    return sim, res


@criterion(3, "single-element mode-I: peak 1%, post-peak 2%, energy 2%")
def test_criterion_3_mode_one_oracle(mode_one_run):
    sim, res = mode_one_run
    area = sim.cracks[1].geom.crack_len
    assert area == pytest.approx(MODE1_H, rel=1e-12)

    # peak force equals the tensile strength times the crack chord
    peak = res.force.max()
    assert abs(peak - MODE1_MAT.f_t * area) <= 0.01 * MODE1_MAT.f_t * area

    # semi-analytic 1-dof trace of the bulk/cohesive balance
    ke = MODE1_MAT.E / MODE1_H

    def oracle(d):
        if ke * d <= MODE1_MAT.f_t:
            return ke * d
        def balance(w):
            t = (MODE1_MAT.f_t * (w / MODE1_MAT.delta_0)
                 if w <= MODE1_MAT.delta_0
                 else softening_traction(w, MODE1_MAT))
            return ke * (d - w) - t
        w = brentq(balance, 0.0, d, xtol=1e-22, rtol=8.9e-16)
        return ke * (d - w)

    i_peak = int(np.argmax(res.force))
    post = slice(i_peak, None)
    ora = np.array([oracle(d) for d in res.d[post]]) * area
    assert np.all(np.abs(res.force[post] - ora) <= 0.02 * MODE1_MAT.f_t * area)

    # dissipated energy converges to G_f per unit crack surface
    work = np.trapezoid(res.force, res.d)
    assert abs(work - MODE1_MAT.G_f * area) <= 0.02 * MODE1_MAT.G_f * area


@criterion(4, "stress-locking-free unloading to <= 2% of peak")
def test_criterion_4_stress_locking(mode_one_run):
    _, res = mode_one_run
    assert res.force[-1] <= 0.02 * res.force.max()


# ---------------------------------------------------------------- 5, 6, 8, 9

@pytest.fixture(scope="module")
def lpanel_fixture(tmp_path_factory):
    root = tmp_path_factory.mktemp("lpanel")
    out = {}
    mesh1, _ = gen_benchmark("lpanel", 1, str(root / "lp1.mesh"))
    mesh2, _ = gen_benchmark("lpanel", 2, str(root / "lp2.mesh"))
    for key, cfg_file, level in [
            ("L0", root / "lp1.config", 0),
            ("L1", root / "lp1.config", 1),
            ("L2", root / "lp1.config", 2),
            ("fine", root / "lp2.config", 0)]:
        config = parse_config(str(cfg_file))
        config.settings.adaptive_level = level
        sim = build_simulation(config)
        res = sim.run(schedule_targets(config.schedule))
        out[key] = (sim, res)
    out["root"] = root
    return out


@criterion(5, "L-panel: corner crack, horizontal band, single peak, "
              "levels within 5%")
def test_criterion_5_lpanel(lpanel_fixture):
    corner = np.array([0.25, 0.25])
    peaks = {}
    for key in ("L0", "L1", "L2"):
        sim, res = lpanel_fixture[key]
        assert res.status == "completed"
        first = next(r.new_cracks[0] for r in res.records if r.new_cracks)
        c0 = sim.mesh.centroid(sim.mesh.element(first))
        h_elem = 0.25 / 6
        assert np.linalg.norm(c0 - corner) <= 1.8 * h_elem, \
            "crack initiates at the re-entrant corner"
        # crack path: roughly horizontal, leftwards, inside the band
        cents = np.array([sim.mesh.centroid(sim.mesh.element(e))
                          for e in sim.cracks])
        assert np.all(np.abs(cents[:, 1] - corner[1]) <= 0.15 * 0.5)
        assert cents[:, 0].min() < 0.12, "crack propagated leftwards"
        # single peak followed by softening
        f = res.force
        i_peak = int(np.argmax(f))
        assert 2 < i_peak < len(f) - 5
        dropped = False
        for v in f[i_peak:]:
            dropped = dropped or v < 0.8 * f[i_peak]
            assert not (dropped and v > 0.9 * f[i_peak]), "second peak"
        assert f[-1] < 0.8 * f[i_peak], "softening after the peak"
        peaks[key] = f[i_peak]
    spread = max(abs(peaks[k] - peaks["L0"]) for k in ("L1", "L2"))
    assert spread <= 0.05 * peaks["L0"], "levels 0/1/2 agree within 5%"


@criterion(6, "adaptive node economy <= 60% of all-quadratic")
def test_criterion_6_node_economy(lpanel_fixture):
    from crackfem.mesh import all_quadratic_node_count
    sim, _ = lpanel_fixture["L0"]
    assert sim.mesh.n_nodes <= 0.6 * all_quadratic_node_count(sim.mesh)


@criterion(8, "bit-identical CSVs across two identical runs")
def test_criterion_8_determinism(lpanel_fixture):
    root = lpanel_fixture["root"]
    outs = []
    for tag in ("detA", "detB"):
        out_dir = root / tag
        rc = cli_main(["run", str(root / "lp1.config"),
                       "--out", str(out_dir)])
        assert rc == 0
        outs.append(out_dir)
    a = (outs[0] / "force_displacement.csv").read_bytes()
    b = (outs[1] / "force_displacement.csv").read_bytes()
    assert a == b
    # stats rows match except the wall-clock column
    rows = []
    for o in outs:
        lines = (o / "stats.csv").read_text().strip().splitlines()
        rows.append([",".join(ln.split(",")[:-1]) for ln in lines])
    assert rows[0] == rows[1]


@criterion(9, "peak load across two refinements within 10%")
def test_criterion_9_mesh_dependency(lpanel_fixture):
    coarse = lpanel_fixture["L0"][1].force.max()
    fine = lpanel_fixture["fine"][1].force.max()
    assert abs(fine - coarse) <= 0.10 * coarse


# ---------------------------------------------------------------- 7

@pytest.fixture(scope="module")
def disk_fixture(tmp_path_factory):
    root = tmp_path_factory.mktemp("disk")
    gen_benchmark("disk", 2, str(root / "disk.mesh"))
    runs = {}
    for tag, keep_slit in (("slit", True), ("intact", False)):
        config = parse_config(str(root / "disk.config"))
        if not keep_slit:
            config.embedded_cracks = []
        sim = build_simulation(config)
        try:
            res = sim.run(schedule_targets(config.schedule))
            records = res.records
        except SolverAbort as exc:
            # the splitting failure is a snap: displacement control stops
            # at the limit point, which is exactly the peak of interest
            records = exc.records
        runs[tag] = (sim, records)
    return runs


@criterion(7, "disk with embedded slit: normalized peak < 1, wing cracks")
def test_criterion_7_disk(disk_fixture):
    sim, records = disk_fixture["slit"]
    _, intact_records = disk_fixture["intact"]
    peak_slit = max(r.force for r in records)
    peak_intact = max(r.force for r in intact_records)
    assert peak_slit / peak_intact < 1.0, "slit weakens the disk"

    r_disk = 0.05
    a = 0.3 * r_disk
    tip = a / math.sqrt(2)
    tips = [np.array([tip, tip]), np.array([-tip, -tip])]
    new = [e for e, cs in sim.cracks.items() if not cs.embedded]
    assert new, "wing cracks appeared"
    cents = {e: sim.mesh.centroid(sim.mesh.element(e)) for e in new}
    for t in tips:
        near = [e for e, c in cents.items()
                if np.linalg.norm(c - t) <= 0.25 * r_disk]
        assert near, f"wing cracks emanate from the tip at {t}"
    # the pattern extends from the tips toward the loading points
    assert max(abs(c[1]) for c in cents.values()) > 1.5 * tip
