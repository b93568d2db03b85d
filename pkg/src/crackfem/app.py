"""Command-line front-end.

    crackfem run <config> [--level {0,1,2}] [--max-steps N] [--out DIR]
    crackfem gen <name> --refine K -o PATH [--case {1,2}]

Exit codes: 0 success, 2 configuration/mesh error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import generators, output
from .cohesive_law import Material
from .mesh import MeshError, load_mesh
from .solver import (Simulation, SolverAbort, SolverSettings,
                     schedule_targets)


class ConfigError(Exception):
    pass


@dataclass
class EmbeddedCrackSpec:
    element: int
    angle_deg: float
    opening: float


@dataclass
class RunConfig:
    mesh_path: Path
    materials: dict[int, Material]
    schedule: list[tuple[float, int]]
    settings: SolverSettings
    embedded_cracks: list[EmbeddedCrackSpec] = field(default_factory=list)
    out_dir: Path = Path("out")
    cadence: int = 10


def _parse_bool(raw: str, where: str) -> bool:
    val = raw.strip().lower()
    if val in ("on", "true", "1", "yes"):
        return True
    if val in ("off", "false", "0", "no"):
        return False
    raise ConfigError(f"{where}: expected on/off, got {raw!r}")


def _parse_schedule(raw: str) -> list[tuple[float, int]]:
    """Comma-separated segments of the form '<increment> x <count>'."""
    segments = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            inc_s, count_s = part.split("x")
            segments.append((float(inc_s), int(count_s)))
        except ValueError as exc:
            raise ConfigError(
                f"[loading] schedule: cannot parse segment {part!r} "
                f"(expected '<increment> x <count>')") from exc
    if not segments:
        raise ConfigError("[loading] schedule is empty")
    return segments


def _parse_material(cp, section: str) -> Material:
    vals = {}
    for key in ("E", "nu", "f_t", "G_f"):
        if not cp.has_option(section, key):
            raise ConfigError(f"[{section}] missing key {key}")
        try:
            vals[key] = cp.getfloat(section, key)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from exc
    try:
        return Material(**vals)
    except ValueError as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc


def parse_config(path: str) -> RunConfig:
    cfg_path = Path(path)
    if not cfg_path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read(cfg_path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    if not cp.has_section("model") or not cp.has_option("model", "mesh"):
        raise ConfigError(f"{path}: [model] section with a mesh key is required")
    mesh_path = Path(cp.get("model", "mesh"))
    if not mesh_path.is_absolute():
        mesh_path = cfg_path.parent / mesh_path

    materials = {}
    for section in cp.sections():
        if section == "material":
            materials[0] = _parse_material(cp, section)
        elif section.startswith("material."):
            try:
                mid = int(section.split(".", 1)[1])
            except ValueError as exc:
                raise ConfigError(f"bad material section [{section}]") from exc
            materials[mid] = _parse_material(cp, section)
    if not materials:
        raise ConfigError(f"{path}: at least one [material] section is required")

    if not cp.has_option("loading", "schedule"):
        raise ConfigError(f"{path}: [loading] schedule is required")
    schedule = _parse_schedule(cp.get("loading", "schedule"))

    settings = SolverSettings()
    if cp.has_section("solver"):
        for key, cast in (("tol_rel", float), ("tol_abs_factor", float),
                          ("max_iter", int), ("max_bisect", int)):
            if cp.has_option("solver", key):
                try:
                    setattr(settings, key, cast(cp.get("solver", key)))
                except ValueError as exc:
                    raise ConfigError(f"[solver] {key}: {exc}") from exc
    if cp.has_option("model", "adaptive_level"):
        level = cp.getint("model", "adaptive_level")
        if level not in (0, 1, 2):
            raise ConfigError(f"[model] adaptive_level must be 0, 1 or 2")
        settings.adaptive_level = level
    if cp.has_option("model", "freeze_normal"):
        settings.freeze_normal = _parse_bool(
            cp.get("model", "freeze_normal"), "[model] freeze_normal")
    if cp.has_option("model", "eig_shear_convention"):
        settings.eig_shear_convention = cp.get(
            "model", "eig_shear_convention").strip()
    if cp.has_option("loading", "stop_drop_ratio"):
        settings.stop_drop_ratio = cp.getfloat("loading", "stop_drop_ratio")

    embedded = []
    if cp.has_option("propagation", "embedded_cracks"):
        for item in cp.get("propagation", "embedded_cracks").split():
            try:
                eid_s, ang_s, opn_s = item.split(":")
                embedded.append(EmbeddedCrackSpec(
                    element=int(eid_s), angle_deg=float(ang_s),
                    opening=float(opn_s)))
            except ValueError as exc:
                raise ConfigError(
                    f"[propagation] embedded_cracks: bad item {item!r} "
                    f"(expected id:angle:opening)") from exc

    out_dir = Path(cp.get("output", "dir", fallback="out"))
    if not out_dir.is_absolute():
        out_dir = cfg_path.parent / out_dir
    cadence = cp.getint("output", "cadence", fallback=10)
    return RunConfig(mesh_path=mesh_path, materials=materials,
                     schedule=schedule, settings=settings,
                     embedded_cracks=embedded, out_dir=out_dir,
                     cadence=cadence)


def build_simulation(config: RunConfig) -> Simulation:
    if not config.mesh_path.is_file():
        raise ConfigError(f"mesh file not found: {config.mesh_path}")
    mesh = load_mesh(str(config.mesh_path))
    sim = Simulation(mesh, config.materials, config.settings)
    for spec in config.embedded_cracks:
        if not 1 <= spec.element <= len(mesh.elements):
            raise ConfigError(
                f"embedded crack references missing element {spec.element}")
        sim.embed_crack(spec.element, spec.angle_deg, spec.opening)
    return sim


def run_command(args) -> int:
    try:
        config = parse_config(args.config)
        if args.level is not None:
            config.settings.adaptive_level = args.level
        if args.out is not None:
            config.out_dir = Path(args.out)
        targets = schedule_targets(config.schedule)
        if args.max_steps is not None:
            targets = targets[:args.max_steps]
        sim = build_simulation(config)
    except (ConfigError, MeshError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    force_fh = open(out_dir / "force_displacement.csv", "w", encoding="utf-8")
    stats_fh = open(out_dir / "stats.csv", "w", encoding="utf-8")
    output.write_force_csv_header(force_fh)
    output.write_stats_csv_header(stats_fh)

    def on_step(record, live_sim):
        output.write_force_csv_row(force_fh, record)
        output.write_stats_csv_row(stats_fh, record)
        force_fh.flush()
        stats_fh.flush()
        if config.cadence > 0 and record.step % config.cadence == 0:
            output.write_vtk(
                str(out_dir / f"state_{record.step:05d}.vtk"), live_sim,
                title=f"step {record.step} d={record.d:g}")
        print(f"step {record.step:4d}  d={record.d:.6e}  "
              f"F={record.force:.6e}  iters={record.iterations}  "
              f"cracked={record.n_cracked}  nodes={record.n_nodes}")

    status = 0
    try:
        result = sim.run(targets, on_step=on_step)
        print(f"run {result.status}: {len(result.records)} steps, "
              f"{len(sim.cracks)} cracked elements, "
              f"{sim.mesh.n_nodes} nodes")
    except SolverAbort as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        status = 3
    finally:
        output.write_vtk(str(out_dir / "state_final.vtk"), sim,
                         title="final state")
        force_fh.close()
        stats_fh.close()
    return status


def gen_command(args) -> int:
    try:
        mesh_path, cfg_path = generators.gen_benchmark(
            args.name, args.refine, args.output, case=args.case)
    except (ValueError, MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {mesh_path} and {cfg_path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="crackfem",
        description="2D quasi-brittle fracture with adaptive cracking elements")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation config")
    p_run.add_argument("config")
    p_run.add_argument("--level", type=int, choices=(0, 1, 2), default=None,
                       help="override the adaptive enrichment level")
    p_run.add_argument("--max-steps", type=int, default=None)
    p_run.add_argument("--out", default=None, help="override output directory")
    p_run.set_defaults(func=run_command)

    p_gen = sub.add_parser("gen", help="generate a benchmark mesh + config")
    p_gen.add_argument("name", choices=generators.BENCHMARKS)
    p_gen.add_argument("--refine", type=int, default=1)
    p_gen.add_argument("-o", "--output", required=True)
    p_gen.add_argument("--case", type=int, choices=(1, 2), default=1,
                       help="beam3pt material case")
    p_gen.set_defaults(func=gen_command)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
