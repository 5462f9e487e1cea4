"""Command-line entry point.

Exit status: 0 on success, 1 when a contract or validation check fails,
2 on usage errors (bad flags, unreadable config).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .arch import ArchConfig, dumps_config, load_config
from .errors import ConfigurationError, RenderSimError
from .images import atomic_write_bytes, compare_images, write_pfm, write_ppm
from .ir import compile_pipeline, dumps_graph, execute_graph, validate_graph
from .reference import render_reference
from .scene import (PIPELINE_KINDS, SCALES, default_camera, default_sampling,
                    generate_synthetic_scene, load_scene, save_scene, validate_scene)
from .sim import dumps_report, estimate_energy, report_csv, simulate, sweep_csv, sweep_scaling

OUT_ENV = "RENDERSIM_OUT"
RUN_MANIFEST = "run.json"
SCALE_CHOICES = (1, 2, 4)


@dataclasses.dataclass(frozen=True)
class RunManifest:
    command: str
    config_path: Optional[str]
    seed: Optional[int]
    output_dir: str
    artifacts: dict  # file name -> sha256
    arguments: dict

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n"


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class _Run:
    """Collects emitted files and writes the run manifest last."""

    def __init__(self, args, out: Path):
        self.args = args
        self.out = out
        self.files: list[Path] = []

    def text(self, name: str, content: str) -> Path:
        return self.add(atomic_write_bytes(self.out / name, content.encode("utf-8")))

    def add(self, path: Path) -> Path:
        self.files.append(Path(path))
        return path

    def finish(self) -> RunManifest:
        arts = {}
        for f in sorted(set(self.files)):
            if f.is_dir():
                for sub in sorted(f.rglob("*")):
                    if sub.is_file():
                        arts[sub.relative_to(self.out).as_posix()] = sha256_file(sub)
            else:
                arts[f.relative_to(self.out).as_posix()] = sha256_file(f)
        keep = {k: v for k, v in sorted(vars(self.args).items())
                if k not in ("func", "out") and not callable(v)}
        m = RunManifest(self.args.command, getattr(self.args, "config", None),
                        getattr(self.args, "seed", None), str(self.out), arts, keep)
        atomic_write_bytes(self.out / RUN_MANIFEST, m.to_json().encode("utf-8"))
        return m


def _out_dir(args, stem: str) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    root = Path(os.environ.get(OUT_ENV, "runs"))
    return root / stem


def _config(args) -> ArchConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ArchConfig()
    return cfg.scaled(getattr(args, "pe_scale", 1), getattr(args, "sram_scale", 1))


def _assets(args):
    if getattr(args, "scene", None):
        assets = load_scene(args.scene)
        if assets.kind != args.pipeline:
            raise ConfigurationError(f"scene holds a {assets.kind!r} scene, "
                                     f"--pipeline asked for {args.pipeline!r}")
        return assets
    return generate_synthetic_scene(args.pipeline, args.seed, args.scale)


def _sampling(args, scale: str):
    s = default_sampling(scale)
    if getattr(args, "samples", None):
        s = dataclasses.replace(s, samples_per_ray=args.samples)
    if getattr(args, "no_early_termination", False):
        s = dataclasses.replace(s, early_termination=False)
    return s


def _stem(args, cmd: str) -> str:
    return f"{cmd}-{args.pipeline}-{args.scale}-s{args.seed}"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gen_scene(args) -> int:
    run = _Run(args, _out_dir(args, _stem(args, "scene")))
    assets = generate_synthetic_scene(args.pipeline, args.seed, args.scale)
    issues = validate_scene(assets)
    if issues:
        print("\n".join(issues), file=sys.stderr)
        return 1
    run.add(save_scene(assets, run.out / "scene"))
    run.finish()
    print(run.out)
    return 0


def cmd_render(args) -> int:
    run = _Run(args, _out_dir(args, _stem(args, "render")))
    assets = _assets(args)
    camera = default_camera(assets.scale)
    sampling = _sampling(args, assets.scale)
    graph = compile_pipeline(args.pipeline, assets, camera, sampling)
    issues = validate_graph(graph)
    if issues:
        print("\n".join(issues), file=sys.stderr)
        return 1
    image = execute_graph(graph, assets, camera)
    run.text("graph.json", dumps_graph(graph))
    run.add(write_ppm(run.out / "image.ppm", image))
    run.add(write_pfm(run.out / "image.pfm", image))
    if args.oracle:
        ref = render_reference(args.pipeline, assets, camera, sampling)
        run.add(write_ppm(run.out / "oracle.ppm", ref))
        run.add(write_pfm(run.out / "oracle.pfm", ref))
    run.finish()
    print(run.out)
    return 0


def cmd_simulate(args) -> int:
    run = _Run(args, _out_dir(args, _stem(args, "simulate")
                        + f"-p{args.pe_scale}-m{args.sram_scale}"))
    cfg = _config(args)
    assets = _assets(args)
    camera = default_camera(assets.scale)
    graph = compile_pipeline(args.pipeline, assets, camera, _sampling(args, assets.scale))
    issues = validate_graph(graph)
    if issues:
        print("\n".join(issues), file=sys.stderr)
        return 1
    report = simulate(graph, cfg)
    energy = estimate_energy(report.tally, cfg.energy)
    run.text("config.json", dumps_config(cfg))
    run.text("cost.csv", report_csv(report))
    run.text("cost.json", dumps_report(report, energy))
    run.finish()
    fps = report.fps
    print(f"{report.total_cycles} cycles/frame, "
          + (f"{fps:.2f} FPS" if fps is not None else "empty frame"))
    return 0


def cmd_sweep(args) -> int:
    run = _Run(args, _out_dir(args, _stem(args, "sweep")))
    cfg = load_config(args.config) if args.config else ArchConfig()
    assets = generate_synthetic_scene(args.pipeline, args.seed, args.scale)
    camera = default_camera(args.scale)
    graph = compile_pipeline(args.pipeline, assets, camera, _sampling(args, args.scale))
    cells = sweep_scaling(graph, cfg)
    run.text("config.json", dumps_config(cfg))
    run.text("sweep.csv", sweep_csv(cells))
    run.finish()
    sram = sorted({c.sram_scale for c in cells})
    pes = sorted({c.pe_scale for c in cells})
    table = {(c.pe_scale, c.sram_scale): c.speedup for c in cells}
    print("SRAM\\PE " + " ".join(f"{p:>6}x" for p in pes))
    for s in sram:
        print(f"{s:>6}x  " + " ".join(f"{table[(p, s)]:>7.2f}" for p in pes))
    return 0


def cmd_print_config(args) -> int:
    sys.stdout.write(dumps_config(_config(args)))
    return 0


def cmd_validate(args) -> int:
    assets = _assets(args)
    issues = list(validate_scene(assets))
    if not issues:
        camera = default_camera(assets.scale)
        try:
            graph = compile_pipeline(args.pipeline, assets, camera, _sampling(args, assets.scale))
        except RenderSimError as exc:
            issues.append(str(exc))
        else:
            issues.extend(validate_graph(graph))
    for line in issues:
        print(line)
    if not issues:
        print("ok")
    return 1 if issues else 0


def cmd_compare(args) -> int:
    res = compare_images(args.image_a, args.image_b, args.tolerance)
    chans = " ".join(f"{x:.6g}" for x in res.max_abs)
    print(f"max-abs per channel: {chans}; {'PASS' if res.passed else 'FAIL'} "
          f"at tolerance {args.tolerance:g}")
    return 0 if res.passed else 1


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _scene_flags(p, *, scene_dir=True, default_scale="tiny", default_kind=None):
    p.add_argument("--pipeline", choices=PIPELINE_KINDS, required=default_kind is None,
                   default=default_kind)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", choices=SCALES, default=default_scale)
    p.add_argument("--samples", type=int, help="samples per ray (default: scale preset)")
    p.add_argument("--no-early-termination", action="store_true")
    if scene_dir:
        p.add_argument("--scene", help="load assets from a scene directory instead")


def _arch_flags(p, scales=True):
    p.add_argument("--config", help="architecture config file (JSON)")
    if scales:
        p.add_argument("--pe-scale", type=int, choices=SCALE_CHOICES, default=1)
        p.add_argument("--sram-scale", type=int, choices=SCALE_CHOICES, default=1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rendersim", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"rendersim {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scene", help="generate and save a synthetic scene")
    _scene_flags(p, scene_dir=False)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_scene)

    p = sub.add_parser("render", help="render an image through the micro-operator graph")
    _scene_flags(p)
    p.add_argument("--oracle", action="store_true", help="also write the per-pixel oracle image")
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("simulate", help="estimate cycles, traffic and FPS for one frame")
    _scene_flags(p)
    _arch_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="PE/SRAM scaling table")
    _scene_flags(p, scene_dir=False, default_scale="medium", default_kind="hash-grid")
    _arch_flags(p, scales=False)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("print-config", help="dump the effective architecture config")
    _arch_flags(p)
    p.set_defaults(func=cmd_print_config)

    p = sub.add_parser("validate", help="check scene and graph invariants")
    _scene_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compare", help="max-abs difference between two images")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.add_argument("--tolerance", type=float, default=0.0)
    p.set_defaults(func=cmd_compare)
    return ap


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RenderSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
