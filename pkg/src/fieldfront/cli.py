"""Command-line driver: load, remesh, export, report.

Exit codes: 0 success, 1 configuration error, 2 IO/parse error,
3 algorithm failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass

from .errors import ConfigError, FieldConvergenceError, MeshError, MeshParseError
from .estimator import Remesher
from .io import load_mesh, write_field_csv, write_obj, write_vtk
from .validation import check_run_params

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_ALGORITHM = 3

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    input: str
    output: str | None = None
    vtk: str | None = None
    fmt: str | None = None
    order: int = 4
    alpha: float = 0.75
    size_const: float | None = None
    size_graded: tuple[float, float, float] | None = None
    norm: str | None = None
    workers: int = 1
    seed_ordering: str = "topological"
    optimize: str = "auto"
    opt_sweeps: int = 20
    recombine: str = "off"
    quad_threshold: float = 0.3
    dump_field: str | None = None
    stats: str | None = None

    def validate(self):
        if self.size_const is None and self.size_graded is None:
            raise ConfigError("one of --size-const or --size-graded is required")
        if self.size_const is not None and self.size_graded is not None:
            raise ConfigError("--size-const and --size-graded are mutually exclusive")
        if self.optimize not in ("on", "off", "auto"):
            raise ConfigError("--optimize must be on, off or auto")
        if self.recombine not in ("on", "off"):
            raise ConfigError("--recombine must be on or off")
        if self.output is None and self.vtk is None:
            raise ConfigError("need at least one of --output or --vtk")
        check_run_params(
            self.order, self.alpha, self.workers, self.norm,
            self.seed_ordering, self.recombine == "on",
        )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fieldfront",
        description=(
            "Remesh a triangulated surface by frontal point insertion along a "
            "cross (order 4) or asterisk (order 6) direction field."
        ),
    )
    p.add_argument("input", help="input mesh (OBJ or OFF)")
    p.add_argument("--output", help="output OBJ path")
    p.add_argument("--vtk", help="output legacy-ASCII VTK path")
    p.add_argument("--format", dest="fmt", choices=["obj", "off"], help="input format override")
    p.add_argument("--order", type=int, default=4, choices=[4, 6], help="field symmetry order")
    p.add_argument("--alpha", type=float, default=0.75, help="exclusion-zone factor in (0,1)")
    p.add_argument("--size-const", type=float, help="constant target size H")
    p.add_argument("--size-graded", help="graded size HMIN,HMAX,G")
    p.add_argument("--norm", choices=["linf", "l2", "linf-frame"], help="filter norm (default: linf for order 4, l2 for order 6)")
    p.add_argument("--workers", type=int, default=1, help="parallel front queues")
    p.add_argument("--seed-ordering", choices=["topo", "hilbert"], default="topo")
    p.add_argument("--optimize", choices=["on", "off", "auto"], default="auto", help="cavity relocation pass (auto: on for order 4)")
    p.add_argument("--opt-sweeps", type=int, default=20)
    p.add_argument("--recombine", choices=["on", "off"], default="off")
    p.add_argument("--quad-threshold", type=float, default=0.3)
    p.add_argument("--dump-field", help="write the direction field as CSV (vertex,theta,order)")
    p.add_argument("--stats", help="write the JSON stats report here (default: stdout)")
    return p


def parse_config(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    graded = None
    if args.size_graded:
        try:
            parts = [float(x) for x in args.size_graded.split(",")]
        except ValueError as exc:
            raise ConfigError("--size-graded expects HMIN,HMAX,G") from exc
        if len(parts) != 3:
            raise ConfigError("--size-graded expects HMIN,HMAX,G")
        graded = tuple(parts)
    return RunConfig(
        input=args.input,
        output=args.output,
        vtk=args.vtk,
        fmt=args.fmt,
        order=args.order,
        alpha=args.alpha,
        size_const=args.size_const,
        size_graded=graded,
        norm=args.norm,
        workers=args.workers,
        seed_ordering="topological" if args.seed_ordering == "topo" else "hilbert",
        optimize=args.optimize,
        opt_sweeps=args.opt_sweeps,
        recombine=args.recombine,
        quad_threshold=args.quad_threshold,
        dump_field=args.dump_field,
        stats=args.stats,
    )


def run(config: RunConfig) -> int:
    try:
        config.validate()
    except ConfigError as exc:
        print(f"fieldfront: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        mesh = load_mesh(config.input, config.fmt)
    except (MeshParseError, OSError) as exc:
        print(f"fieldfront: input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except MeshError as exc:
        print(f"fieldfront: invalid mesh: {exc}", file=sys.stderr)
        return EXIT_IO

    size = config.size_const if config.size_const is not None else config.size_graded
    optimize = None if config.optimize == "auto" else (config.optimize == "on")
    remesher = Remesher(
        order=config.order,
        alpha=config.alpha,
        size=size,
        norm=config.norm,
        workers=config.workers,
        seed_ordering=config.seed_ordering,
        optimize=optimize,
        recombine=config.recombine == "on",
        quad_threshold=config.quad_threshold,
        opt_sweeps=config.opt_sweeps,
    )
    try:
        remesher.fit(mesh)
        if config.dump_field:
            write_field_csv(config.dump_field, remesher.field_)
        out = remesher.transform(mesh)
    except ConfigError as exc:
        print(f"fieldfront: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MeshError, FieldConvergenceError) as exc:
        stage = "field" if isinstance(exc, FieldConvergenceError) else "remeshing"
        print(f"fieldfront: {stage} failed: {exc}", file=sys.stderr)
        return EXIT_ALGORITHM

    try:
        faces = out.polygons()
        if config.output:
            write_obj(config.output, out.vertices, faces)
        if config.vtk:
            cell_data = None
            if out.quad_pairs is None and out.tri_quality is not None:
                cell_data = {"q_t": out.tri_quality}
            write_vtk(config.vtk, out.vertices, faces, cell_data)
    except OSError as exc:
        print(f"fieldfront: output error: {exc}", file=sys.stderr)
        return EXIT_IO

    report = json.dumps(remesher.stats_, indent=2, sort_keys=True)
    if config.stats:
        try:
            with open(config.stats, "w") as fh:
                fh.write(report + "\n")
        except OSError as exc:
            print(f"fieldfront: output error: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        print(report)
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="fieldfront: %(message)s")
    try:
        config = parse_config(argv)
    except ConfigError as exc:
        print(f"fieldfront: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
